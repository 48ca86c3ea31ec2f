"""Frame-potential search for Weyl-Heisenberg SIC fiducial vectors.

The cost ``(1/d) sum_p |<phi|D_p|phi>|^4`` is bounded below by ``2/(d+1)``
with equality exactly at fiducial vectors. It is minimised from random
starts with L-BFGS, then the overlap equations are solved to binary64
precision by Gauss-Newton.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .clifford import (
    DimensionContext,
    EmptyEigenspaceError,
    Subspace,
    SymplecticIndex,
    clifford_element,
    eigenspace_of_unitary,
    projective_order,
    same_up_to_phase,
    zauner_dims,
    zauner_matrix,
)
from .whgroup import make_context, overlap_table

log = logging.getLogger(__name__)


def welch_bound(d: int, t: int) -> float:
    if d < 1 or t < 1:
        raise ValueError("need d >= 1 and t >= 1")
    return 1.0 / comb(d + t - 1, t)


def sic_bound(d: int) -> float:
    return 2.0 / (d + 1)


def sic_cost(ctx: DimensionContext, phi) -> float:
    """Index-sum form sum_{j,k} |sum_l c*_{j+l} c_l c*_{k+l} c_{j+k+l}|^2 of the cost."""
    c = np.asarray(phi, dtype=complex)
    c = c / np.linalg.norm(c)
    d = ctx.d
    # A[j, l] = conj(c_{j+l}) c_l ; S[j, k] = sum_l A[j, l] conj(A[j, l+k])
    A = np.conj(c[ctx.shift_index]) * c[None, :]
    total = 0.0
    for k in range(d):
        S = np.sum(A * np.conj(np.roll(A, -k, axis=1)), axis=1)
        total += float(np.sum(np.abs(S) ** 2))
    return total


def sic_cost_displacement_form(ctx: DimensionContext, phi) -> float:
    c = np.asarray(phi, dtype=complex)
    c = c / np.linalg.norm(c)
    return float(np.sum(np.abs(overlap_table(ctx, c)) ** 4) / ctx.d)


def _weighted_displacement_sum(ctx: DimensionContext, h: np.ndarray, c: np.ndarray) -> np.ndarray:
    """sum_p h[p] D_p c over p in Z_d^2."""
    d = ctx.d
    H = d * np.fft.ifft(h * np.conj(ctx.tau_table), axis=1)
    return np.sum(H * c[ctx.unshift_index], axis=0)


def cost_and_wirtinger(ctx: DimensionContext, c: np.ndarray):
    """Cost of c/|c| and its derivative with respect to conj(c)."""
    d = ctx.d
    n = float(np.real(np.vdot(c, c)))
    g = overlap_table(ctx, c)
    a2 = np.abs(g) ** 2
    N = float(np.sum(a2 * a2))
    dN = 4 * _weighted_displacement_sum(ctx, a2 * np.conj(g), c)
    cost = N / (d * n ** 4)
    w = dN / (d * n ** 4) - 4 * N * c / (d * n ** 5)
    return cost, w


def sic_cost_gradient(ctx: DimensionContext, phi) -> np.ndarray:
    """Gradient of cost(c/|c|) in real coordinates [Re c, Im c]."""
    c = np.asarray(phi, dtype=complex)
    _, w = cost_and_wirtinger(ctx, c)
    return np.concatenate([2 * w.real, 2 * w.imag])


# --- symmetry restriction ------------------------------------------------------------

def antiunitary_fixed_space(M: np.ndarray) -> Subspace:
    """Real-linear fixed set {v : M conj(v) = v} of an anti-unitary involution."""
    d = M.shape[0]
    if np.max(np.abs(M @ np.conj(M) - np.eye(d))) > 1e-9:
        raise EmptyEigenspaceError("anti-unitary element squares to -1: no fixed rays")
    # real 2d x 2d matrix of v -> (v + M conj v) / 2
    Q = np.empty((2 * d, 2 * d))
    for j in range(2 * d):
        v = np.zeros(d, dtype=complex)
        v[j % d] = 1.0 if j < d else 1j
        u = (v + M @ np.conj(v)) / 2
        Q[:, j] = np.concatenate([u.real, u.imag])
    Q = (Q + Q.T) / 2
    w, vecs = np.linalg.eigh(Q)
    top = vecs[:, w > 0.5]
    basis = top[:d] + 1j * top[d:]
    return Subspace(basis, real_structure=True)


def restrict_to_symmetry(ctx: DimensionContext, g: SymplecticIndex, eigenvalue_index: int = 0) -> Subspace:
    """Eigenspace of E_g (unitary) or fixed set of E_g (anti-unitary, order 2).

    Unitary elements are rescaled so that E^n = I with n the projective
    order; an element equal to Zauner's matrix up to phase uses Z itself so
    that the index matches the Z_k labels.
    """
    E = clifford_element(ctx, g)
    n = projective_order(ctx, g)
    if E.antiunitary:
        if n != 2:
            raise ValueError(f"anti-unitary restriction needs order 2, element has order {n}")
        return antiunitary_fixed_space(E.matrix)
    d = ctx.d
    U = E.matrix
    rank = None
    if d >= 2 and same_up_to_phase(U, zauner_matrix(ctx)):
        U = zauner_matrix(ctx)
        rank = zauner_dims(d)[eigenvalue_index % 3] if n == 3 else None
    else:
        c = np.linalg.matrix_power(U, n)[0, 0]
        U = U * np.exp(-1j * np.angle(c) / n)
    if not 0 <= eigenvalue_index < n:
        raise ValueError(f"eigenvalue index must lie in [0, {n})")
    basis = eigenspace_of_unitary(U, n, eigenvalue_index, rank)
    if basis.shape[1] == 0:
        raise EmptyEigenspaceError(f"eigenspace {eigenvalue_index} of the order-{n} element is empty")
    return Subspace(basis)


def full_space(d: int) -> Subspace:
    return Subspace(np.eye(d, dtype=complex))


# --- L-BFGS ------------------------------------------------------------------------

@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    reason: str


def lbfgs(fun, x0, *, max_iterations=2000, gtol=1e-9, ftarget=None, memory=10,
          c1=1e-4, shrink=0.5, max_backtracks=40, stall_window=200,
          stall_tol=1e-12) -> LbfgsResult:
    """Minimise fun (returning value, gradient) with L-BFGS and Armijo backtracking.

    Stops on gradient norm below ``gtol``, value below ``ftarget``, a failed
    line search, or less than ``stall_tol`` decrease over ``stall_window``
    iterations.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    history = [f]
    S, Y = [], []
    reason = "max_iterations"
    it = 0
    for it in range(1, max_iterations + 1):
        gn = float(np.linalg.norm(g))
        if gn < gtol:
            reason = "gtol"
            break
        if ftarget is not None and f < ftarget:
            reason = "ftarget"
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y in reversed(list(zip(S, Y))):
            a = s @ q / (y @ s)
            alphas.append(a)
            q -= a * y
        if S:
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        else:
            q *= min(1.0, 1.0 / gn)
        for (s, y), a in zip(zip(S, Y), reversed(alphas)):
            b = y @ q / (y @ s)
            q += (a - b) * s
        p = -q
        slope = g @ p
        if slope >= 0:
            S.clear()
            Y.clear()
            p = -g
            slope = -gn * gn
        step = 1.0
        for _ in range(max_backtracks):
            xn = x + step * p
            fn, gnew = fun(xn)
            if fn <= f + c1 * step * slope:
                break
            step *= shrink
        else:
            reason = "line_search"
            break
        s, y = xn - x, gnew - g
        if y @ s > 1e-300:
            S.append(s)
            Y.append(y)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
        x, f, g = xn, fn, gnew
        history.append(f)
        if len(history) > stall_window and history[-stall_window - 1] - f < stall_tol:
            reason = "stalled"
            break
    return LbfgsResult(x, f, float(np.linalg.norm(g)), it, reason)


# --- coordinates on a subspace --------------------------------------------------------

def _to_vector(sub: Subspace, x: np.ndarray) -> np.ndarray:
    m = sub.dim
    a = x if sub.real_structure else x[:m] + 1j * x[m:]
    return sub.basis @ a


def _to_coords(sub: Subspace, v: np.ndarray) -> np.ndarray:
    a = sub.basis.conj().T @ v
    if sub.real_structure:
        return a.real.copy()
    return np.concatenate([a.real, a.imag])


def _objective(ctx: DimensionContext, sub: Subspace):
    bound = sic_bound(ctx.d)
    B = sub.basis

    def fun(x):
        c = _to_vector(sub, x)
        cost, w = cost_and_wirtinger(ctx, c)
        u = B.conj().T @ w
        grad = 2 * u.real if sub.real_structure else np.concatenate([2 * u.real, 2 * u.imag])
        return cost - bound, grad

    return fun


# --- polish --------------------------------------------------------------------------

def _overlap_jacobian(ctx: DimensionContext, c: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Wirtinger derivatives of |<c|D_p|c>|^2 / |c|^4 at |c| = 1, rows p != 0."""
    d = ctx.d
    r = np.arange(d)
    p1 = r[:, None, None]
    p2 = r[None, :, None]
    m = r[None, None, :]
    # (D_p c)[m] = tau^(p1 p2) omega^(p2 (m - p1)) c[m - p1]
    Dc = ctx.tau_pow(p1 * p2) * ctx.omega_pow(p2 * (m - p1)) * c[(m - p1) % d]
    # (D_p^dag c)[m] = (D_{-p} c)[m] = tau^(p1 p2) omega^(-p2 (m + p1)) c[m + p1]
    Dmc = ctx.tau_pow(p1 * p2) * ctx.omega_pow(-p2 * (m + p1)) * c[(m + p1) % d]
    W = (np.conj(g)[..., None] * Dc + g[..., None] * Dmc
         - 2 * (np.abs(g) ** 2)[..., None] * c[None, None, :])
    return W.reshape(d * d, d)[1:]


def polish(ctx: DimensionContext, phi, sub: Subspace | None = None, *, max_steps: int = 25,
           target: float = 1e-15) -> np.ndarray:
    """Gauss-Newton on the overlap equations |<phi|D_p|phi>|^2 = 1/(d+1), p != 0."""
    d = ctx.d
    sub = sub or full_space(d)
    c = np.asarray(phi, dtype=complex)
    c = c / np.linalg.norm(c)
    best, best_res = c, np.inf
    B = sub.basis
    for _ in range(max_steps):
        g = overlap_table(ctx, c)
        res = (np.abs(g) ** 2).ravel()[1:] - 1.0 / (d + 1)
        rmax = float(np.max(np.abs(res))) if res.size else 0.0
        if rmax < best_res:
            best, best_res = c, rmax
        elif rmax > 0.5 * best_res:
            break
        if rmax < target:
            break
        # row p holds (B^H w_p)^T
        U = _overlap_jacobian(ctx, c, g) @ np.conj(B)
        if sub.real_structure:
            Jac = 2 * U.real
        else:
            Jac = np.hstack([2 * U.real, 2 * U.imag])
        step, *_ = np.linalg.lstsq(Jac, -res, rcond=1e-12)
        x = _to_coords(sub, c) + step
        c = _to_vector(sub, x)
        c = c / np.linalg.norm(c)
    return best


# --- driver --------------------------------------------------------------------------

@dataclass
class SearchConfig:
    d: int
    subspace: Subspace | None = None
    restarts: int | None = None
    max_iterations: int = 5000
    convergence_tol: float = 1e-9
    accept_tol: float = 1e-12
    seed: int = 0
    polish: bool = True

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.restarts is None:
            self.restarts = 20 * self.d
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.accept_tol <= 0:
            raise ValueError("accept_tol must be positive")
        if self.subspace is not None and self.subspace.ambient_dim != self.d:
            raise ValueError("subspace lives in the wrong dimension")


@dataclass
class SearchOutcome:
    fiducial: np.ndarray
    cost: float
    cost_gap: float
    trial_index: int
    iterations: int
    converged: bool
    seed: int = 0
    extra: dict = field(default_factory=dict)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2 ** 64 - 1), int(trial)])


def random_start(sub: Subspace, rng: np.random.Generator) -> np.ndarray:
    m = sub.dim
    if sub.real_structure:
        x = rng.standard_normal(m)
    else:
        x = rng.standard_normal(2 * m)
    return x / np.linalg.norm(x)


def run_trial(ctx: DimensionContext, config: SearchConfig, trial: int) -> SearchOutcome:
    sub = config.subspace or full_space(ctx.d)
    rng = trial_rng(config.seed, trial)
    x0 = random_start(sub, rng)
    res = lbfgs(_objective(ctx, sub), x0, max_iterations=config.max_iterations,
                gtol=config.convergence_tol, ftarget=config.accept_tol)
    c = _to_vector(sub, res.x)
    c = c / np.linalg.norm(c)
    gap = res.f
    if config.polish and gap < config.accept_tol:
        c = polish(ctx, c, sub)
        gap = sic_cost_displacement_form(ctx, c) - sic_bound(ctx.d)
    cost = gap + sic_bound(ctx.d)
    return SearchOutcome(c, cost, gap, trial, res.iterations, bool(gap < config.accept_tol),
                         seed=config.seed, extra={"stop": res.reason})


def _run_trial_job(args):
    d, config, trial = args
    return run_trial(make_context(d), config, trial)


def run_search(ctx: DimensionContext, config: SearchConfig, workers: int = 1,
               trials=None) -> list[SearchOutcome]:
    """One outcome per restart, ordered by trial index."""
    if config.d != ctx.d:
        raise ValueError("config dimension does not match context")
    trials = list(range(config.restarts)) if trials is None else list(trials)
    if workers <= 1 or len(trials) <= 1:
        return [run_trial(ctx, config, t) for t in trials]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_trial_job, [(ctx.d, config, t) for t in trials]))
