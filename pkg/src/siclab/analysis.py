"""Verification and classification of SIC fiducial vectors."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .clifford import (
    SymplecticIndex,
    _lift,
    canonical_key,
    clifford_element,
    closure,
    element_from_key,
    esl2_mod,
    group_orders,
    is_canonical_order3,
    mat_inv,
    mat_mod,
    mat_mul,
    named_symmetry,
    available_symmetries,
    pec_linear_parts,
    zauner_matrix,
)
from .search import SearchConfig, run_search, sic_bound, sic_cost_displacement_form, welch_bound
from .whgroup import DimensionContext, cross_table, normalize, orbit_vectors, overlap_table

log = logging.getLogger(__name__)

STABILIZER_TOL = 1e-9
EXHAUSTIVE_MAX_D = 15


class PreconditionError(ValueError):
    """Input vector is not a verified fiducial."""


# --- verification ------------------------------------------------------------------

@dataclass
class VerificationReport:
    d: int
    max_overlap_deviation: float
    cost_gap: float
    design_defect_t1: float
    design_defect_t2: float
    inversion_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_overlap_deviation < self.tol


def max_overlap_deviation(ctx: DimensionContext, phi) -> float:
    sq = np.abs(overlap_table(ctx, normalize(phi))) ** 2
    dev = np.abs(sq - 1.0 / (ctx.d + 1))
    dev[0, 0] = 0.0
    return float(np.max(dev))


def tdesign_defect(states, t: int) -> float:
    """Frame potential of the (normalised) states minus the Welch bound."""
    X = np.atleast_2d(np.asarray(states, dtype=complex))
    if X.shape[0] == 0:
        raise ValueError("need at least one state")
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    n, d = X.shape
    G = np.abs(np.conj(X) @ X.T) ** (2 * t)
    return float(np.sum(G) / n ** 2 - welch_bound(d, t))


def _reconstruct(ctx: DimensionContext, X: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = ctx.d
    probs = np.real(np.einsum("ki,ij,kj->k", np.conj(X), rho, X)) / d
    return (d + 1) * np.einsum("k,ki,kj->ij", probs, X, np.conj(X)) - np.eye(d)


def _require_sic(ctx: DimensionContext, phi, tol: float = 1e-8) -> np.ndarray:
    phi = normalize(phi)
    if phi.shape != (ctx.d,):
        raise PreconditionError(f"vector has length {phi.shape[0]}, expected {ctx.d}")
    dev = max_overlap_deviation(ctx, phi)
    if dev >= tol:
        raise PreconditionError(f"not a SIC fiducial: overlap deviation {dev:.3e} >= {tol:g}")
    return phi


def state_inversion_check(ctx: DimensionContext, phi, rho) -> float:
    """Frobenius distance between rho and its reconstruction from SIC statistics."""
    phi = _require_sic(ctx, phi)
    rho = np.asarray(rho, dtype=complex)
    return float(np.linalg.norm(_reconstruct(ctx, orbit_vectors(ctx, phi), rho) - rho))


def verify_sic(ctx: DimensionContext, phi, tol: float = 1e-10) -> VerificationReport:
    phi = normalize(phi)
    d = ctx.d
    X = orbit_vectors(ctx, phi)
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return VerificationReport(
        d=d,
        max_overlap_deviation=max_overlap_deviation(ctx, phi),
        cost_gap=max(0.0, sic_cost_displacement_form(ctx, phi) - sic_bound(d)),
        design_defect_t1=abs(tdesign_defect(X, 1)),
        design_defect_t2=abs(tdesign_defect(X, 2)),
        inversion_error=float(np.linalg.norm(_reconstruct(ctx, X, rho) - rho)),
        tol=tol,
    )


# --- stabilisers ----------------------------------------------------------------------

@dataclass
class StabilizerRecord:
    order: int
    generators: list[SymplecticIndex]
    strategy: str
    keys: list[tuple] = field(default_factory=list)
    preimage_order: int | None = None

    def elements(self, ctx: DimensionContext) -> list[SymplecticIndex]:
        return [element_from_key(ctx, k) for k in self.keys]


def _fixes(ctx, phi, g, tol=STABILIZER_TOL) -> bool:
    return abs(np.vdot(phi, clifford_element(ctx, g).apply(phi))) > 1 - tol


def _scan_translations(ctx, target, phi, g0: SymplecticIndex, tol) -> list[tuple]:
    """Keys of [F|p], p in Z_d^2, with |<target|E_[F|p] phi>| > 1 - tol."""
    # E_[F|p] = D_p E_[F|0] for unitary and anti-unitary elements alike
    w = clifford_element(ctx, g0).apply(phi)
    hits = np.argwhere(np.abs(cross_table(ctx, target, w)) > 1 - tol)
    return [canonical_key(ctx, SymplecticIndex(g0.F, (int(p1), int(p2)), ctx.dbar, g0.det_sign))
            for p1, p2 in hits]


def _generators(ctx, keys: Sequence[tuple]) -> list[SymplecticIndex]:
    key = lambda g: canonical_key(ctx, g)  # noqa: E731
    group = {key(SymplecticIndex.identity(ctx.dbar))}
    gens: list[SymplecticIndex] = []
    for k in sorted(keys):
        if k in group:
            continue
        gens.append(element_from_key(ctx, k))
        group = set(closure(gens, ctx.dbar, key))
    return gens


def _check_closed(ctx, keys: set) -> None:
    els = [element_from_key(ctx, k) for k in keys]
    for a in els:
        if canonical_key(ctx, a.inverse()) not in keys:
            raise RuntimeError("stabiliser set is not closed under inversion")
        for b in els:
            if canonical_key(ctx, a * b) not in keys:
                raise RuntimeError("stabiliser set is not closed under multiplication")


def _preimage_order(ctx, gens) -> int:
    return len(closure([SymplecticIndex(g.F, (0, 0), ctx.dbar, g.det_sign) for g in gens],
                       ctx.dbar, key=lambda g: (g.det_sign, g.F)))


def stabilizer(ctx: DimensionContext, phi, strategy: str = "auto",
               extra: Iterable[SymplecticIndex] = (), tol: float = STABILIZER_TOL) -> StabilizerRecord:
    """Projective extended-Clifford stabiliser of the ray of phi.

    ``exhaustive`` scans all of PEC(d); ``auto`` picks it for d <= 15. ``targeted`` scans every
    translate [F|p] of the named symmetries available in this dimension,
    their powers and any ``extra`` elements, then closes the hits.
    """
    phi = _require_sic(ctx, phi)
    if strategy == "auto":
        strategy = "exhaustive" if ctx.d <= EXHAUSTIVE_MAX_D else "targeted"
    keys: set = set()
    if strategy == "exhaustive":
        for g0 in pec_linear_parts(ctx):
            keys.update(_scan_translations(ctx, phi, phi, g0, tol))
        _check_closed(ctx, keys)
    elif strategy == "targeted":
        candidates = [named_symmetry(ctx, name) for name in available_symmetries(ctx.d)]
        candidates += list(extra)
        linear = {}
        for c in candidates:
            for n in range(1, 13):
                h = c ** n
                lin = SymplecticIndex(h.F, (0, 0), ctx.dbar, h.det_sign)
                linear[(lin.det_sign, lin.F)] = lin
        for lin in linear.values():
            keys.update(_scan_translations(ctx, phi, phi, lin, tol))
        keys.add(canonical_key(ctx, SymplecticIndex.identity(ctx.dbar)))
        gens = _generators(ctx, keys)
        keys = set(closure(gens, ctx.dbar, key=lambda g: canonical_key(ctx, g)))
        for k in keys:
            if not _fixes(ctx, phi, element_from_key(ctx, k), 10 * tol):
                raise RuntimeError("closure of targeted hits contains a non-stabilising element")
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    gens = _generators(ctx, keys)
    return StabilizerRecord(len(keys), gens, strategy, sorted(keys), _preimage_order(ctx, gens))


def orbit_size(ctx: DimensionContext, stab: StabilizerRecord) -> int:
    return group_orders(ctx.d)[1] // stab.order


def count_sics(d: int, stabilizer_orders: Sequence[int]) -> int:
    """(|PEC(d)| / d^2) * sum 1/|S| over orbits; must be an integer."""
    if any(int(s) <= 0 for s in stabilizer_orders):
        raise ValueError("stabiliser orders must be positive")
    total = Fraction(group_orders(d)[1], d * d) * sum(Fraction(1, int(s)) for s in stabilizer_orders)
    if total.denominator != 1:
        raise ValueError(f"non-integral SIC count {total}: inconsistent stabiliser orders")
    return int(total)


# --- Zauner classification ------------------------------------------------------------

@dataclass
class ZaunerClass:
    k: int | None
    stabilized: bool
    conjugator: SymplecticIndex | None = None
    vector: np.ndarray | None = None


def _z_eigen_index(Z, psi, tol=STABILIZER_TOL):
    lam = np.vdot(psi, Z @ psi)
    if abs(lam) <= 1 - tol:
        return None
    return int(np.round(np.angle(lam) / (2 * np.pi / 3))) % 3


def zauner_class(ctx: DimensionContext, phi, stab: StabilizerRecord | None = None) -> ZaunerClass:
    """Eigenspace index k of a Z-stabilised vector in the orbit of phi.

    If phi itself is fixed by Z its own eigenvalue is used; otherwise a
    canonical order-3 stabiliser conjugate to [F_z|0] is carried onto
    [F_z|0] and the transported vector is classified.
    """
    phi = _require_sic(ctx, phi)
    d = ctx.d
    Z = zauner_matrix(ctx)
    k = _z_eigen_index(Z, phi)
    if k is not None:
        return ZaunerClass(k, True, SymplecticIndex.identity(ctx.dbar), phi)
    stab = stab or stabilizer(ctx, phi)
    Fz = mat_mod(named_symmetry(ctx, "fz").F, d)
    for g in stab.elements(ctx):
        if not is_canonical_order3(ctx, g):
            continue
        Gd = mat_mod(g.F, d)
        for sign, Hd in esl2_mod(d):
            if mat_mul(mat_mul(Hd, Gd, d), mat_inv(Hd, d), d) != Fz:
                continue
            h0 = SymplecticIndex(_lift(d, Hd, sign), (0, 0), ctx.dbar, sign)
            w = clifford_element(ctx, h0).apply(phi)
            X = orbit_vectors(ctx, w)
            lam = np.abs(np.einsum("ki,ij,kj->k", np.conj(X), Z, X))
            hits = np.flatnonzero(lam > 1 - STABILIZER_TOL)
            if hits.size:
                r = int(hits[0])
                psi = X[r]
                conj = SymplecticIndex(h0.F, (r // d, r % d), ctx.dbar, sign)
                return ZaunerClass(_z_eigen_index(Z, psi), True, conj, psi)
            break
    return ZaunerClass(None, False)


# --- realness --------------------------------------------------------------------

def phase_align(phi) -> np.ndarray:
    """Global phase making sum_k c_k^2 real and non-negative."""
    phi = normalize(phi)
    s = np.sum(phi * phi)
    return phi * np.exp(-0.5j * np.angle(s)) if abs(s) > 0 else phi


def realness_check(ctx: DimensionContext, phi, tol: float = 1e-10) -> bool:
    psi = phase_align(phi)
    return bool(np.max(np.abs(psi.imag)) < tol)


def real_in_orbit(ctx: DimensionContext, phi, tol: float = 1e-10) -> np.ndarray | None:
    """A real vector (after phase alignment) in the PEC(d) orbit of phi, if any."""
    phi = _require_sic(ctx, phi)
    for g0 in pec_linear_parts(ctx):
        X = orbit_vectors(ctx, clifford_element(ctx, g0).apply(phi))
        s = np.abs(np.sum(X * X, axis=1))
        for r in np.flatnonzero(s > 1 - 1e-6):
            psi = phase_align(X[r])
            if np.max(np.abs(psi.imag)) < tol:
                return psi.real.astype(complex)
    return None


# --- triple products ----------------------------------------------------------

@dataclass
class OrbitFingerprint:
    """Multiset of triple products C(0, b, c) over all b, c in Z_d^2."""

    d: int
    values: np.ndarray
    tolerance: float = 1e-8

    @property
    def pairs(self) -> list[tuple[float, float]]:
        mod = np.round(np.abs(self.values), 10)
        ph = np.angle(self.values)
        order = np.lexsort((ph, mod))
        return list(zip(np.abs(self.values)[order].tolist(), ph[order].tolist()))

    def conjugate(self) -> "OrbitFingerprint":
        return OrbitFingerprint(self.d, np.conj(self.values), self.tolerance)

    def distance(self, other: "OrbitFingerprint") -> float:
        if self.values.shape != other.values.shape:
            return np.inf
        dr = np.max(np.abs(np.sort(self.values.real) - np.sort(other.values.real)))
        di = np.max(np.abs(np.sort(self.values.imag) - np.sort(other.values.imag)))
        return float(max(dr, di))

    def matches(self, other: "OrbitFingerprint", tol: float | None = None) -> bool:
        return self.distance(other) < (self.tolerance if tol is None else tol)

    def digest(self, digits: int = 6) -> str:
        re_ = np.round(np.sort(self.values.real), digits) + 0.0
        im_ = np.round(np.sort(np.abs(self.values.imag)), digits) + 0.0
        h = hashlib.sha256(re_.tobytes() + im_.tobytes())
        return h.hexdigest()[:16]


def triple_products(ctx: DimensionContext, phi) -> np.ndarray:
    """C[b, c] = <x_0|x_b><x_b|x_c><x_c|x_0> with x_p = D_p phi (flattened p)."""
    X = orbit_vectors(ctx, normalize(phi))
    G = np.conj(X) @ X.T
    return G[0][:, None] * G * G[:, 0][None, :]


def triple_fingerprint(ctx: DimensionContext, phi, tolerance: float = 1e-8) -> OrbitFingerprint:
    phi = _require_sic(ctx, phi)
    return OrbitFingerprint(ctx.d, triple_products(ctx, phi).ravel(), tolerance)


def orbits_equivalent(ctx: DimensionContext, phi, psi, tol: float = 1e-8) -> str:
    """'same', 'different' or 'inconclusive' for the PEC(d) orbits of phi and psi."""
    phi = _require_sic(ctx, phi)
    psi = _require_sic(ctx, psi)
    fa = triple_fingerprint(ctx, phi)
    fb = triple_fingerprint(ctx, psi)
    if not (fa.matches(fb, tol) or fa.conjugate().matches(fb, tol)):
        return "different"
    if ctx.d > 10:
        return "inconclusive"
    for g0 in pec_linear_parts(ctx):
        w = clifford_element(ctx, g0).apply(phi)
        if np.max(np.abs(cross_table(ctx, psi, w))) > 1 - tol:
            return "same"
    return "different"


# --- census --------------------------------------------------------------------

@dataclass
class CensusOrbit:
    representative: np.ndarray
    stabilizer_order: int
    first_trial: int
    hits: int = 1
    has_real: bool | None = None


@dataclass
class CensusReport:
    d: int
    orbits: list[CensusOrbit]
    trials: int
    converged: int
    consecutive: int
    complete: bool

    @property
    def stabilizer_orders(self) -> list[int]:
        return [o.stabilizer_order for o in self.orbits]


def stopping_threshold(n_orbits: int) -> int:
    return 30 * (n_orbits + 1)


def census(ctx: DimensionContext, search_config: SearchConfig | None = None, *,
           max_trials: int = 20000, workers: int = 1, batch: int | None = None,
           on_orbit=None) -> CensusReport:
    """Collect PEC(d) orbits from unrestricted random searches.

    Stops once 30(n+1) consecutive verified solutions fall into the n known
    orbits. Trials are processed in index order, so the result does not
    depend on ``workers``.
    """
    d = ctx.d
    if d == 3:
        raise ValueError("census is ill-posed for d = 3 (continuous family of fiducials)")
    if d > 10:
        raise ValueError("census is limited to d <= 10")
    cfg = search_config or SearchConfig(d)
    if cfg.subspace is not None:
        cfg = SearchConfig(d, None, cfg.restarts, cfg.max_iterations, cfg.convergence_tol,
                           cfg.accept_tol, cfg.seed)
    batch = batch or max(1, workers)
    orbits: list[CensusOrbit] = []
    consecutive = converged = trial = 0
    complete = False
    while trial < max_trials and not complete:
        trials = range(trial, min(trial + batch, max_trials))
        for out in run_search(ctx, cfg, workers=workers, trials=trials):
            trial = out.trial_index + 1
            if not out.converged or max_overlap_deviation(ctx, out.fiducial) >= 1e-10:
                continue
            converged += 1
            for orb in orbits:
                if orbits_equivalent(ctx, orb.representative, out.fiducial) == "same":
                    orb.hits += 1
                    consecutive += 1
                    break
            else:
                stab = stabilizer(ctx, out.fiducial, "exhaustive")
                orb = CensusOrbit(out.fiducial, stab.order, out.trial_index)
                orbits.append(orb)
                consecutive = 0
                log.info("d=%d trial %d: new orbit #%d, |S| = %d", d, out.trial_index,
                         len(orbits), stab.order)
                if on_orbit:
                    on_orbit(orb, stab)
            if orbits and consecutive >= stopping_threshold(len(orbits)):
                complete = True
                break
    return CensusReport(d, orbits, trial, converged, consecutive, complete)
