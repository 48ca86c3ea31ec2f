"""Clifford and extended Clifford groups for the Weyl-Heisenberg group.

Group elements are pairs ``[F|p]`` with ``F`` a 2x2 integer matrix of
determinant +-1 mod ``dbar`` and ``p`` an integer 2-vector mod ``dbar``.
The map ``E`` sends a pair to a unitary (det +1) or anti-unitary (det -1)
operator obeying ``E D_q E^-1 = omega^<p,Fq> D_Fq``.

The projective group PEC(d) is handled through canonical keys
``(det_sign, F mod d, p mod d)``; for even d the key absorbs the kernel of
``E`` so that two pairs share a key iff their operators agree up to phase.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import gcd, isqrt

import numpy as np

from .whgroup import DimensionContext, displacement, make_context, symplectic_form

Matrix2 = tuple[tuple[int, int], tuple[int, int]]

J_MATRIX: Matrix2 = ((1, 0), (0, -1))
IDENTITY: Matrix2 = ((1, 0), (0, 1))


# --- exact 2x2 modular arithmetic -------------------------------------------

def _m(F) -> Matrix2:
    (a, b), (c, d) = F
    return ((int(a), int(b)), (int(c), int(d)))


def mat_mod(F, m: int) -> Matrix2:
    (a, b), (c, d) = _m(F)
    return ((a % m, b % m), (c % m, d % m))


def mat_mul(F, G, m: int) -> Matrix2:
    (a, b), (c, d) = _m(F)
    (e, f), (g, h) = _m(G)
    return (((a * e + b * g) % m, (a * f + b * h) % m),
            ((c * e + d * g) % m, (c * f + d * h) % m))


def mat_vec(F, p, m: int) -> tuple[int, int]:
    (a, b), (c, d) = _m(F)
    p1, p2 = int(p[0]), int(p[1])
    return ((a * p1 + b * p2) % m, (c * p1 + d * p2) % m)


def mat_det(F, m: int) -> int:
    (a, b), (c, d) = _m(F)
    return (a * d - b * c) % m


def mat_inv(F, m: int) -> Matrix2:
    det = mat_det(F, m)
    try:
        dinv = pow(det, -1, m)
    except ValueError:
        raise ValueError(f"matrix {F} is not invertible mod {m}") from None
    (a, b), (c, d) = _m(F)
    return mat_mod(((d * dinv, -b * dinv), (-c * dinv, a * dinv)), m)


def mat_trace(F, m: int) -> int:
    return (F[0][0] + F[1][1]) % m


# --- pairs [F|p] -------------------------------------------------------------

@dataclass(frozen=True)
class SymplecticIndex:
    F: Matrix2
    p: tuple[int, int]
    modulus: int
    det_sign: int = 1

    def __post_init__(self):
        m = self.modulus
        object.__setattr__(self, "F", mat_mod(self.F, m))
        object.__setattr__(self, "p", (int(self.p[0]) % m, int(self.p[1]) % m))
        if self.det_sign not in (1, -1):
            raise ValueError("det_sign must be +1 or -1")
        if mat_det(self.F, m) != self.det_sign % m:
            raise ValueError(
                f"det {self.F} = {mat_det(self.F, m)} mod {m} does not match sign {self.det_sign}")

    @classmethod
    def make(cls, ctx: DimensionContext, F, p=(0, 0)) -> "SymplecticIndex":
        """Build a pair over Z_dbar, inferring the determinant sign."""
        m = ctx.dbar
        det = mat_det(F, m)
        if det == 1 % m:
            sign = 1
        elif det == -1 % m:
            sign = -1
        else:
            raise ValueError(f"det F = {det} is not +-1 mod {m}")
        return cls(F, p, m, sign)

    @classmethod
    def identity(cls, modulus: int) -> "SymplecticIndex":
        return cls(IDENTITY, (0, 0), modulus, 1)

    @property
    def antiunitary(self) -> bool:
        return self.det_sign == -1

    def inverse(self) -> "SymplecticIndex":
        m = self.modulus
        Finv = mat_inv(self.F, m)
        q = mat_vec(Finv, self.p, m)
        return SymplecticIndex(Finv, (-q[0], -q[1]), m, self.det_sign)

    def __mul__(self, other: "SymplecticIndex") -> "SymplecticIndex":
        return pair_mul(self, other)

    def __pow__(self, n: int) -> "SymplecticIndex":
        base = self if n >= 0 else self.inverse()
        out = SymplecticIndex.identity(self.modulus)
        for _ in range(abs(n)):
            out = pair_mul(out, base)
        return out


def pair_mul(a: SymplecticIndex, b: SymplecticIndex) -> SymplecticIndex:
    """[F|p][G|q] = [FG|p + Fq]."""
    if a.modulus != b.modulus:
        raise ValueError(f"modulus mismatch: {a.modulus} vs {b.modulus}")
    m = a.modulus
    Fq = mat_vec(a.F, b.p, m)
    return SymplecticIndex(mat_mul(a.F, b.F, m), (a.p[0] + Fq[0], a.p[1] + Fq[1]), m,
                           a.det_sign * b.det_sign)


# --- operators ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CliffordElement:
    """Unitary ``v -> M v`` or anti-unitary ``v -> M conj(v)``."""

    matrix: np.ndarray
    antiunitary: bool = False

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        return self.matrix @ (np.conj(v) if self.antiunitary else v)

    def __matmul__(self, other: "CliffordElement") -> "CliffordElement":
        M2 = np.conj(other.matrix) if self.antiunitary else other.matrix
        return CliffordElement(self.matrix @ M2, self.antiunitary != other.antiunitary)

    def inverse(self) -> "CliffordElement":
        Mi = self.matrix.conj().T
        if self.antiunitary:
            # (v -> M conj v)^-1 = (w -> conj(M^dag w)) = (w -> M^T conj w)
            return CliffordElement(np.conj(Mi), True)
        return CliffordElement(Mi, False)

    def conjugate_operator(self, A: np.ndarray) -> np.ndarray:
        """Linear operator E A E^-1."""
        M = self.matrix
        Ae = np.conj(A) if self.antiunitary else A
        return M @ Ae @ M.conj().T


def same_up_to_phase(A: np.ndarray, B: np.ndarray, tol: float = 1e-9) -> bool:
    d = A.shape[0]
    return abs(abs(np.trace(A.conj().T @ B)) - d) < tol


def _find_decomposition_shift(F, m: int) -> int:
    (_, beta), (_, delta) = _m(F)
    for x in range(m):
        if gcd((delta + x * beta) % m, m) == 1:
            return x
    raise AssertionError(f"no x makes delta + x beta invertible for {F} mod {m}")


def _vf_direct(ctx: DimensionContext, F) -> np.ndarray:
    m = ctx.dbar
    (alpha, beta), (_, delta) = mat_mod(F, m)
    binv = pow(beta, -1, m)
    j = np.arange(ctx.d)[:, None]
    k = np.arange(ctx.d)[None, :]
    expo = binv * (alpha * k * k - 2 * j * k + delta * j * j)
    return ctx.tau_pow(expo) / np.sqrt(ctx.d)


@lru_cache(maxsize=8192)
def _metaplectic_cached(d: int, F: Matrix2) -> np.ndarray:
    ctx = make_context(d)
    m = ctx.dbar
    (alpha, beta), (gamma, delta) = F
    if gcd(beta, m) == 1:
        out = _vf_direct(ctx, F)
    else:
        x = _find_decomposition_shift(F, m)
        F1 = mat_mod(((0, -1), (1, x)), m)
        F2 = mat_mod(((gamma + x * alpha, delta + x * beta), (-alpha, -beta)), m)
        out = _vf_direct(ctx, F1) @ _vf_direct(ctx, F2)
    out.setflags(write=False)
    return out


def metaplectic(ctx: DimensionContext, F) -> np.ndarray:
    """V_F for F in SL_2(Z_dbar)."""
    F = mat_mod(F, ctx.dbar)
    if mat_det(F, ctx.dbar) != 1 % ctx.dbar:
        raise ValueError(f"metaplectic operator needs det F = 1 mod {ctx.dbar}, got {F}")
    return _metaplectic_cached(ctx.d, F)


def clifford_element(ctx: DimensionContext, g: SymplecticIndex) -> CliffordElement:
    if g.modulus != ctx.dbar:
        raise ValueError(f"pair is over Z_{g.modulus}, context expects Z_{ctx.dbar}")
    if not g.antiunitary:
        return CliffordElement(displacement(ctx, g.p) @ metaplectic(ctx, g.F), False)
    m = ctx.dbar
    JF = mat_mul(J_MATRIX, g.F, m)
    Jp = mat_vec(J_MATRIX, g.p, m)
    C = displacement(ctx, Jp) @ metaplectic(ctx, JF)
    # J^ C acts as v -> conj(C v) = conj(C) conj(v)
    return CliffordElement(np.conj(C), True)


def apply_element(ctx: DimensionContext, g: SymplecticIndex, v: np.ndarray) -> np.ndarray:
    return clifford_element(ctx, g).apply(v)


def conjugation_residual(ctx: DimensionContext, g: SymplecticIndex, q) -> float:
    """Max-abs residual of E D_q E^-1 = omega^<p,Fq> D_Fq."""
    E = clifford_element(ctx, g)
    m = ctx.dbar
    Fq = mat_vec(g.F, q, m)
    lhs = E.conjugate_operator(displacement(ctx, q))
    rhs = ctx.omega_pow(symplectic_form(g.p, Fq, m)) * displacement(ctx, Fq)
    return float(np.max(np.abs(lhs - rhs)))


# --- Zauner's matrix and eigenspaces ----------------------------------------

@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal basis stored as the columns of ``basis``.

    With ``real_structure`` the subspace is the real span of the columns,
    i.e. the fixed set of an anti-unitary involution.
    """

    basis: np.ndarray
    real_structure: bool = False

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    def embed(self, coeffs) -> np.ndarray:
        return self.basis @ np.asarray(coeffs)

    def project(self, v) -> np.ndarray:
        c = self.basis.conj().T @ v
        if self.real_structure:
            c = c.real
        return self.basis @ c


class EmptyEigenspaceError(ValueError):
    pass


def zauner_phase(d: int) -> complex:
    return np.exp(1j * np.pi * (d - 1) / 12)


def zauner_matrix(ctx: DimensionContext) -> np.ndarray:
    """<j|Z|k> = e^(i xi) tau^(2jk + j^2) / sqrt(d), xi = pi (d - 1) / 12."""
    if ctx.d < 2:
        raise ValueError("Zauner matrix needs d >= 2")
    j = np.arange(ctx.d)[:, None]
    k = np.arange(ctx.d)[None, :]
    return zauner_phase(ctx.d) * ctx.tau_pow(2 * j * k + j * j) / np.sqrt(ctx.d)


def zauner_dims(d: int) -> tuple[int, int, int]:
    return tuple((d + 3 - 2 * k) // 3 for k in range(3))


def eigenspace_of_unitary(U: np.ndarray, order: int, k: int, rank: int | None = None) -> np.ndarray:
    """Basis of the exp(2 pi i k / order) eigenspace of U, given U**order = I."""
    d = U.shape[0]
    P = np.zeros((d, d), dtype=complex)
    Um = np.eye(d, dtype=complex)
    for m in range(order):
        P += np.exp(-2j * np.pi * k * m / order) * Um
        Um = Um @ U
    P /= order
    P = (P + P.conj().T) / 2
    w, vecs = np.linalg.eigh(P)
    if rank is None:
        rank = int(np.sum(w > 0.5))
    return vecs[:, ::-1][:, :rank]


def zauner_eigenspace(ctx: DimensionContext, k: int) -> Subspace:
    if k not in (0, 1, 2):
        raise ValueError("eigenvalue index must be 0, 1 or 2")
    basis = eigenspace_of_unitary(zauner_matrix(ctx), 3, k, zauner_dims(ctx.d)[k])
    return Subspace(basis)


# --- named symmetries ---------------------------------------------------------

def _fa(d):
    if d % 9 != 3:
        raise ValueError(f"F_a needs d = 3 mod 9, got d = {d}")
    k = (d - 3) // 9
    return ((1, d + 3), (d + 3 * k, d - 2)), 1


def _fb(d):
    k = isqrt(d + 1)
    if k * k != d + 1:
        raise ValueError(f"F_b needs d = k^2 - 1, got d = {d}")
    return ((-k, d), (d, d - k)), 1


def _fc(d):
    r = isqrt(d - 3) if d >= 3 else -1
    if r < 0 or r * r != d - 3 or r % 3 == 0:
        raise ValueError(f"F_c needs d = (3k +- 1)^2 + 3, got d = {d}")
    if r % 3 == 1:
        k = (r - 1) // 3
        kappa = 3 * k * k + k + 1
    else:
        k = (r + 1) // 3
        kappa = 3 * k * k - k + 1
    return ((kappa, d - 2 * kappa), (d + 2 * kappa, d - kappa)), -1


_NAMED = {
    "fz": lambda d: (((0, d - 1), (d + 1, d - 1)), 1),
    "fa": _fa,
    "fb": _fb,
    "fc": _fc,
}


def named_symmetry(ctx: DimensionContext, which: str) -> SymplecticIndex:
    """One of Fz, Fa, Fb, Fc as a pair [F|0] over Z_dbar."""
    key = which.lower()
    if key not in _NAMED:
        raise ValueError(f"unknown symmetry {which!r}; expected one of Fz, Fa, Fb, Fc")
    F, sign = _NAMED[key](ctx.d)
    return SymplecticIndex(F, (0, 0), ctx.dbar, sign)


def available_symmetries(d: int) -> list[str]:
    out = []
    for name, fn in _NAMED.items():
        try:
            fn(d)
        except ValueError:
            continue
        out.append(name)
    return out


def is_canonical_order3(ctx: DimensionContext, g: SymplecticIndex) -> bool:
    d = ctx.d
    F = mat_mod(g.F, d)
    return g.det_sign == 1 and mat_trace(F, d) == (-1) % d and F != mat_mod(IDENTITY, d)


# --- group orders --------------------------------------------------------------

def prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def sl2_order(n: int) -> int:
    num, den = n ** 3, 1
    for p in prime_factors(n):
        num *= p * p - 1
        den *= p * p
    return num // den


def group_orders(d: int) -> tuple[int, int]:
    """(|PC(d)|, |PEC(d)|)."""
    if d < 2:
        raise ValueError("group orders are defined for d >= 2")
    pc = sl2_order(d) * d * d
    return pc, 2 * pc


# --- kernel of E for even d -----------------------------------------------------

def kernel_generators(ctx: DimensionContext) -> list[SymplecticIndex]:
    d, m = ctx.d, ctx.dbar
    if d % 2:
        raise ValueError("kernel generators are listed for even d only")
    return [
        SymplecticIndex(((1 + d, 0), (0, 1 + d)), (0, 0), m),
        SymplecticIndex(((1, d), (0, 1)), (d // 2, 0), m),
        SymplecticIndex(((1, 0), (d, 1)), (0, d // 2), m),
    ]


def closure(gens, modulus: int, key=None) -> dict:
    """Group generated by pairs, as {key(g): g}; exact integer arithmetic."""
    key = key or (lambda g: (g.det_sign, g.F, g.p))
    e = SymplecticIndex.identity(modulus)
    seen = {key(e): e}
    frontier = [e]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = pair_mul(a, g)
                kb = key(b)
                if kb not in seen:
                    seen[kb] = b
                    nxt.append(b)
        frontier = nxt
    return seen


@dataclass
class KernelReport:
    d: int
    deviations: list[float]
    kernel_size: int
    ok: bool

    @property
    def failing(self) -> list[int]:
        return [i for i, dev in enumerate(self.deviations) if dev >= 1e-11]


def kernel_check(ctx: DimensionContext) -> KernelReport:
    gens = kernel_generators(ctx)
    devs = []
    for g in gens:
        M = clifford_element(ctx, g).matrix
        devs.append(float(np.max(np.abs(M - M[0, 0] * np.eye(ctx.d)))))
    size = len(closure(gens, ctx.dbar))
    return KernelReport(ctx.d, devs, size, all(x < 1e-11 for x in devs) and size == 32)


@lru_cache(maxsize=None)
def _kernel_offsets(d: int) -> dict:
    """For even d: F-part K (K = I mod d) -> p with [K|p] in ker(E)."""
    ctx = make_context(d)
    out = {}
    for g in sorted(closure(kernel_generators(ctx), ctx.dbar).values(),
                    key=lambda g: (g.F, g.p)):
        out.setdefault(g.F, g.p)
    return out


# --- projective canonical form ---------------------------------------------------

@lru_cache(maxsize=None)
def _lift(d: int, F: Matrix2, sign: int) -> Matrix2:
    """Deterministic lift of F mod d to Z_dbar with det = sign mod dbar."""
    m = d if d % 2 else 2 * d
    if m == d:
        return F
    for e in itertools.product((0, 1), repeat=4):
        L = ((F[0][0] + d * e[0], F[0][1] + d * e[1]),
             (F[1][0] + d * e[2], F[1][1] + d * e[3]))
        if mat_det(L, m) == sign % m:
            return mat_mod(L, m)
    raise ValueError(f"{F} has no lift with det {sign} mod {m}")


def canonical_key(ctx: DimensionContext, g: SymplecticIndex) -> tuple:
    """Key identifying the class of E_g in PEC(d)."""
    d = ctx.d
    Fd = mat_mod(g.F, d)
    if d % 2:
        return (g.det_sign, Fd, (g.p[0] % d, g.p[1] % d))
    m = ctx.dbar
    L = _lift(d, Fd, g.det_sign)
    K = mat_mul(g.F, mat_inv(L, m), m)
    s = _kernel_offsets(d)[K]
    Kinv = mat_inv(K, m)
    p = mat_vec(Kinv, (g.p[0] - s[0], g.p[1] - s[1]), m)
    return (g.det_sign, Fd, (p[0] % d, p[1] % d))


def element_from_key(ctx: DimensionContext, key: tuple) -> SymplecticIndex:
    sign, Fd, p = key
    return SymplecticIndex(_lift(ctx.d, Fd, sign), p, ctx.dbar, sign)


def canonical_rep(ctx: DimensionContext, g: SymplecticIndex) -> SymplecticIndex:
    return element_from_key(ctx, canonical_key(ctx, g))


def projective_order(ctx: DimensionContext, g: SymplecticIndex, limit: int = 10_000) -> int:
    e = canonical_key(ctx, SymplecticIndex.identity(ctx.dbar))
    h = g
    for n in range(1, limit + 1):
        if canonical_key(ctx, h) == e:
            return n
        h = pair_mul(h, g)
    raise ValueError("element order exceeds limit")


@lru_cache(maxsize=None)
def esl2_mod(d: int) -> tuple[tuple[int, Matrix2], ...]:
    """All (sign, F) with F in Mat_2(Z_d) and det F = sign mod d.

    For d = 2 both signs are listed for every F, since they give distinct
    projective classes once lifted to Z_4.
    """
    r = np.arange(d)
    a, b, c, e = np.meshgrid(r, r, r, r, indexing="ij")
    det = (a * e - b * c) % d
    out = []
    for sign in (1, -1):
        mask = det == sign % d
        for A, B, C, D in zip(a[mask], b[mask], c[mask], e[mask]):
            out.append((sign, ((int(A), int(B)), (int(C), int(D)))))
    return tuple(out)


def pec_linear_parts(ctx: DimensionContext):
    """Yield one lifted [F|0] per F-class of PEC(d); translations complete the group."""
    for sign, Fd in esl2_mod(ctx.d):
        yield SymplecticIndex(_lift(ctx.d, Fd, sign), (0, 0), ctx.dbar, sign)


def sum_formula_clifford(ctx: DimensionContext, g: SymplecticIndex) -> np.ndarray:
    """Odd-d Clifford unitary D_p sum_r D_Fr D_r^dag / (d sqrt(eta(F)))."""
    d = ctx.d
    if d % 2 == 0 or g.antiunitary:
        raise ValueError("sum formula applies to unitary elements in odd d")
    S = np.zeros((d, d), dtype=complex)
    eta = 0
    for r in itertools.product(range(d), repeat=2):
        Fr = mat_vec(g.F, r, d)
        if Fr == (r[0] % d, r[1] % d):
            eta += 1
        S += displacement(ctx, Fr) @ displacement(ctx, r).conj().T
    return displacement(ctx, g.p) @ S / (d * np.sqrt(eta))
