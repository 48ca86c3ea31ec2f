"""Schmidt coefficients of fiducials across coprime factorisations C^d = C^d1 (x) C^d2."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .analysis import _require_sic
from .whgroup import DimensionContext


@dataclass
class SchmidtReport:
    d1: int
    d2: int
    coefficients: np.ndarray
    sum_sq: float
    identity_residual: float


def crt_map(d1: int, d2: int) -> np.ndarray:
    """slot[k] = (k mod d1) * d2 + (k mod d2), i.e. |k> -> |k mod d1> (x) |k mod d2>."""
    if d1 < 1 or d2 < 1 or gcd(d1, d2) != 1:
        raise ValueError(f"factors {d1}, {d2} are not coprime")
    k = np.arange(d1 * d2)
    return (k % d1) * d2 + (k % d2)


def coprime_factorizations(d: int) -> list[tuple[int, int]]:
    return [(a, d // a) for a in range(2, d) if d % a == 0 and a < d // a and gcd(a, d // a) == 1]


def schmidt_coefficients(ctx: DimensionContext, phi, d1: int, d2: int) -> SchmidtReport:
    if d1 * d2 != ctx.d:
        raise ValueError(f"{d1} x {d2} does not factor d = {ctx.d}")
    if d1 > d2:
        d1, d2 = d2, d1
    slot = crt_map(d1, d2)
    phi = _require_sic(ctx, phi)
    psi = np.empty_like(phi)
    psi[slot] = phi
    M = psi.reshape(d1, d2)
    lam = np.linalg.eigvalsh(M @ M.conj().T)[::-1]
    lam = np.where((lam < 0) & (lam > -1e-12), 0.0, lam)
    sum_sq = float(np.sum(lam ** 2))
    return SchmidtReport(d1, d2, lam, sum_sq, abs(sum_sq - (d1 + d2) / (ctx.d + 1)))
