"""Weyl-Heisenberg displacement operators in dimension d.

Conventions: ``V|k> = |k+1 mod d>``, ``U|k> = omega^k |k>`` and
``D_p = tau^(p1 p2) V^p1 U^p2`` with ``tau = exp(i pi (d+1)/d)``.
All phases are evaluated from integer exponents reduced mod ``2d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class DimensionContext:
    d: int
    dbar: int = field(init=False)

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "dbar", self.d if self.d % 2 else 2 * self.d)

    def tau_pow(self, n):
        """tau**n for integer (array) n, exact exponent reduction."""
        d = self.d
        e = (np.asarray(n, dtype=np.int64) % (2 * d)) * (d + 1) % (2 * d)
        return np.exp(1j * np.pi * e / d)

    def omega_pow(self, n):
        e = np.asarray(n, dtype=np.int64) % self.d
        return np.exp(2j * np.pi * e / self.d)

    @property
    def tau(self) -> complex:
        return complex(self.tau_pow(1))

    @property
    def omega(self) -> complex:
        return complex(self.omega_pow(1))

    # cached index tables, all indexed [p1, p2] or [p1, k] over Z_d
    @cached_property
    def tau_table(self) -> np.ndarray:
        r = np.arange(self.d)
        return self.tau_pow(np.outer(r, r))

    @cached_property
    def shift_index(self) -> np.ndarray:
        r = np.arange(self.d)
        return (r[:, None] + r[None, :]) % self.d

    @cached_property
    def unshift_index(self) -> np.ndarray:
        r = np.arange(self.d)
        return (r[None, :] - r[:, None]) % self.d

    def __reduce__(self):
        return (DimensionContext, (self.d,))


def make_context(d: int) -> DimensionContext:
    return DimensionContext(d)


@dataclass(frozen=True)
class DisplacementIndex:
    p1: int
    p2: int

    @classmethod
    def reduced(cls, p1, p2, modulus):
        return cls(int(p1) % modulus, int(p2) % modulus)

    def __iter__(self):
        yield self.p1
        yield self.p2


def _pair(p):
    p1, p2 = p
    return int(p1), int(p2)


def symplectic_form(p, q, m: int) -> int:
    """<p, q> = p2 q1 - p1 q2 reduced mod m."""
    if m < 1:
        raise ValueError("modulus must be >= 1")
    p1, p2 = _pair(p)
    q1, q2 = _pair(q)
    return (p2 * q1 - p1 * q2) % m


def shift_matrix(d: int) -> np.ndarray:
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def clock_matrix(ctx: DimensionContext) -> np.ndarray:
    return np.diag(ctx.omega_pow(np.arange(ctx.d)))


def displacement(ctx: DimensionContext, p) -> np.ndarray:
    """Dense matrix of D_p; p is any integer pair."""
    p1, p2 = _pair(p)
    d = ctx.d
    k = np.arange(d)
    out = np.zeros((d, d), dtype=complex)
    # column k -> omega^(p2 k) |k + p1>
    out[(k + p1) % d, k] = ctx.omega_pow(p2 * k)
    return ctx.tau_pow(p1 * p2) * out


def apply_displacement(ctx: DimensionContext, p, v: np.ndarray) -> np.ndarray:
    p1, p2 = _pair(p)
    k = np.arange(ctx.d)
    return ctx.tau_pow(p1 * p2) * np.roll(ctx.omega_pow(p2 * k) * v, p1)


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero vector cannot be normalized")
    return v / n


def cross_table(ctx: DimensionContext, psi: np.ndarray, w: np.ndarray) -> np.ndarray:
    """table[p1, p2] = <psi|D_p|w> for p in Z_d^2, in O(d^2 log d)."""
    d = ctx.d
    a = np.conj(psi[ctx.shift_index]) * w[None, :]
    return ctx.tau_table * (d * np.fft.ifft(a, axis=1))


def overlap_table(ctx: DimensionContext, phi) -> np.ndarray:
    """table[p1, p2] = <phi|D_p|phi>."""
    phi = np.asarray(phi, dtype=complex)
    return cross_table(ctx, phi, phi)


def orbit_vectors(ctx: DimensionContext, phi) -> np.ndarray:
    """All d^2 vectors D_p phi as rows, row index p1 * d + p2."""
    d = ctx.d
    phi = np.asarray(phi, dtype=complex)
    return np.array([apply_displacement(ctx, (p1, p2), phi)
                     for p1 in range(d) for p2 in range(d)])
