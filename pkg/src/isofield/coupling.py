"""Real coupling coefficients ``g^{m[m1,m2]}_{l[l1,l2]}``.

They decompose the product of two real irreducible representations,

    h^{l1}_{m1} (x) h^{l2}_{m2} = sum_{l, m} g^{m[m1,m2]}_{l[l1,l2]} h^l_m,

in the real basis ``Y^l_m = S^{-m}_l`` of :mod:`isofield.specfun`.  Values
are obtained from exact Clebsch-Gordan coefficients (rational arithmetic)
transformed to the real basis.  The per-triple phase is fixed by
``g^{0[0,0]}_{l[l1,l2]} > 0`` when that entry is nonzero (even
``l + l1 + l2``).  For odd triples, where that entry vanishes, the first
nonzero entry in lexicographic ``(m, m1, m2)`` order is made positive.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial, pi, sqrt

import numpy as np

from .specfun import wigner_d_matrix

__all__ = [
    "clebsch_gordan",
    "gg",
    "gg_block",
    "gg_matrix",
    "precompute",
    "wigner_product_expand",
    "coupling_table",
]


def _triangle(ell, ell1, ell2):
    return abs(ell1 - ell2) <= ell <= ell1 + ell2


def clebsch_gordan(j1: int, m1: int, j2: int, m2: int, j: int, m: int) -> float:
    """Complex-basis Clebsch-Gordan coefficient ``<j1 m1 j2 m2 | j m>``.

    Racah's formula evaluated in exact rational arithmetic (Condon-Shortley
    phase convention).  Only integer angular momenta are needed here.
    """
    if m1 + m2 != m or not _triangle(j, j1, j2):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m) > j:
        return 0.0
    f = factorial
    pref = Fraction(
        (2 * j + 1) * f(j + j1 - j2) * f(j - j1 + j2) * f(j1 + j2 - j), f(j1 + j2 + j + 1)
    )
    pref *= f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)
    s = Fraction(0)
    for k in range(j1 + j2 - j + 1):
        d = (k, j1 + j2 - j - k, j1 - m1 - k, j2 + m2 - k, j - j2 + m1 + k, j - j1 - m2 + k)
        if min(d) < 0:
            continue
        den = 1
        for x in d:
            den *= f(x)
        s += Fraction((-1) ** k, den)
    if s == 0:
        return 0.0
    # sqrt of an exact rational, sign restored afterwards
    return (1.0 if s > 0 else -1.0) * sqrt(pref * s * s)


@lru_cache(maxsize=None)
def _real_to_complex(ell: int) -> np.ndarray:
    # row m: coefficients of Y^l_m = S^{-m}_l on complex harmonics (CS phase)
    U = np.zeros((2 * ell + 1, 2 * ell + 1), complex)
    U[ell, ell] = 1.0
    r2 = sqrt(2.0)
    for mm in range(1, ell + 1):
        e = np.exp(-1j * (mm - 1) * pi / 4)
        sgn = (-1) ** mm
        # S^{+mm} is the D-basis vector with label -mm
        U[ell - mm, ell + mm] = e * sgn / r2
        U[ell - mm, ell - mm] = np.conj(e) / r2
        # S^{-mm} is the D-basis vector with label +mm
        U[ell + mm, ell + mm] = e * sgn / (1j * r2)
        U[ell + mm, ell - mm] = -np.conj(e) / (1j * r2)
    return U


@lru_cache(maxsize=None)
def _block(ell: int, ell1: int, ell2: int) -> np.ndarray:
    shape = (2 * ell + 1, 2 * ell1 + 1, 2 * ell2 + 1)
    if not _triangle(ell, ell1, ell2):
        out = np.zeros(shape)
        out.setflags(write=False)
        return out
    C = np.zeros(shape)
    for m in range(-ell, ell + 1):
        for m1 in range(-ell1, ell1 + 1):
            m2 = m - m1
            if abs(m2) <= ell2:
                C[m + ell, m1 + ell1, m2 + ell2] = clebsch_gordan(ell1, m1, ell2, m2, ell, m)
    U, U1, U2 = _real_to_complex(ell), _real_to_complex(ell1), _real_to_complex(ell2)
    G = np.einsum("ac,cij,xi,yj->axy", U.conj(), C, U1, U2)
    # one global phase makes the block real
    idx = np.unravel_index(np.argmax(np.abs(G)), G.shape)
    G = G * (abs(G[idx]) / G[idx])
    if np.abs(G.imag).max() > 1e-12:
        raise ArithmeticError(f"coupling block ({ell},{ell1},{ell2}) is not real")
    G = G.real.copy()
    ref = G[ell, ell1, ell2]
    if abs(ref) > 1e-12:
        G *= np.sign(ref)
    else:
        flat = G.ravel()
        G *= np.sign(flat[np.argmax(np.abs(flat) > 1e-10)])
    G[np.abs(G) < 1e-15] = 0.0
    G.setflags(write=False)
    return G


def gg_block(ell: int, ell1: int, ell2: int) -> np.ndarray:
    """All coefficients of one triple as a read-only array.

    Entry ``[m + ell, m1 + ell1, m2 + ell2]`` is ``g^{m[m1,m2]}_{ell[ell1,ell2]}``;
    the array is zero when the triangle condition fails.
    """
    if min(ell, ell1, ell2) < 0:
        raise ValueError("degrees must be non-negative")
    return _block(int(ell), int(ell1), int(ell2))


def gg(ell: int, m: int, ell1: int, m1: int, ell2: int, m2: int) -> float:
    """Single coefficient ``g^{m[m1,m2]}_{ell[ell1,ell2]}``."""
    if abs(m) > ell or abs(m1) > ell1 or abs(m2) > ell2:
        raise ValueError("magnetic index out of range")
    return float(gg_block(ell, ell1, ell2)[m + ell, m1 + ell1, m2 + ell2])


def gg_matrix(ell: int, ell1: int, ell2: int) -> np.ndarray:
    """Rows ``m``, columns ``(m1, m2)`` in row-major order.

    Returns a ``0 x (2l1+1)(2l2+1)`` array when the triangle condition fails.
    """
    n12 = (2 * ell1 + 1) * (2 * ell2 + 1)
    if not _triangle(ell, ell1, ell2):
        return np.zeros((0, n12))
    return np.array(gg_block(ell, ell1, ell2)).reshape(2 * ell + 1, n12)


def precompute(lmax: int, extra: int = 2) -> None:
    """Fill the cache for every triple with degrees up to ``lmax + extra``."""
    top = lmax + extra
    for l1 in range(top + 1):
        for l2 in range(top + 1):
            for ell in range(abs(l1 - l2), min(l1 + l2, top) + 1):
                gg_block(ell, l1, l2)


def wigner_product_expand(ell1, m1, n1, ell2, m2, n2, k) -> float:
    """Right-hand side of the product rule for real Wigner matrices.

    Evaluates ``sum_l sum_{q1,q2} g^{q1[m1,m2]}_{l[l1,l2]} D^l_{q1 q2}(k)
    g^{q2[n1,n2]}_{l[l1,l2]}``, which equals ``D^{l1}_{m1 n1}(k) D^{l2}_{m2 n2}(k)``.
    """
    total = 0.0
    for ell in range(abs(ell1 - ell2), ell1 + ell2 + 1):
        G = gg_block(ell, ell1, ell2)
        a = G[:, m1 + ell1, m2 + ell2]
        b = G[:, n1 + ell1, n2 + ell2]
        if not a.any() or not b.any():
            continue
        total += a @ wigner_d_matrix(ell, k) @ b
    return float(total)


def coupling_table(lmax: int, tol: float = 0.0):
    """Yield ``(l, m, l1, m1, l2, m2, value)`` for all degrees ``<= lmax``.

    Entries with ``|value| <= tol`` are skipped.
    """
    for ell in range(lmax + 1):
        for l1 in range(lmax + 1):
            for l2 in range(lmax + 1):
                if not _triangle(ell, l1, l2):
                    continue
                G = gg_block(ell, l1, l2)
                for (a, b, c), val in np.ndenumerate(G):
                    if abs(val) > tol:
                        yield ell, a - ell, l1, b - l1, l2, c - l2, float(val)
