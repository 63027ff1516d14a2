"""Special functions on the sphere and the half-line.

Conventions
-----------
Vectors in E^3 are stored as length-3 arrays whose slots carry the labels
``-1, 0, 1`` (array index = label + 1).  The polar axis is ``e_0``::

    n(theta, phi) = (sin(theta) cos(phi), cos(theta), sin(theta) sin(phi))

Real spherical harmonics are

    S^0_l   = P_l^0(cos theta)
    S^m_l   = sqrt(2) P_l^m(cos theta) cos(m phi - (m - 1) pi/4),   m > 0
    S^-m_l  = sqrt(2) P_l^m(cos theta) sin(m phi - (m - 1) pi/4),   m > 0

with fully normalised associated Legendre functions ``P_l^m`` (no
Condon-Shortley phase).  The quarter-turn phase shift is what makes the
harmonics agree with the columns of the real Wigner matrices,
``S^m_l = sqrt((2l+1)/4pi) D^l_{-m,0}``, while the l = 1 Wigner matrix of a
rotation ``k`` equals ``k`` itself in the axis order above.

Wigner matrices use the basis ``Y^l_m = S^{-m}_l`` and are computed by
exact product quadrature, ``D^l_{nm}(k) = int Y^l_n(k x) Y^l_m(x) dx``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import pi, sqrt

import numpy as np

__all__ = [
    "AngularPair",
    "HarmonicIndex",
    "spherical_bessel",
    "spherical_bessel_all",
    "legendre_normalized",
    "real_spherical_harmonic",
    "real_spherical_harmonics",
    "harmonic_slot",
    "direction",
    "angles",
    "rotation_from_angles",
    "sphere_grid",
    "wigner_d_matrix",
    "wigner_d_real",
    "gaunt_integral",
]

TWO_PI = 2.0 * pi


@dataclass(frozen=True)
class AngularPair:
    """Spherical angles with ``theta`` in [0, pi] and ``phi`` in [0, 2 pi).

    At the poles ``phi`` is canonicalised to 0.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        th, ph = float(self.theta), float(self.phi)
        if not np.isfinite(th) or not np.isfinite(ph):
            raise ValueError("angles must be finite")
        if th < 0.0 or th > pi:
            raise ValueError(f"theta={th} outside [0, pi]")
        ph = ph % TWO_PI
        if th == 0.0 or th == pi:
            ph = 0.0
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "phi", ph)

    @classmethod
    def from_vector(cls, v) -> "AngularPair":
        th, ph = angles(np.asarray(v, float))
        return cls(float(th), float(ph))

    def vector(self) -> np.ndarray:
        return direction(self.theta, self.phi)


@dataclass(frozen=True)
class HarmonicIndex:
    ell: int
    m: int

    def __post_init__(self):
        if self.ell < 0 or abs(self.m) > self.ell:
            raise ValueError(f"invalid harmonic index (l={self.ell}, m={self.m})")


# ---------------------------------------------------------------------------
# spherical Bessel functions

def _check_bessel_args(lmax, x):
    if lmax < 0:
        raise ValueError("order must be non-negative")
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)):
        raise ValueError("argument must be finite")
    if np.any(x < 0):
        raise ValueError("argument must be non-negative")
    return x


def spherical_bessel_all(lmax: int, x) -> np.ndarray:
    """Spherical Bessel functions ``j_0 .. j_lmax`` at ``x``.

    Returns an array of shape ``(lmax + 1,) + shape(x)``.

    Upward recurrence is used where ``x > lmax`` (stable there).  Elsewhere
    Miller's downward recurrence produces an unnormalised sequence that is
    scaled to match ``j_0``; close to a zero of ``j_0`` the match is made on
    ``j_1`` instead.
    """
    lmax = int(lmax)
    x = _check_bessel_args(lmax, x)
    shape = x.shape
    xf = x.ravel()
    out = np.zeros((lmax + 1, xf.size))

    zero = xf == 0.0
    out[0, zero] = 1.0

    up = (xf > lmax) & ~zero
    if np.any(up):
        t = xf[up]
        j0 = np.sin(t) / t
        out[0, up] = j0
        if lmax >= 1:
            j1 = np.sin(t) / t**2 - np.cos(t) / t
            out[1, up] = j1
            jm, jc = j0, j1
            for ell in range(1, lmax):
                jn = (2 * ell + 1) / t * jc - jm
                out[ell + 1, up] = jn
                jm, jc = jc, jn

    down = ~up & ~zero
    if np.any(down):
        t = xf[down]
        j0 = np.sin(t) / t
        out[0, down] = j0
        if lmax >= 1:
            # Miller: run the recurrence downward from a high start order
            start = lmax + 40 + int(np.ceil(t.max()))
            f_next = np.zeros_like(t)
            f_cur = np.full_like(t, 1e-30)
            trial = np.empty((lmax + 1, t.size))
            for ell in range(start, 0, -1):
                f_prev = (2 * ell + 1) / t * f_cur - f_next
                f_next, f_cur = f_cur, f_prev
                if ell - 1 <= lmax:
                    trial[ell - 1] = f_cur
                big = np.abs(f_cur) > 1e200
                if np.any(big):
                    f_cur = np.where(big, f_cur * 1e-200, f_cur)
                    f_next = np.where(big, f_next * 1e-200, f_next)
                    lo = max(ell - 1, 0)
                    trial[lo:, big] *= 1e-200
            # normalise by j0, or by j1 near the zeros of j0
            j1 = np.sin(t) / t**2 - np.cos(t) / t
            use_j1 = np.abs(j0) < 0.5 * np.abs(j1)
            scale = np.where(use_j1, j1 / np.where(use_j1, trial[1], 1.0),
                             j0 / np.where(use_j1, 1.0, trial[0]))
            vals = trial * scale
            vals[0] = j0
            out[:, down] = vals
    return out.reshape((lmax + 1,) + shape)


def spherical_bessel(ell: int, x):
    """Spherical Bessel function ``j_ell(x)`` for ``x >= 0``."""
    if ell < 0:
        raise ValueError("order must be non-negative")
    vals = spherical_bessel_all(ell, x)[ell]
    return float(vals) if np.ndim(vals) == 0 else vals


# ---------------------------------------------------------------------------
# harmonics

def legendre_normalized(lmax: int, ct) -> np.ndarray:
    """Fully normalised associated Legendre functions without CS phase.

    ``P[l, m]`` for ``0 <= m <= l <= lmax``; scaled so the harmonics built
    from them have unit norm on the sphere (``P[0, 0] = 1/sqrt(4 pi)``).
    """
    ct = np.clip(np.asarray(ct, dtype=float), -1.0, 1.0)
    st = np.sqrt(np.clip(1.0 - ct * ct, 0.0, None))
    P = np.zeros((lmax + 1, lmax + 1) + ct.shape)
    P[0, 0] = 1.0 / sqrt(4 * pi)
    for m in range(1, lmax + 1):
        P[m, m] = sqrt((2 * m + 1) / (2 * m)) * st * P[m - 1, m - 1]
    for m in range(lmax):
        P[m + 1, m] = sqrt(2 * m + 3) * ct * P[m, m]
    for m in range(lmax + 1):
        for ell in range(m + 2, lmax + 1):
            a = sqrt((4 * ell * ell - 1) / (ell * ell - m * m))
            b = sqrt(((ell - 1) ** 2 - m * m) / (4 * (ell - 1) ** 2 - 1))
            P[ell, m] = a * (ct * P[ell - 1, m] - b * P[ell - 2, m])
    return P


def harmonic_slot(ell: int, m: int) -> int:
    """Position of ``S^m_l`` in the flat layout used by this package."""
    return ell * ell + ell + m


def real_spherical_harmonics(lmax: int, theta, phi) -> np.ndarray:
    """All ``S^m_l`` with ``l <= lmax``, stacked along axis 0.

    Slot ``l*l + l + m`` holds ``S^m_l``; trailing axes follow the
    broadcast shape of ``theta`` and ``phi``.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    P = legendre_normalized(lmax, np.cos(theta))
    out = np.empty(((lmax + 1) ** 2,) + theta.shape)
    r2 = sqrt(2.0)
    for m in range(lmax + 1):
        if m == 0:
            for ell in range(lmax + 1):
                out[harmonic_slot(ell, 0)] = P[ell, 0]
            continue
        arg = m * phi - (m - 1) * pi / 4
        c, s = r2 * np.cos(arg), r2 * np.sin(arg)
        for ell in range(m, lmax + 1):
            out[harmonic_slot(ell, m)] = P[ell, m] * c
            out[harmonic_slot(ell, -m)] = P[ell, m] * s
    return out


def real_spherical_harmonic(ell: int, m: int, theta, phi):
    """Single real harmonic ``S^m_ell(theta, phi)``."""
    HarmonicIndex(ell, m)
    val = real_spherical_harmonics(ell, theta, phi)[harmonic_slot(ell, m)]
    return float(val) if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# geometry

def direction(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), np.cos(theta), st * np.sin(phi)], axis=-1)


def angles(v):
    """Inverse of :func:`direction`; the zero vector maps to (0, 0)."""
    v = np.asarray(v, float)
    r = np.linalg.norm(v, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    th = np.arccos(np.clip(v[..., 1] / safe, -1.0, 1.0))
    ph = np.arctan2(v[..., 2], v[..., 0]) % TWO_PI
    pole = (r == 0) | (th == 0) | (th == pi)
    th = np.where(r > 0, th, 0.0)
    ph = np.where(pole, 0.0, ph)
    return th, ph


def rotation_from_angles(theta: float, phi: float) -> np.ndarray:
    """Rotation ``k(theta, phi)`` carrying ``e_0`` to ``direction(theta, phi)``."""
    c, s = np.cos(theta), np.sin(theta)
    rt = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    c, s = np.cos(phi), np.sin(phi)
    rp = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    return rp @ rt


@lru_cache(maxsize=64)
def _grid(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    nphi = 2 * n
    ph = TWO_PI * np.arange(nphi) / nphi
    th = np.repeat(np.arccos(x), nphi)
    ph = np.tile(ph, n)
    wt = np.repeat(w, nphi) * (TWO_PI / nphi)
    for a in (th, ph, wt):
        a.setflags(write=False)
    return th, ph, wt


def sphere_grid(n: int):
    """Product rule with ``n`` Gauss-Legendre nodes in cos(theta).

    Uses ``2n`` equispaced azimuths, so it integrates every polynomial of
    degree ``<= 2n - 1`` on the sphere exactly.  Returns ``(theta, phi,
    weights)`` as flat read-only arrays.
    """
    if n < 1:
        raise ValueError("need at least one node")
    return _grid(int(n))


# ---------------------------------------------------------------------------
# Wigner matrices

def _dbasis(ell, theta, phi):
    # rows Y^l_m = S^{-m}_l, m = -l..l
    S = real_spherical_harmonics(ell, theta, phi)
    return np.stack([S[harmonic_slot(ell, -m)] for m in range(-ell, ell + 1)])


def wigner_d_matrix(ell: int, k) -> np.ndarray:
    """Real Wigner matrix ``D^ell(k)`` of a proper rotation ``k``.

    Entry ``[n + ell, m + ell]`` is ``D^ell_{nm}(k)``.  The matrices satisfy
    ``D(k1 k2) = D(k1) D(k2)`` and ``D^1(k) = k``.
    """
    if ell < 0:
        raise ValueError("ell must be non-negative")
    k = np.asarray(k, float)
    th, ph, w = sphere_grid(ell + 2)
    x = direction(th, ph)
    kth, kph = angles(x @ k.T)
    return (_dbasis(ell, kth, kph) * w) @ _dbasis(ell, th, ph).T


def wigner_d_real(ell: int, m: int, n: int, theta: float, phi: float) -> float:
    """Entry ``D^ell_{mn}`` of the rotation ``k(theta, phi)``."""
    if abs(m) > ell or abs(n) > ell:
        raise ValueError("index out of range")
    return float(wigner_d_matrix(ell, rotation_from_angles(theta, phi))[m + ell, n + ell])


def gaunt_integral(i1, i2, i3) -> float:
    """Integral of ``S^{m1}_{l1} S^{m2}_{l2} S^{m3}_{l3}`` over the sphere.

    Each argument is a ``HarmonicIndex`` or an ``(ell, m)`` pair.
    """
    from .coupling import gg

    (l1, m1), (l2, m2), (l3, m3) = (
        (i.ell, i.m) if isinstance(i, HarmonicIndex) else tuple(i) for i in (i1, i2, i3)
    )
    for ell, m in ((l1, m1), (l2, m2), (l3, m3)):
        HarmonicIndex(ell, m)
    if not abs(l1 - l2) <= l3 <= l1 + l2 or (l1 + l2 + l3) % 2:
        return 0.0
    pref = sqrt((2 * l1 + 1) * (2 * l2 + 1) / (4 * pi * (2 * l3 + 1)))
    return pref * gg(l3, m3, l1, m1, l2, m2) * gg(l3, 0, l1, 0, l2, 0)
