"""Mode covariances (b-matrices) and their Cholesky factors.

Expanding both plane waves of the spectral representation in spherical
harmonics turns the correlation of two points into a bilinear series

    R(x, y) = 4 pi sum b[(l,m,c), (l',m',c')] S^m_l(x^) S^{m'}_{l'}(y^)
              * int j_l(lambda r_x) j_{l'}(lambda r_y) dPhi(lambda)

with ``c`` a component label (``i`` for vectors, the pair ``(i, j)`` for
tensors).  Each family of extreme densities has its own ``b``; for the
third tensor family it depends affinely on ``(v1, v2)``.

Modes are ordered lexicographically in ``(l, m, c)``.  Factorisation does
not pivot, so the factor of a truncation is the leading block of the
factor of any larger truncation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import pi, sqrt
from typing import NamedTuple

import numpy as np

from .coupling import gg, gg_block
from .correlation import m_coefficients, table1_tensors
from .model import ScalarModel, TensorModel, TetraTensorModel, VectorModel
from .specfun import real_spherical_harmonics, spherical_bessel_all, angles

__all__ = [
    "VectorModeIndex",
    "TensorModeIndex",
    "vector_modes",
    "tensor_modes",
    "scalar_modes",
    "ModeCovariance",
    "FactorizationError",
    "b_vector",
    "b_tensor",
    "b_tensor3",
    "assemble",
    "semidefinite_cholesky",
    "series_correlation",
    "KINDS",
]

KINDS = ("scalar", "vector1", "vector2", "tensor1", "tensor2", "tensor3")


class VectorModeIndex(NamedTuple):
    ell: int
    m: int
    i: int


class TensorModeIndex(NamedTuple):
    u: int
    w: int
    i: int
    j: int


def scalar_modes(lmax):
    return [(ell, m) for ell in range(lmax + 1) for m in range(-ell, ell + 1)]


def vector_modes(lmax):
    return [VectorModeIndex(ell, m, i) for ell in range(lmax + 1)
            for m in range(-ell, ell + 1) for i in (-1, 0, 1)]


def tensor_modes(lmax):
    return [TensorModeIndex(u, w, i, j) for u in range(lmax + 1) for w in range(-u, u + 1)
            for i in (-1, 0, 1) for j in (-1, 0, 1)]


class FactorizationError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# entry formulas

def _phase(d):
    # i^d for even d; odd d never reaches here with a nonzero factor
    return (-1) ** (d // 2) if d % 2 == 0 else 0


def _g21(n, i, j):
    return gg(2, n, 1, i, 1, j)


def b_vector(a, b, family: int) -> float:
    """Entry of the vector b-matrix between modes ``a`` and ``b``.

    ``a = (l, m, i)``, ``b = (l', m', j)``.
    """
    (l, m, i), (lp, mp, j) = a, b
    if (l - lp) % 2:
        return 0.0
    c = {1: -1 / (5 * sqrt(6)), 2: sqrt(2) / (5 * sqrt(3))}[family]
    t = 0.0
    if l == lp:
        t += (i == j) / 3 * gg(0, 0, l, m, lp, mp) * gg(0, 0, l, 0, lp, 0)
    if abs(l - lp) <= 2 <= l + lp:
        z2 = gg(2, 0, l, 0, lp, 0)
        if z2:
            t += c * z2 * sum(_g21(n, i, j) * gg(2, -n, l, m, lp, mp) for n in range(-2, 3))
    return _phase(l - lp) * sqrt((2 * l + 1) * (2 * lp + 1)) * t


def _x0(i, j, l, m):
    return sum(_g21(n, i, j) * _g21(n, l, m) for n in range(-2, 3))


def _xL(L, i, j, l, m, u, up, w, wp):
    G = gg_block(L, 2, 2)
    H = gg_block(L, u, up)
    tot = 0.0
    for t in range(-L, L + 1):
        h = H[-t + L, w + u, wp + up]
        if h == 0.0:
            continue
        s = 0.0
        for n in range(-2, 3):
            for q in range(-2, 3):
                s += G[t + L, n + 2, q + 2] * _g21(n, i, j) * _g21(q, l, m)
        tot += s * h
    return tot


def _y2(i, j, l, m, u, up, w, wp):
    H = gg_block(2, u, up)
    return sum(H[-t + 2, w + u, wp + up] * ((i == j) * _g21(t, l, m) + (l == m) * _g21(t, i, j))
               for t in range(-2, 3))


def _b_tensor_coeffs(family, v1=0.5, v2=0.0):
    # (delta delta, X0, Y2, X2, X4) weights
    r2, r6, r7, r35 = sqrt(2), sqrt(6), sqrt(7), sqrt(35)
    if family == 1:
        return 0.0, 2 / 5, 0.0, r2 / (5 * r7), -4 * r2 / (9 * r35)
    if family == 2:
        return 0.0, 4 / 15, 0.0, -4 * r2 / (15 * r7), 2 * r2 / (27 * r35)
    a = -v1 - 4 * v2 + 2
    return ((v1 + 4 * v2 + 1) / 9, a / 15, (-4 * v1 + 2 * v2 + 2) / (15 * r6),
            r2 * a / (15 * r7), r2 * a / (9 * r35))


def _b_tensor_entry(a, b, coeffs):
    (u, w, i, j), (up, wp, l, m) = a, b
    if (u - up) % 2:
        return 0.0
    cdd, c0, cy, c2, c4 = coeffs
    t = 0.0
    if u == up:
        z0 = gg(0, 0, u, w, up, wp) * gg(0, 0, u, 0, up, 0)
        t += z0 * (cdd * (i == j) * (l == m) + c0 * _x0(i, j, l, m))
    if abs(u - up) <= 2 <= u + up:
        z2 = gg(2, 0, u, 0, up, 0)
        if z2:
            t += z2 * (cy * _y2(i, j, l, m, u, up, w, wp) + c2 * _xL(2, i, j, l, m, u, up, w, wp))
    if abs(u - up) <= 4 <= u + up:
        z4 = gg(4, 0, u, 0, up, 0)
        if z4:
            t += z4 * c4 * _xL(4, i, j, l, m, u, up, w, wp)
    return _phase(u - up) * sqrt((2 * u + 1) * (2 * up + 1)) * t


def b_tensor(a, b, family: int) -> float:
    """Entry of the tensor b-matrix of family 1 or 2.

    ``a = (u, w, i, j)``, ``b = (u', w', l, m)``.
    """
    if family not in (1, 2):
        raise ValueError("family must be 1 or 2; use b_tensor3 for the third")
    return _b_tensor_entry(a, b, _b_tensor_coeffs(family))


def b_tensor3(a, b, v1: float, v2: float) -> float:
    """Entry of the third tensor b-matrix at ellipse point ``(v1, v2)``."""
    return _b_tensor_entry(a, b, _b_tensor_coeffs(3, v1, v2))


# ---------------------------------------------------------------------------
# assembly

def _density_harmonics(kind: str, v1=0.5, v2=0.0):
    """``{L: F_L}`` with ``f(p) = sum_L sum_t F_L[t] D^L_{t0}(p)``."""
    if kind == "scalar":
        return {0: np.ones((1, 1, 1))}
    if kind in ("vector1", "vector2"):
        g2 = np.array(gg_block(2, 1, 1))
        c = -0.5 * sqrt(2 / 3) if kind == "vector1" else sqrt(2 / 3)
        return {0: np.eye(3)[None] / 3, 2: c * g2}
    fam = int(kind[-1])
    T010, T020, T21, T22, T41 = table1_tensors()
    c = m_coefficients(fam, v1, v2)
    F0 = (c[0] * T010 + c[1] * T020).reshape(1, 9, 9)
    F2 = (c[2] * T21 + c[3] * T22).reshape(5, 9, 9)
    F4 = (c[4] * T41).reshape(9, 9, 9)
    return {0: F0, 2: F2, 4: F4}


def _assemble_dense(kind, lmax, v1=0.5, v2=0.0):
    F = _density_harmonics(kind, v1, v2)
    comp = next(iter(F.values())).shape[1]
    offs = [comp * u * u for u in range(lmax + 2)]
    n = offs[-1]
    B = np.zeros((n, n))
    for u in range(lmax + 1):
        for up in range(u, lmax + 1):
            if (u - up) % 2:
                continue
            blk = np.zeros((2 * u + 1, comp, 2 * up + 1, comp))
            for L, FL in F.items():
                if not abs(u - up) <= L <= u + up:
                    continue
                G = gg_block(L, u, up)
                z = G[L, u, up]
                if z == 0.0:
                    continue
                coef = sqrt((2 * u + 1) * (2 * up + 1)) / (2 * L + 1) * z
                blk += coef * np.einsum("twv,tcd->wcvd", G[::-1], FL)
            blk *= _phase(u - up)
            blk = blk.reshape((2 * u + 1) * comp, (2 * up + 1) * comp)
            B[offs[u]:offs[u + 1], offs[up]:offs[up + 1]] = blk
            if up != u:
                B[offs[up]:offs[up + 1], offs[u]:offs[u + 1]] = blk.T
    return B


@lru_cache(maxsize=32)
def _cached_dense(kind, lmax, v1, v2):
    B = _assemble_dense(kind, lmax, v1, v2)
    B.setflags(write=False)
    return B


@lru_cache(maxsize=16)
def _tensor3_parts(lmax):
    # b3 is affine in (v1, v2): b3 = P0 + v1 P1 + v2 P2
    P0 = _assemble_dense("tensor3", lmax, 0.0, 0.0)
    P1 = _assemble_dense("tensor3", lmax, 1.0, 0.0) - P0
    P2 = _assemble_dense("tensor3", lmax, 0.0, 1.0) - P0
    for P in (P0, P1, P2):
        P.setflags(write=False)
    return P0, P1, P2


def semidefinite_cholesky(c, tol: float = 1e-10, neg_tol: float = 1e-8,
                          eig_tol: float = 1e-14) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L^T = c`` for a PSD matrix, no pivoting.

    Positions whose pivot vanishes get an all-zero column, so ``L`` is the
    Cholesky factor completed in the fixed (lexicographic) order.

    Plain elimination decides pivots from squared residuals, which only
    resolves them to about ``sqrt(eps)``; the b-matrices have exact pivots
    far below that.  The factor is therefore computed in square-root form:
    a low-rank ``X`` with ``X X^T = c`` (symmetric eigensolver, eigenvalues
    below ``eig_tol * max`` dropped) is reduced to lower-echelon form by
    Householder reflections from the right, in row order.  Row ``j`` opens a
    new column when its residual norm exceeds ``tol * sqrt(c[j, j])``;
    otherwise the residual is discarded.

    Raises :class:`FactorizationError` when ``c`` has an eigenvalue below
    ``-neg_tol * max(diag)``.
    """
    A = np.asarray(c.matrix if isinstance(c, ModeCovariance) else c, float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape != (n, n):
        raise ValueError("matrix must be square")
    L = np.zeros((n, n))
    if n == 0:
        return L
    A = 0.5 * (A + A.T)
    scale = max(float(np.max(np.diag(A))), 0.0) or 1.0
    w, V = np.linalg.eigh(A)
    if w[0] < -neg_tol * scale:
        raise FactorizationError(f"matrix is not PSD (eigenvalue {w[0]:.3e})")
    keep = w > eig_tol * max(w[-1], 0.0)
    # Y = X^T; its columns are the rows of the square-root factor
    Y = (V[:, keep] * np.sqrt(w[keep])).T.copy()
    r = Y.shape[0]
    k = 0
    for j in range(n):
        if k == r:
            break
        y = Y[k:, j]
        nrm = float(np.linalg.norm(y))
        if nrm <= tol * sqrt(max(A[j, j], 0.0)) or nrm == 0.0:
            continue
        # reflector sending y to -sign(y0) * nrm * e0
        alpha = -nrm if y[0] >= 0 else nrm
        u = y.copy()
        u[0] -= alpha
        un = float(np.linalg.norm(u))
        if un > 0:
            u /= un
            blk = Y[k:, j:]
            blk -= 2.0 * np.outer(u, u @ blk)
        sgn = 1.0 if Y[k, j] >= 0 else -1.0
        L[j:, j] = sgn * Y[k, j:]
        k += 1
    return L + 0.0  # no negative zeros


@dataclass(frozen=True)
class ModeCovariance:
    """Dense symmetric b-matrix over all modes with degree ``<= lmax``."""

    kind: str
    lmax: int
    matrix: np.ndarray = field(repr=False)
    v: tuple | None = None

    @property
    def modes(self):
        if self.kind == "scalar":
            return scalar_modes(self.lmax)
        if self.kind.startswith("vector"):
            return vector_modes(self.lmax)
        return tensor_modes(self.lmax)

    @property
    def n_components(self) -> int:
        return {"s": 1, "v": 3, "t": 9}[self.kind[0]]

    def cholesky(self) -> np.ndarray:
        return semidefinite_cholesky(self.matrix)


def assemble(kind: str, lmax: int, v1: float = 0.5, v2: float = 0.0,
             check: bool = True) -> ModeCovariance:
    """Assemble the b-matrix of ``kind`` (one of :data:`KINDS`).

    With ``check`` the smallest eigenvalue is computed and a value below
    ``-1e-8`` raises :class:`FactorizationError`.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if lmax < 0:
        raise ValueError("lmax must be nonnegative")
    if kind == "tensor3":
        P0, P1, P2 = _tensor3_parts(int(lmax))
        B = P0 + v1 * P1 + v2 * P2
        v = (float(v1), float(v2))
    else:
        B = np.array(_cached_dense(kind, int(lmax), 0.5, 0.0))
        v = None
    if check:
        B = 0.5 * (B + B.T)
        lo = np.linalg.eigvalsh(B)[0] if B.size else 0.0
        if lo < -1e-8:
            raise FactorizationError(f"b-matrix {kind} is not PSD (min eigenvalue {lo:.3e})")
    return ModeCovariance(kind, int(lmax), B, v)


# ---------------------------------------------------------------------------
# bilinear series

def _radial_angular(lmax, lam, point):
    # h[(l, m)] = j_l(lam r) S^m_l(x^)
    r = float(np.linalg.norm(point))
    th, ph = angles(point)
    S = real_spherical_harmonics(lmax, th, ph)
    J = spherical_bessel_all(lmax, lam * r)
    ells = np.repeat(np.arange(lmax + 1), 2 * np.arange(lmax + 1) + 1)
    return J[ells] * S


def _families(model):
    """``[(kind, measure, per-atom v or None)]`` for a model."""
    if isinstance(model, ScalarModel):
        return [("scalar", model.phi, None)]
    if isinstance(model, VectorModel):
        return [("vector1", model.phi1, None), ("vector2", model.phi2, None)]
    if isinstance(model, TetraTensorModel):
        return [("tensor1", model.phi1, None), ("tensor2", model.phi2, None),
                ("tensor3", model.phi3, [(1.0, 0.0)] * len(model.phi3)),
                ("tensor3", model.phi4, [(0.0, 0.0)] * len(model.phi4))]
    if isinstance(model, TensorModel):
        return [("tensor1", model.phi1, None), ("tensor2", model.phi2, None),
                ("tensor3", model.phi3, model.v_for_atoms())]
    raise TypeError(f"unsupported model {type(model).__name__}")


def series_correlation(model, x, y, lmax: int = 12) -> np.ndarray:
    """Truncated bilinear series for ``R(x, y)``.

    Returns a scalar, a 3x3 matrix or a 3x3x3x3 tensor depending on the
    model kind.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    out = None
    for kind, mu, vs in _families(model):
        for k, (lam, mass) in enumerate(mu.atoms):
            v = vs[k] if vs is not None else (0.5, 0.0)
            B = assemble(kind, lmax, *v, check=False).matrix
            comp = {"s": 1, "v": 3, "t": 9}[kind[0]]
            nlm = (lmax + 1) ** 2
            hx = _radial_angular(lmax, lam, x)
            hy = _radial_angular(lmax, lam, y)
            R = 4 * pi * mass * np.einsum("a,acbd,b->cd", hx, B.reshape(nlm, comp, nlm, comp), hy)
            out = R if out is None else out + R
    if out is None:
        out = np.zeros((1, 1)) if isinstance(model, ScalarModel) else (
            np.zeros((3, 3)) if isinstance(model, VectorModel) else np.zeros((9, 9)))
    if isinstance(model, ScalarModel):
        return float(out[0, 0])
    if isinstance(model, VectorModel):
        return out
    return out.reshape(3, 3, 3, 3)
