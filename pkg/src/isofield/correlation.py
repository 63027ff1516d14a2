"""Closed-form correlation functions.

Scalar fields use the sinc kernel; vector fields the two-family Bessel form;
tensor fields expand on the five isotropic rank-4 tensors ``L^1 .. L^5`` with
coefficient functions ``N_{nq}(lambda, rho)`` (one row per measure).

All tensors are indexed in the ``(-1, 0, 1)`` axis order of
:mod:`isofield.specfun`.
"""
from __future__ import annotations

from functools import lru_cache
from math import pi, sqrt

import numpy as np

from .coupling import gg_block
from .model import (
    ScalarModel,
    TensorModel,
    TetraTensorModel,
    VectorModel,
    require_valid,
)
from .specfun import harmonic_slot, real_spherical_harmonics, spherical_bessel_all

__all__ = [
    "L_basis",
    "L_all",
    "table1_tensors",
    "M_basis",
    "M_all",
    "M_rank2",
    "M_TO_L",
    "m_coefficients",
    "density_from_M",
    "TABLE2",
    "n_functions",
    "n_functions_tetra",
    "scalar_correlation",
    "vector_correlation",
    "longitudinal_transverse_correlation",
    "tensor_correlation",
    "tensor_correlation_u5zero",
    "lomakin_coefficients",
    "robertson_AB",
]

_I3 = np.eye(3)


def _unit(xi):
    xi = np.asarray(xi, float)
    rho = float(np.linalg.norm(xi))
    return xi, rho, (xi / rho if rho > 0 else None)


# ---------------------------------------------------------------------------
# isotropic basis tensors

def L_all(xi) -> np.ndarray:
    """``L^1 .. L^5`` at separation ``xi`` stacked on axis 0.

    At ``xi = 0`` the direction-dependent tensors are undefined and are
    returned as zeros.
    """
    _, rho, n = _unit(xi)
    d = _I3
    out = np.zeros((5, 3, 3, 3, 3))
    out[0] = np.einsum("ij,lm->ijlm", d, d)
    out[1] = np.einsum("il,jm->ijlm", d, d) + np.einsum("im,jl->ijlm", d, d)
    if n is None:
        return out
    P = np.outer(n, n)
    out[2] = (np.einsum("jl,im->ijlm", P, d) + np.einsum("im,jl->ijlm", P, d)
              + np.einsum("il,jm->ijlm", P, d) + np.einsum("jm,il->ijlm", P, d))
    out[3] = np.einsum("ij,lm->ijlm", P, d) + np.einsum("lm,ij->ijlm", P, d)
    out[4] = np.einsum("i,j,l,m->ijlm", n, n, n, n)
    return out


def L_basis(q: int, xi) -> np.ndarray:
    if q not in (1, 2, 3, 4, 5):
        raise ValueError("q must be in 1..5")
    if q >= 3 and not np.any(np.asarray(xi, float)):
        raise ValueError(f"L^{q} is undefined at zero separation")
    return L_all(xi)[q - 1]


@lru_cache(maxsize=1)
def table1_tensors():
    """Uncoupled basis of symmetric rank-4 tensors.

    Returns ``(T010, T020, T21, T22, T41)``; the last three carry a leading
    magnetic index ``t`` (5, 5 and 9 entries).
    """
    g2 = gg_block(2, 1, 1)
    g0 = gg_block(0, 1, 1)[0]
    T010 = np.einsum("ij,lm->ijlm", g0, g0)
    T020 = np.einsum("nij,nlm->ijlm", g2, g2) / sqrt(5)
    T21 = (np.einsum("ij,tlm->tijlm", _I3, g2) + np.einsum("lm,tij->tijlm", _I3, g2)) / sqrt(6)
    T22 = np.einsum("tnq,nij,qlm->tijlm", gg_block(2, 2, 2), g2, g2)
    T41 = np.einsum("tnq,nij,qlm->tijlm", gg_block(4, 2, 2), g2, g2)
    for a in (T010, T020, T21, T22, T41):
        a.setflags(write=False)
    return T010, T020, T21, T22, T41


def _d_column(ell, theta, phi):
    # D^l_{t0}(k(theta, phi)) for t = -l..l, from the harmonics
    S = real_spherical_harmonics(ell, theta, phi)
    c = sqrt(4 * pi / (2 * ell + 1))
    return c * np.stack([S[harmonic_slot(ell, -t)] for t in range(-ell, ell + 1)])


def M_all(theta, phi) -> np.ndarray:
    """``M^1 .. M^5`` at direction ``(theta, phi)``.

    Scalar angles give shape ``(5, 3, 3, 3, 3)``; arrays of angles add their
    shape in front.
    """
    T010, T020, T21, T22, T41 = table1_tensors()
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    D2 = _d_column(2, theta, phi)
    D4 = _d_column(4, theta, phi)
    shp = np.broadcast(theta, phi).shape
    out = np.empty(shp + (5, 3, 3, 3, 3))
    out[..., 0, :, :, :, :] = T010
    out[..., 1, :, :, :, :] = T020
    out[..., 2, :, :, :, :] = np.einsum("t...,tijlm->...ijlm", D2, T21)
    out[..., 3, :, :, :, :] = np.einsum("t...,tijlm->...ijlm", D2, T22)
    out[..., 4, :, :, :, :] = np.einsum("t...,tijlm->...ijlm", D4, T41)
    return out


def M_basis(n: int, theta: float, phi: float) -> np.ndarray:
    if n not in (1, 2, 3, 4, 5):
        raise ValueError("n must be in 1..5")
    return M_all(theta, phi)[n - 1]


def M_rank2(which: str, theta: float, phi: float) -> np.ndarray:
    """Rank-2 analogues: ``"01"`` gives ``M^{0,1}``, ``"21"`` gives ``M^{2,1}``."""
    if which == "01":
        return np.array(gg_block(0, 1, 1)[0])
    if which == "21":
        return np.einsum("t,tij->ij", _d_column(2, theta, phi), gg_block(2, 1, 1))
    raise ValueError("which must be '01' or '21'")


_R2, _R5, _R7, _R14, _R35, _R70 = (sqrt(x) for x in (2, 5, 7, 14, 35, 70))

#: ``M^n = sum_q M_TO_L[n-1, q-1] L^q``.  The (5, 2) entry is +1/(2 sqrt 70);
#: this is the value forced by tracelessness of ``M^5``.
M_TO_L = np.array([
    [1 / 3, 0, 0, 0, 0],
    [-1 / (3 * _R5), 1 / (2 * _R5), 0, 0, 0],
    [-1 / 3, 0, 0, 1 / 2, 0],
    [2 * _R2 / (3 * _R7), -1 / _R14, 3 / (2 * _R14), -_R2 / _R7, 0],
    [1 / (2 * _R70), 1 / (2 * _R70), -_R5 / (2 * _R14), -_R5 / (2 * _R14), _R35 / (2 * _R2)],
])
M_TO_L.setflags(write=False)


def m_coefficients(family: int, v1: float = 0.5, v2: float = 0.0) -> np.ndarray:
    """Coefficients of the extreme density of ``family`` on ``M^1 .. M^5``."""
    if family == 1:
        return np.array([0.0, 2 / _R5, 0.0, _R2 / _R7, -4 * _R2 / _R35])
    if family == 2:
        return np.array([0.0, 4 / (3 * _R5), 0.0, -4 * _R2 / (3 * _R7), 2 * _R2 / (3 * _R35)])
    if family == 3:
        a = -v1 - 4 * v2 + 2
        return np.array([(v1 + 4 * v2 + 1) / 3, a / (3 * _R5), (-4 * v1 + 2 * v2 + 2) / 3,
                         _R2 * a / (3 * _R7), _R2 * a / _R35])
    raise ValueError("family must be 1, 2 or 3")


def density_from_M(theta, phi, family: int, v1: float = 0.5, v2: float = 0.0) -> np.ndarray:
    """Normalised tensor density at direction ``(theta, phi)`` from the M-basis."""
    return np.einsum("q,...qijlm->...ijlm", m_coefficients(family, v1, v2), M_all(theta, phi))


# ---------------------------------------------------------------------------
# N-functions

def _table2():
    # axes: family n, basis q, Bessel order (j0, j2, j4), affine part (1, v1, v2)
    T = np.zeros((3, 5, 3, 3))
    c = T[..., 0]
    c[0, 0] = (-2 / 15, -4 / 21, -2 / 35)
    c[0, 1] = (1 / 5, 1 / 7, -2 / 35)
    c[0, 2] = (0, -3 / 14, 2 / 7)
    c[0, 3] = (0, 2 / 7, 2 / 7)
    c[0, 4] = (0, 0, -2)
    c[1, 0] = (-4 / 45, 16 / 63, 1 / 105)
    c[1, 1] = (2 / 15, -4 / 21, 1 / 105)
    c[1, 2] = (0, 2 / 7, -1 / 21)
    c[1, 3] = (0, -8 / 21, -1 / 21)
    c[1, 4] = (0, 0, 1 / 3)
    # family 3 in terms of a = 2 - v1 - 4 v2, written as (1, v1, v2) parts
    a = np.array([2.0, -1.0, -4.0])
    T[2, 0, 0] = np.array([1.0, 2.0, 8.0]) / 15
    T[2, 0, 1] = np.array([2.0, -8.0, 10.0]) / 21
    T[2, 0, 2] = a / 70
    T[2, 1, 0] = a / 30
    T[2, 1, 1] = a / 21
    T[2, 1, 2] = a / 70
    T[2, 2, 1] = -a / 14
    T[2, 2, 2] = -a / 14
    T[2, 3, 1] = np.array([-1.0, 4.0, -5.0]) / 7
    T[2, 3, 2] = -a / 14
    T[2, 4, 2] = a / 2
    T.setflags(write=False)
    return T


#: Coefficient array behind :func:`n_functions`.
TABLE2 = _table2()


def n_functions(x, v1=0.5, v2=0.0, table=None) -> np.ndarray:
    """``N_{nq}`` at ``lambda * rho = x``; shape ``(3, 5) + broadcast shape``.

    ``v1`` and ``v2`` only enter the third row and may be arrays that
    broadcast against ``x``.
    """
    table = TABLE2 if table is None else np.asarray(table, float)
    x, v1, v2 = np.broadcast_arrays(np.asarray(x, float), np.asarray(v1, float),
                                    np.asarray(v2, float))
    J = spherical_bessel_all(4, x)[[0, 2, 4]]
    aff = np.stack([np.ones_like(v1), v1, v2])
    return np.einsum("nqbk,b...,k...->nq...", table, J, aff)


def n_functions_tetra(x, table=None) -> np.ndarray:
    """Four-row table of the ``u5 = 0`` case; shape ``(4, 5) + shape(x)``."""
    a = n_functions(x, 1.0, 0.0, table)
    b = n_functions(x, 0.0, 0.0, table)
    return np.concatenate([a, b[2:3]], axis=0)


# ---------------------------------------------------------------------------
# evaluators

def _sum_atoms(mu, rho, lmax=4):
    if len(mu) == 0:
        return np.zeros(lmax + 1)
    J = spherical_bessel_all(lmax, mu.lambdas * rho)
    return J @ mu.masses


def scalar_correlation(model, rho):
    """Atom sum of ``mass * sin(lambda rho) / (lambda rho)``.

    ``model`` may be a :class:`ScalarModel` or a bare measure; ``rho`` may
    be an array.
    """
    mu = model.phi if isinstance(model, ScalarModel) else model
    rho = np.asarray(rho, float)
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    if len(mu) == 0:
        return np.zeros_like(rho) if rho.ndim else 0.0
    x = np.multiply.outer(rho, mu.lambdas)
    sinc = np.sinc(x / pi)  # sin(x)/x with the removable singularity filled
    out = sinc @ mu.masses
    return float(out) if np.ndim(out) == 0 else out


def vector_correlation(model: VectorModel, xi) -> np.ndarray:
    require_valid(model)
    _, rho, n = _unit(xi)
    s1 = _sum_atoms(model.phi1, rho, 2)
    s2 = _sum_atoms(model.phi2, rho, 2)
    R = ((s1[0] / 3 - s1[2] / 6) + (s2[0] / 3 + s2[2] / 3)) * _I3
    if n is not None:
        R = R + (s1[2] / 2 - s2[2]) * np.outer(n, n)
    return R


def longitudinal_transverse_correlation(phi1, phi2, xi) -> np.ndarray:
    """Vector correlation written with ``j_1(x)/x`` kernels.

    Here ``phi1`` weights the longitudinal spectrum and ``phi2`` the
    transverse one with unit (not unit-trace) normalisation, so that
    ``vector_correlation(VectorModel(P1, P2))`` equals
    ``longitudinal_transverse_correlation(P2, P1 / 2)``.
    """
    _, rho, n = _unit(xi)
    R = np.zeros((3, 3))
    for mu, sgn in ((phi1, 1.0), (phi2, -1.0)):
        for lam, mass in mu.atoms:
            x = lam * rho
            j = spherical_bessel_all(2, x)
            j1x = j[1] / x if x > 0 else 1.0 / 3.0
            diag = j1x if sgn > 0 else j[0] - j1x
            R += mass * diag * _I3
            if n is not None:
                R -= sgn * mass * j[2] * np.outer(n, n)
    return R


def _tensor_coeffs(model: TensorModel, rho, table=None):
    # sum over measures and atoms of N_{nq}: returns length-5 vector
    out = np.zeros(5)
    for row, mu in ((0, model.phi1), (1, model.phi2)):
        if len(mu):
            N = n_functions(mu.lambdas * rho, table=table)[row]
            out += N @ mu.masses
    if len(model.phi3):
        v = np.array(model.v_for_atoms(), float)
        N = n_functions(model.phi3.lambdas * rho, v[:, 0], v[:, 1], table)[2]
        out += N @ model.phi3.masses
    return out


def tensor_correlation(model, xi, table=None) -> np.ndarray:
    """Rank-4 correlation tensor ``sum_q (sum_n int N_nq dPhi_n) L^q(xi)``.

    ``table`` overrides the coefficient array (see :data:`TABLE2`).
    """
    if isinstance(model, TetraTensorModel):
        return tensor_correlation_u5zero(model, xi, table)
    require_valid(model)
    _, rho, _ = _unit(xi)
    a = _tensor_coeffs(model, rho, table)
    return np.einsum("q,qijlm->ijlm", a, L_all(xi))


def tensor_correlation_u5zero(model: TetraTensorModel, xi, table=None) -> np.ndarray:
    require_valid(model)
    _, rho, _ = _unit(xi)
    a = np.zeros(5)
    for row, mu in enumerate(model.measures.values()):
        if len(mu):
            a += n_functions_tetra(mu.lambdas * rho, table)[row] @ mu.masses
    return np.einsum("q,qijlm->ijlm", a, L_all(xi))


def lomakin_coefficients(model, rho: float) -> np.ndarray:
    """``a_1 .. a_5`` of the polynomial-in-``xi`` form of the tensor correlation."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    if isinstance(model, TetraTensorModel):
        model = model.as_three_measure()
    require_valid(model)
    a = _tensor_coeffs(model, rho)
    return a / rho ** np.array([0, 0, 2, 2, 4])


def robertson_AB(model: VectorModel, rho: float):
    """``(A, B)`` with ``R_ij = A xi_i xi_j + B delta_ij``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    require_valid(model)
    s1 = _sum_atoms(model.phi1, rho, 2)
    s2 = _sum_atoms(model.phi2, rho, 2)
    A = (s1[2] / 2 - s2[2]) / rho**2
    B = (s1[0] / 3 - s1[2] / 6) + (s2[0] / 3 + s2[2] / 3)
    return float(A), float(B)
