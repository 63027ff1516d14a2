"""Gaussian synthesis of isotropic random fields on point grids.

For every atom ``(lambda, mass)`` of a measure, mode coefficients are drawn
as ``Z = sqrt(mass) L zeta`` with ``L`` the Cholesky factor of the family's
b-matrix and ``zeta`` standard normal.  A field value is then

    u_c(x) = 2 sqrt(pi) sum_{l, m} j_l(lambda r) S^m_l(theta, phi) Z[(l, m, c)]

summed over atoms and families.  Random streams are keyed by
``(seed, realization, family, atom)`` on the Philox generator, so output is
independent of scheduling and thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np
from scipy.integrate import trapezoid

from .bmodes import _families, assemble, semidefinite_cholesky
from .model import (ScalarModel, SpectralMeasure, TensorModel, TetraTensorModel,
                    VectorModel, require_valid)
from .specfun import real_spherical_harmonics, spherical_bessel_all

__all__ = [
    "GridSpec",
    "FieldRealization",
    "discretize",
    "sample",
    "sample_scalar",
    "sample_vector",
    "sample_tensor",
    "truncation_tail",
    "resolve_threads",
    "BATCH",
]

BATCH = 64  # realizations per work unit; fixed so results ignore thread count
_TAIL_EXTRA = 80


@dataclass(frozen=True)
class GridSpec:
    """Evaluation points as rows ``(r, theta, phi)``."""

    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, float).reshape(-1, 3)
        if not np.all(np.isfinite(p)):
            raise ValueError("grid points must be finite")
        if np.any(p[:, 0] < 0):
            raise ValueError("radii must be nonnegative")
        if np.any((p[:, 1] < 0) | (p[:, 1] > pi)):
            raise ValueError("theta must lie in [0, pi]")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @classmethod
    def from_cartesian(cls, xyz):
        xyz = np.asarray(xyz, float).reshape(-1, 3)
        r = np.linalg.norm(xyz, axis=1)
        safe = np.where(r > 0, r, 1.0)
        th = np.where(r > 0, np.arccos(np.clip(xyz[:, 1] / safe, -1, 1)), 0.0)
        ph = np.mod(np.arctan2(xyz[:, 2], xyz[:, 0]), 2 * pi)
        return cls(np.column_stack([r, th, ph]))

    def cartesian(self) -> np.ndarray:
        r, th, ph = self.points.T
        return r[:, None] * np.column_stack(
            [np.sin(th) * np.cos(ph), np.cos(th), np.sin(th) * np.sin(ph)])

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class FieldRealization:
    """Sampled values, shape ``(n_realizations, n_points) + value shape``."""

    values: np.ndarray = field(repr=False)
    seed: int
    lmax: int
    kind: str
    grid: GridSpec = field(repr=False)
    model: object = field(repr=False, default=None)
    tail: float = 0.0

    @property
    def n_realizations(self) -> int:
        return self.values.shape[0]


def resolve_threads(threads=None) -> int:
    if threads is None:
        threads = os.environ.get("ISOFIELD_THREADS", 1)
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def discretize(density, n_atoms: int, support=None) -> SpectralMeasure:
    """Replace a continuous spectral density by Gauss-Legendre atoms.

    ``density`` is a callable (then ``support=(a, b)`` is required), a pair
    ``(lambdas, values)`` tabulating it, or a :class:`SpectralMeasure`,
    which is returned unchanged.  Tabulated input is linearly interpolated
    and the atom masses are rescaled to the trapezoid integral of the table.
    """
    if isinstance(density, SpectralMeasure):
        return density
    if n_atoms < 1:
        raise ValueError("n_atoms must be positive")
    target = None
    if callable(density):
        if support is None:
            raise ValueError("support is required for a callable density")
        a, b = map(float, support)
        fn = density
    else:
        lam, val = (np.asarray(t, float) for t in density)
        if lam.ndim != 1 or lam.shape != val.shape or lam.size < 2:
            raise ValueError("tabulation needs two equal-length 1-D arrays")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("tabulation abscissae must increase")
        if np.any(val < 0):
            raise ValueError("density must be nonnegative")
        a, b = lam[0], lam[-1]
        fn = lambda x: np.interp(x, lam, val)  # noqa: E731
        target = float(trapezoid(val, lam))
    if a < 0 or not b > a:
        raise ValueError("support must be an interval inside [0, inf)")
    x, w = np.polynomial.legendre.leggauss(int(n_atoms))
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    vals = np.asarray(fn(nodes), float)
    if np.any(vals < 0):
        raise ValueError("density must be nonnegative")
    masses = 0.5 * (b - a) * w * vals
    if target is not None and masses.sum() > 0:
        masses *= target / masses.sum()
    keep = masses > 0
    return SpectralMeasure(tuple(zip(nodes[keep], masses[keep])))


def truncation_tail(measures, r_max: float, lmax: int) -> float:
    """``sum_{l > lmax} (2l + 1) max_k j_l(lambda_k r_max)^2`` over all atoms."""
    lams = [lam for mu in measures for lam, _ in mu.atoms]
    if not lams or r_max == 0:
        return 0.0
    x = np.asarray(lams) * r_max
    J = spherical_bessel_all(lmax + _TAIL_EXTRA, x)[lmax + 1:]
    ell = np.arange(lmax + 1, lmax + _TAIL_EXTRA + 1)
    return float(np.sum((2 * ell + 1) * np.max(J**2, axis=1)))


def _radial_angular(grid: GridSpec, lam: float, lmax: int) -> np.ndarray:
    # rows: points, columns: (l, m) slots
    r, th, ph = grid.points.T
    S = real_spherical_harmonics(lmax, th, ph)
    J = spherical_bessel_all(lmax, lam * r)
    ells = np.repeat(np.arange(lmax + 1), 2 * np.arange(lmax + 1) + 1)
    return (J[ells] * S).T


class _Operator:
    """Maps mode draws of one atom to field values on the grid."""

    def __init__(self, kind, lmax, lam, mass, v, grid, factors):
        comp = {"s": 1, "v": 3, "t": 9}[kind[0]]
        key = (kind, v)
        if key not in factors:
            factors[key] = semidefinite_cholesky(assemble(kind, lmax, *v, check=False).matrix)
        L = factors[key]
        nlm = (lmax + 1) ** 2
        H = _radial_angular(grid, lam, lmax)
        W = np.einsum("pa,acm->pcm", H, L.reshape(nlm, comp, -1)).reshape(len(grid) * comp, -1)
        self.cols = np.flatnonzero(np.any(L != 0, axis=0))
        self.W = 2 * sqrt(pi) * sqrt(mass) * W[:, self.cols]
        self.n_modes = L.shape[1]


def _sample(model, kind_name, grid, seed, lmax, n_realizations, threads):
    if lmax < 0:
        raise ValueError("lmax must be nonnegative")
    if n_realizations < 1:
        raise ValueError("n_realizations must be positive")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    comp = {"scalar": 1, "vector": 3, "tensor": 9}[kind_name]
    factors = {}
    ops = []
    for fam, (kind, mu, vs) in enumerate(_families(model)):
        for k, (lam, mass) in enumerate(mu.atoms):
            v = tuple(vs[k]) if vs is not None else (0.5, 0.0)
            if kind != "tensor3":
                v = (0.5, 0.0)
            ops.append((fam, k, _Operator(kind, lmax, lam, mass, v, grid, factors)))

    npts = len(grid)

    def run(start):
        stop = min(start + BATCH, n_realizations)
        out = np.zeros((stop - start, npts * comp))
        for fam, k, op in ops:
            Z = np.empty((op.n_modes, stop - start))
            for c, rlz in enumerate(range(start, stop)):
                gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rlz, fam, k])))
                Z[:, c] = gen.standard_normal(op.n_modes)
            out += (op.W @ Z[op.cols]).T
        return out

    starts = list(range(0, n_realizations, BATCH))
    nthreads = resolve_threads(threads)
    if nthreads == 1 or len(starts) == 1:
        chunks = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            chunks = list(ex.map(run, starts))
    vals = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, npts * comp))

    if kind_name == "scalar":
        vals = vals.reshape(n_realizations, npts) + model.mean
    elif kind_name == "vector":
        vals = vals.reshape(n_realizations, npts, 3) + model.mean
    else:
        vals = vals.reshape(n_realizations, npts, 3, 3)
        vals = 0.5 * (vals + np.swapaxes(vals, -1, -2)) + model.mean * np.eye(3)
    r_max = float(grid.points[:, 0].max()) if npts else 0.0
    tail = truncation_tail(model.measures.values(), r_max, lmax)
    return FieldRealization(vals, seed, int(lmax), kind_name, grid, model, tail)


def sample_scalar(measure, mean: float = 0.0, grid: GridSpec = None, seed: int = 0,
                  lmax: int = 12, n_realizations: int = 1, threads=None) -> FieldRealization:
    """Scalar field with the given spectral measure and constant mean."""
    model = measure if isinstance(measure, ScalarModel) else ScalarModel(measure, mean)
    require_valid(model)
    return _sample(model, "scalar", grid, seed, lmax, n_realizations, threads)


def sample_vector(model: VectorModel, grid: GridSpec, seed: int, lmax: int = 12,
                  n_realizations: int = 1, threads=None) -> FieldRealization:
    """Mean-zero vector field, two independent families of modes."""
    if not isinstance(model, VectorModel):
        raise TypeError("expected a VectorModel")
    require_valid(model)
    return _sample(model, "vector", grid, seed, lmax, n_realizations, threads)


def sample_tensor(model, grid: GridSpec, seed: int, lmax: int = 12,
                  n_realizations: int = 1, threads=None) -> FieldRealization:
    """Symmetric rank-2 tensor field with mean ``C delta_ij``.

    The third family is factorised once per distinct ``(v1, v2)``.
    """
    if not isinstance(model, (TensorModel, TetraTensorModel)):
        raise TypeError("expected a tensor model")
    require_valid(model)
    return _sample(model, "tensor", grid, seed, lmax, n_realizations, threads)


def sample(model, grid: GridSpec, seed: int, lmax: int = 12, n_realizations: int = 1,
           threads=None) -> FieldRealization:
    if isinstance(model, ScalarModel):
        return sample_scalar(model, grid=grid, seed=seed, lmax=lmax,
                             n_realizations=n_realizations, threads=threads)
    if isinstance(model, VectorModel):
        return sample_vector(model, grid, seed, lmax, n_realizations, threads)
    return sample_tensor(model, grid, seed, lmax, n_realizations, threads)
