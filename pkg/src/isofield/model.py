"""Admissible spectral data for scalar, vector and tensor fields.

A model is a handful of finite atomic measures on the wavenumber half-line.
Tensor models also carry a point ``(v1, v2)`` of the closed elliptic region
for every atom of the third measure, plus the constant ``C`` of the mean
``C delta_ij``.  Models are immutable; :func:`validate` lists every broken
constraint without raising, and :func:`require_valid` turns that list into a
:class:`ModelError`.

Voigt layout
------------
Symmetric 3x3x3x3 tensors are flattened to 6x6 matrices with the pair order
``(-1-1, 00, 11, 01, -11, -10)`` and no weighting factors, so
``F[I, J] = f_{ijlm}`` for ``I = (ij)``, ``J = (lm)``.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .specfun import rotation_from_angles

__all__ = [
    "SpectralMeasure",
    "ScalarModel",
    "VectorModel",
    "TensorModel",
    "TetraTensorModel",
    "SimplexCoords",
    "Violation",
    "ModelError",
    "validate",
    "require_valid",
    "VOIGT_PAIRS",
    "voigt_to_tensor",
    "tensor_to_voigt",
    "f_matrix_vector",
    "f_matrix_tensor",
    "f_matrix_zero",
    "extreme_matrix",
    "u_from_v",
    "v_from_u",
    "f_components_from_u",
    "voigt_from_f_components",
    "zero_atom_v",
    "vector_density",
    "tensor_density",
    "in_ellipse",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "save_model",
    "load_example",
    "EXAMPLES",
]

REL_TOL = 1e-9
ELLIPSE_TOL = 1e-12

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))


# ---------------------------------------------------------------------------
# measures and models

@dataclass(frozen=True)
class SpectralMeasure:
    """Finite atomic measure: ``atoms`` is a tuple of ``(lambda, mass)``."""

    atoms: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "atoms", tuple((float(a), float(b)) for a, b in self.atoms)
        )

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([a for a, _ in self.atoms], dtype=float)

    @property
    def masses(self) -> np.ndarray:
        return np.array([b for _, b in self.atoms], dtype=float)

    @property
    def total_mass(self) -> float:
        return float(sum(b for _, b in self.atoms))

    @property
    def mass_at_zero(self) -> float:
        return float(sum(b for a, b in self.atoms if a == 0.0))

    def __len__(self):
        return len(self.atoms)


def _measure(obj) -> SpectralMeasure:
    return obj if isinstance(obj, SpectralMeasure) else SpectralMeasure(tuple(obj))


@dataclass(frozen=True)
class ScalarModel:
    phi: SpectralMeasure = field(default_factory=SpectralMeasure)
    mean: float = 0.0

    kind = "scalar"

    def __post_init__(self):
        object.__setattr__(self, "phi", _measure(self.phi))
        object.__setattr__(self, "mean", float(self.mean))

    @property
    def measures(self):
        return {"phi": self.phi}

    @property
    def total_mass(self):
        return self.phi.total_mass


@dataclass(frozen=True)
class VectorModel:
    phi1: SpectralMeasure = field(default_factory=SpectralMeasure)
    phi2: SpectralMeasure = field(default_factory=SpectralMeasure)
    mean: float = 0.0

    kind = "vector"

    def __post_init__(self):
        object.__setattr__(self, "phi1", _measure(self.phi1))
        object.__setattr__(self, "phi2", _measure(self.phi2))
        object.__setattr__(self, "mean", float(self.mean))

    @property
    def measures(self):
        return {"phi1": self.phi1, "phi2": self.phi2}

    @property
    def total_mass(self):
        return self.phi1.total_mass + self.phi2.total_mass


@dataclass(frozen=True)
class TensorModel:
    """Three-measure tensor model.

    ``v`` holds ``(lambda, v1, v2)`` triples, one per atom of ``phi3``.
    """

    phi1: SpectralMeasure = field(default_factory=SpectralMeasure)
    phi2: SpectralMeasure = field(default_factory=SpectralMeasure)
    phi3: SpectralMeasure = field(default_factory=SpectralMeasure)
    v: tuple = ()
    mean: float = 0.0

    kind = "tensor"

    def __post_init__(self):
        for name in ("phi1", "phi2", "phi3"):
            object.__setattr__(self, name, _measure(getattr(self, name)))
        object.__setattr__(
            self, "v", tuple((float(a), float(b), float(c)) for a, b, c in self.v)
        )
        object.__setattr__(self, "mean", float(self.mean))

    @property
    def measures(self):
        return {"phi1": self.phi1, "phi2": self.phi2, "phi3": self.phi3}

    @property
    def total_mass(self):
        return sum(m.total_mass for m in self.measures.values())

    def v_for_atoms(self) -> list:
        """``(v1, v2)`` for each atom of ``phi3``; ``None`` where missing."""
        out = []
        for lam, _ in self.phi3.atoms:
            hit = [(b, c) for a, b, c in self.v if abs(a - lam) <= 1e-12 * max(1.0, lam)]
            out.append(hit[0] if len(hit) == 1 else None)
        return out


@dataclass(frozen=True)
class TetraTensorModel:
    """Four-measure tensor model of the ``u5 = 0`` sub-case.

    The third and fourth families use the fixed ellipse points
    ``(v1, v2) = (1, 0)`` and ``(0, 0)``.
    """

    phi1: SpectralMeasure = field(default_factory=SpectralMeasure)
    phi2: SpectralMeasure = field(default_factory=SpectralMeasure)
    phi3: SpectralMeasure = field(default_factory=SpectralMeasure)
    phi4: SpectralMeasure = field(default_factory=SpectralMeasure)
    mean: float = 0.0

    kind = "tensor"

    def __post_init__(self):
        for name in ("phi1", "phi2", "phi3", "phi4"):
            object.__setattr__(self, name, _measure(getattr(self, name)))
        object.__setattr__(self, "mean", float(self.mean))

    @property
    def measures(self):
        return {"phi1": self.phi1, "phi2": self.phi2, "phi3": self.phi3, "phi4": self.phi4}

    @property
    def total_mass(self):
        return sum(m.total_mass for m in self.measures.values())

    def as_three_measure(self) -> TensorModel:
        """Equivalent :class:`TensorModel` (atoms of phi3 and phi4 merged into phi3)."""
        atoms = [(lam, m, 1.0, 0.0) for lam, m in self.phi3.atoms]
        atoms += [(lam, m, 0.0, 0.0) for lam, m in self.phi4.atoms]
        by_lambda = {}
        for lam, m, v1, v2 in atoms:
            by_lambda.setdefault(lam, []).append((m, v1, v2))
        merged, vs = [], []
        for lam in sorted(by_lambda):
            parts = by_lambda[lam]
            mass = sum(p[0] for p in parts)
            v1 = sum(p[0] * p[1] for p in parts) / mass
            merged.append((lam, mass))
            vs.append((lam, v1, 0.0))
        return TensorModel(self.phi1, self.phi2, SpectralMeasure(tuple(merged)), tuple(vs), self.mean)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    constraint: str
    message: str
    measure: str | None = None
    atom: int | None = None

    def __str__(self):
        where = ""
        if self.measure is not None:
            where = f" [{self.measure}"
            where += f", atom {self.atom}]" if self.atom is not None else "]"
        return f"{self.constraint}{where}: {self.message}"


class ModelError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid model")


def in_ellipse(v1: float, v2: float, tol: float = ELLIPSE_TOL) -> bool:
    return 4.0 * (v1 - 0.5) ** 2 + 8.0 * v2 * v2 <= 1.0 + tol


def _check_measure(name, mu: SpectralMeasure) -> list:
    out = []
    prev = None
    for k, (lam, mass) in enumerate(mu.atoms):
        if not (np.isfinite(lam) and np.isfinite(mass)):
            out.append(Violation("finite atoms", f"lambda={lam}, mass={mass}", name, k))
            continue
        if lam < 0:
            out.append(Violation("nonnegative wavenumber", f"lambda={lam} < 0", name, k))
        if mass <= 0:
            out.append(Violation("positive mass", f"mass={mass} <= 0", name, k))
        if prev is not None and lam <= prev:
            out.append(Violation("increasing wavenumbers",
                                 f"lambda={lam} does not exceed {prev}", name, k))
        prev = lam
    return out


def _close(a, b, scale):
    return abs(a - b) <= REL_TOL * max(scale, 1e-300)


def validate(model) -> list:
    """Every violated constraint of ``model``; empty when admissible."""
    out = []
    for name, mu in model.measures.items():
        out += _check_measure(name, mu)
    if not np.isfinite(model.mean):
        out.append(Violation("finite mean", f"mean={model.mean}"))

    if isinstance(model, VectorModel):
        if model.mean != 0.0:
            out.append(Violation("zero mean", f"vector fields are centred, got {model.mean}"))
        a1, a2 = model.phi1.mass_at_zero, model.phi2.mass_at_zero
        if not _close(a1, 2.0 * a2, a1 + a2):
            out.append(Violation("zero-atom balance",
                                 f"phi1({{0}})={a1} must equal 2*phi2({{0}})={2 * a2}"))

    elif isinstance(model, TensorModel):
        vs = model.v_for_atoms()
        for k, ((lam, _), v) in enumerate(zip(model.phi3.atoms, vs)):
            if v is None:
                out.append(Violation("v per atom",
                                     f"no unique (v1, v2) for lambda={lam}", "phi3", k))
            elif not in_ellipse(*v):
                q = 4 * (v[0] - 0.5) ** 2 + 8 * v[1] ** 2
                out.append(Violation("elliptic region",
                                     f"(v1, v2)={v}: 4(v1-1/2)^2+8v2^2={q:.6g} > 1",
                                     "phi3", k))
        lams = set(model.phi3.lambdas.tolist())
        for lam, _, _ in model.v:
            if not any(abs(lam - x) <= 1e-12 * max(1.0, x) for x in lams):
                out.append(Violation("v per atom", f"v given at lambda={lam} with no phi3 atom"))
        a1, a2, a3 = (m.mass_at_zero for m in (model.phi1, model.phi2, model.phi3))
        A = a1 + a2 + a3
        if A > 0:
            if a3 < (2.0 / 7.0) * A * (1 - REL_TOL):
                out.append(Violation("zero-atom balance",
                                     f"phi3({{0}})={a3} is below 2/7 of the total {A}"))
            if not _close(1.5 * a1, a2, A):
                out.append(Violation("zero-atom balance",
                                     f"phi1({{0}}):phi2({{0}})={a1}:{a2}, expected 1:3/2"))

    elif isinstance(model, TetraTensorModel):
        a = [m.mass_at_zero for m in model.measures.values()]
        A = sum(a)
        if A > 0:
            f2 = 2.0 * sqrt(5.0) * a[1] / (3.0 * A)
            if not _close(1.5 * a[0], a[1], A):
                out.append(Violation("zero-atom balance",
                                     f"phi1({{0}}):phi2({{0}})={a[0]}:{a[1]}, expected 1:3/2"))
            if f2 > 2.0 * sqrt(5.0) / 7.0 * (1 + REL_TOL):
                out.append(Violation("zero-atom balance",
                                     "phi1({0})+phi2({0}) exceeds 5/7 of the total"))
            if not _close(a[2], A * (1.0 / 3.0 - f2 / (2.0 * sqrt(5.0))), A):
                out.append(Violation("zero-atom balance",
                                     f"phi3({{0}})={a[2]} inconsistent with the other atoms"))
            if not _close(a[3], A * (2.0 / 3.0 - 2.0 * f2 / sqrt(5.0)), A):
                out.append(Violation("zero-atom balance",
                                     f"phi4({{0}})={a[3]} inconsistent with the other atoms"))
    return out


def require_valid(model):
    bad = validate(model)
    if bad:
        raise ModelError(bad)
    return model


# ---------------------------------------------------------------------------
# Voigt helpers

def voigt_to_tensor(F) -> np.ndarray:
    """6x6 Voigt matrix to a fully symmetric 3x3x3x3 tensor."""
    F = np.asarray(F, float)
    T = np.zeros(F.shape[:-2] + (3, 3, 3, 3))
    for I, (i, j) in enumerate(VOIGT_PAIRS):
        for J, (l, m) in enumerate(VOIGT_PAIRS):
            v = F[..., I, J]
            for a, b in {(i, j), (j, i)}:
                for c, d in {(l, m), (m, l)}:
                    T[..., a, b, c, d] = v
    return T


def tensor_to_voigt(T) -> np.ndarray:
    T = np.asarray(T, float)
    idx = np.array(VOIGT_PAIRS)
    return T[..., idx[:, 0][:, None], idx[:, 1][:, None], idx[:, 0][None, :], idx[:, 1][None, :]]


# ---------------------------------------------------------------------------
# normalised spectral densities

def f_matrix_vector(u1: float, u2: float) -> np.ndarray:
    """``u1 D^1 + u2 D^2`` at the pole ``p = e_0``."""
    if u1 < -1e-15 or u2 < -1e-15 or abs(u1 + u2 - 1.0) > 1e-12:
        raise ValueError(f"({u1}, {u2}) is not a point of the unit simplex")
    return np.diag([u1 / 2.0, u2, u1 / 2.0])


def extreme_matrix(family: int, v1: float = 0.5, v2: float = 0.0) -> np.ndarray:
    """Voigt form of the extreme points ``D^1``, ``D^2`` and ``D(v)``."""
    D = np.zeros((6, 6))
    if family == 1:
        D[3, 3] = D[5, 5] = 0.5
    elif family == 2:
        D[0, 0] = D[2, 2] = D[4, 4] = 1.0 / 3.0
        D[0, 2] = D[2, 0] = -1.0 / 3.0
    elif family == 3:
        D[0, 0] = D[2, 2] = D[0, 2] = D[2, 0] = v1 / 2.0
        D[1, 1] = 1.0 - v1
        D[0, 1] = D[1, 0] = D[1, 2] = D[2, 1] = v2
    else:
        raise ValueError("family must be 1, 2 or 3")
    return D


def u_from_v(v1: float, v2: float) -> np.ndarray:
    """The matrix ``D(v)`` for a point of the elliptic region."""
    return extreme_matrix(3, v1, v2)


@dataclass(frozen=True)
class SimplexCoords:
    """``(u1, u2, u3, u4, u5)`` with ``u1..u4`` on the simplex."""

    u: tuple

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(float(x) for x in self.u))
        if len(self.u) != 5:
            raise ValueError("need five coordinates")

    def violations(self, tol: float = 1e-12) -> list:
        u1, u2, u3, u4, u5 = self.u
        out = []
        if min(u1, u2, u3, u4) < -tol:
            out.append("u1..u4 must be nonnegative")
        if abs(u1 + u2 + u3 + u4 - 1.0) > tol:
            out.append("u1+u2+u3+u4 must equal 1")
        if abs(u5) > sqrt(max(u3 * u4, 0.0) / 2.0) + tol:
            out.append("|u5| exceeds sqrt(u3 u4 / 2)")
        return out


def v_from_u(u) -> tuple:
    """``(v1, v2)`` of a simplex point; ``(1/2, 0)`` when ``u3 + u4 = 0``."""
    u = u.u if isinstance(u, SimplexCoords) else tuple(u)
    s = u[2] + u[3]
    if s == 0:
        return 0.5, 0.0
    return u[2] / s, u[4] / s


def f_matrix_tensor(coords, check: bool = True) -> np.ndarray:
    """Voigt matrix ``u1 D^1 + u2 D^2 + (u3 + u4) D(v)`` at the pole.

    With ``check=False`` inadmissible coordinates are accepted, which is
    useful for exhibiting the loss of positivity.
    """
    c = coords if isinstance(coords, SimplexCoords) else SimplexCoords(tuple(coords))
    if check:
        bad = c.violations()
        if bad:
            raise ValueError("; ".join(bad))
    u1, u2, u3, u4, u5 = c.u
    F = u1 * extreme_matrix(1) + u2 * extreme_matrix(2)
    s = u3 + u4
    if s != 0:
        F = F + s * extreme_matrix(3, u3 / s, u5 / s)
    elif u5 != 0:
        F[0, 1] = F[1, 0] = F[1, 2] = F[2, 1] = u5
    return F


def f_matrix_zero(f010: float, f020: float) -> np.ndarray:
    """Isotropic Voigt matrix at the origin of wavenumber space."""
    a = f010 / 3.0 + 2.0 * f020 / (3.0 * sqrt(5.0))
    b = f010 / 3.0 - f020 / (3.0 * sqrt(5.0))
    c = f020 / (2.0 * sqrt(5.0))
    F = np.zeros((6, 6))
    F[:3, :3] = b
    F[0, 0] = F[1, 1] = F[2, 2] = a
    F[3, 3] = F[4, 4] = F[5, 5] = c
    return F


_R2, _R5, _R7, _R35 = sqrt(2), sqrt(5), sqrt(7), sqrt(35)

# rows f1..f5, columns u1..u5
_F_FROM_U = np.array([
    [0.0, 0.0, 2 / 3, 1 / 3, 4 / 3],
    [2 / _R5, 4 / (3 * _R5), 1 / (3 * _R5), 2 / (3 * _R5), -4 / (3 * _R5)],
    [0.0, 0.0, -2 / 3, 2 / 3, 2 / 3],
    [_R2 / _R7, -4 * _R2 / (3 * _R7), _R2 / (3 * _R7), 2 * _R2 / (3 * _R7), -4 * _R2 / (3 * _R7)],
    [-4 * _R2 / _R35, 2 * _R2 / (3 * _R35), _R2 / _R35, 2 * _R2 / _R35, -4 * _R2 / _R35],
])


def f_components_from_u(u) -> np.ndarray:
    """Coordinates ``f1..f5`` of the density on the uncoupled basis."""
    u = u.u if isinstance(u, SimplexCoords) else tuple(u)
    return _F_FROM_U @ np.asarray(u, float)


def voigt_from_f_components(f) -> np.ndarray:
    """Voigt matrix at the pole from ``f1..f5``."""
    f1, f2, f3, f4, f5 = np.asarray(f, float)
    F = np.zeros((6, 6))
    F[0, 0] = F[2, 2] = (f1 / 3 + 2 * f2 / (3 * _R5) - f3 / 3
                         - _R2 * f4 / (3 * _R7) + 3 * f5 / (2 * sqrt(70)))
    F[0, 1] = F[1, 2] = (f1 / 3 - f2 / (3 * _R5) + f3 / 6
                         - _R2 * f4 / (3 * _R7) - _R2 * f5 / _R35)
    F[0, 2] = (f1 / 3 - f2 / (3 * _R5) - f3 / 3
               + 2 * _R2 * f4 / (3 * _R7) + f5 / (2 * sqrt(70)))
    F[1, 1] = (f1 / 3 + 2 * f2 / (3 * _R5) + 2 * f3 / 3
               + 2 * _R2 * f4 / (3 * _R7) + 2 * _R2 * f5 / _R35)
    F[3, 3] = F[5, 5] = f2 / (2 * _R5) + f4 / (2 * sqrt(14)) - _R2 * f5 / _R35
    F[4, 4] = f2 / (2 * _R5) - f4 / sqrt(14) + f5 / (2 * sqrt(70))
    return np.triu(F) + np.triu(F, 1).T


def zero_atom_v(phi2_zero: float, phi3_zero: float) -> tuple:
    """The ``(v1, v2)`` that makes the density at the origin isotropic.

    Given the zero atoms of the second and third measures (with the first
    fixed by the 1 : 3/2 split), returns the unique ellipse point for which
    ``u1 D^1 + u2 D^2 + u3 D(v)`` is rotation invariant.
    """
    if phi3_zero <= 0:
        raise ValueError("phi3 has no atom at zero")
    t = phi2_zero / phi3_zero
    v1 = 2.0 / 3.0 * (1.0 - t / 3.0)
    return v1, v1 / 2.0 - t / 3.0


def vector_density(theta, phi, family: int) -> np.ndarray:
    """Extreme vector density rotated to direction ``(theta, phi)``."""
    k = rotation_from_angles(theta, phi)
    D = f_matrix_vector(1.0, 0.0) if family == 1 else f_matrix_vector(0.0, 1.0)
    return k @ D @ k.T


def tensor_density(theta, phi, family: int, v1: float = 0.5, v2: float = 0.0) -> np.ndarray:
    """Extreme tensor density rotated to direction ``(theta, phi)`` (rank 4)."""
    k = rotation_from_angles(theta, phi)
    T = voigt_to_tensor(extreme_matrix(family, v1, v2))
    return np.einsum("ia,jb,lc,md,abcd->ijlm", k, k, k, k, T)


# ---------------------------------------------------------------------------
# JSON

def _measure_to_list(mu: SpectralMeasure):
    return [{"lambda": lam, "mass": m} for lam, m in mu.atoms]


def model_to_dict(model) -> dict:
    d = {"kind": model.kind, "mean": model.mean,
         "measures": [{"name": n, "atoms": _measure_to_list(mu)}
                      for n, mu in model.measures.items()]}
    if isinstance(model, TensorModel):
        d["v"] = [{"lambda": a, "v1": b, "v2": c} for a, b, c in model.v]
    return d


def model_from_dict(d: dict):
    """Build a model from the JSON layout (no validation).

    Structural problems raise ``ValueError``.
    """
    try:
        return _model_from_dict(d)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed model description: {exc!r}") from exc


def _model_from_dict(d: dict):
    kind = d.get("kind")
    meas = {}
    for entry in d.get("measures", []):
        atoms = tuple((float(a["lambda"]), float(a["mass"])) for a in entry.get("atoms", []))
        meas[entry["name"]] = SpectralMeasure(atoms)
    mean = float(d.get("mean", 0.0))
    if kind == "scalar":
        extra = set(meas) - {"phi", "phi1"}
        if extra:
            raise ValueError(f"unexpected measures {sorted(extra)} for a scalar model")
        return ScalarModel(meas.get("phi", meas.get("phi1", SpectralMeasure())), mean)
    if kind == "vector":
        extra = set(meas) - {"phi1", "phi2"}
        if extra:
            raise ValueError(f"unexpected measures {sorted(extra)} for a vector model")
        return VectorModel(meas.get("phi1", SpectralMeasure()),
                           meas.get("phi2", SpectralMeasure()), mean)
    if kind == "tensor":
        names = {"phi1", "phi2", "phi3", "phi4"}
        extra = set(meas) - names
        if extra:
            raise ValueError(f"unexpected measures {sorted(extra)} for a tensor model")
        get = lambda n: meas.get(n, SpectralMeasure())  # noqa: E731
        if "phi4" in meas:
            if d.get("v"):
                raise ValueError("a four-measure tensor model takes no v entries")
            return TetraTensorModel(get("phi1"), get("phi2"), get("phi3"), get("phi4"), mean)
        v = tuple((float(e["lambda"]), float(e["v1"]), float(e["v2"])) for e in d.get("v", []))
        return TensorModel(get("phi1"), get("phi2"), get("phi3"), v, mean)
    raise ValueError(f"unknown model kind {kind!r}")


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path, check: bool = True):
    with open(path) as fh:
        model = model_from_dict(json.load(fh))
    return require_valid(model) if check else model


def save_model(model, path) -> None:
    atomic_write_text(path, json.dumps(model_to_dict(model), indent=2) + "\n")


EXAMPLES = ("scalar", "vector", "tensor")


def load_example(name: str):
    """One of the bundled example models (see :data:`EXAMPLES`)."""
    from importlib.resources import files

    if name not in EXAMPLES:
        raise ValueError(f"unknown example {name!r}; choose from {EXAMPLES}")
    text = files("isofield").joinpath("data", f"{name}.json").read_text()
    return require_valid(model_from_dict(json.loads(text)))
