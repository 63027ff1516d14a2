import json
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isofield.model import (EXAMPLES, ModelError, ScalarModel, SimplexCoords, SpectralMeasure,
                            TensorModel, TetraTensorModel, VectorModel, extreme_matrix,
                            f_components_from_u, f_matrix_tensor, f_matrix_vector, f_matrix_zero,
                            in_ellipse, load_example, load_model, model_from_dict, model_to_dict,
                            require_valid, save_model, tensor_to_voigt, v_from_u, validate,
                            voigt_from_f_components, voigt_to_tensor, zero_atom_v)


def names(model):
    return {v.constraint for v in validate(model)}


def test_measure_properties():
    mu = SpectralMeasure(((0.0, 0.5), (2.0, 1.5)))
    assert mu.total_mass == 2.0
    assert mu.mass_at_zero == 0.5
    np.testing.assert_array_equal(mu.lambdas, [0.0, 2.0])
    assert len(SpectralMeasure()) == 0


@pytest.mark.parametrize("atoms,constraint", [
    (((-1.0, 1.0),), "nonnegative wavenumber"),
    (((1.0, 0.0),), "positive mass"),
    (((1.0, np.nan),), "finite atoms"),
    (((2.0, 1.0), (1.0, 1.0)), "increasing wavenumbers"),
])
def test_measure_violations(atoms, constraint):
    assert constraint in names(ScalarModel(atoms))


def test_vector_rules():
    assert not validate(VectorModel(((0.0, 0.2),), ((0.0, 0.1),)))
    assert "zero-atom balance" in names(VectorModel(((0.0, 0.2),), ((0.0, 0.2),)))
    assert "zero mean" in names(VectorModel(((1.0, 1.0),), (), mean=1.0))


def test_tensor_needs_v_for_each_atom():
    m = TensorModel((), (), ((1.0, 1.0), (2.0, 1.0)), ((1.0, 0.5, 0.0),))
    bad = validate(m)
    assert [(v.constraint, v.atom) for v in bad] == [("v per atom", 1)]
    m = TensorModel((), (), ((1.0, 1.0),), ((1.0, 0.5, 0.0), (3.0, 0.5, 0.0)))
    assert "v per atom" in names(m)


def test_tensor_zero_atom_rules():
    ok = TensorModel(((0.0, 0.2),), ((0.0, 0.3),), ((0.0, 0.4),), ((0.0, 0.5, 0.0),))
    assert not validate(ok)
    few = TensorModel(((0.0, 0.2),), ((0.0, 0.3),), ((0.0, 0.1),), ((0.0, 0.5, 0.0),))
    assert "zero-atom balance" in names(few)
    split = TensorModel(((0.0, 0.3),), ((0.0, 0.3),), ((0.0, 0.4),), ((0.0, 0.5, 0.0),))
    assert "zero-atom balance" in names(split)


def test_tetra_zero_atom_rules():
    # f2 at the top of its range: phi3(0) = 4/21, phi4(0) = 2/21 of the total
    A = 1.0
    a1, a2 = 2 / 7 * A, 3 / 7 * A
    f2 = 2 * sqrt(5) * a2 / 3
    a3 = A * (1 / 3 - f2 / (2 * sqrt(5)))
    a4 = A * (2 / 3 - 2 * f2 / sqrt(5))
    assert a1 + a2 + a3 + a4 == pytest.approx(A)
    m = TetraTensorModel(((0.0, a1),), ((0.0, a2),), ((0.0, a3),), ((0.0, a4),))
    assert not validate(m)
    m = TetraTensorModel(((0.0, a1),), ((0.0, a2),), ((0.0, a3 + 0.1),), ((0.0, a4),))
    assert "zero-atom balance" in names(m)


def test_model_error_lists_everything():
    m = VectorModel(((-1.0, 1.0), (0.5, -1.0)), ())
    with pytest.raises(ModelError) as err:
        require_valid(m)
    assert len(err.value.violations) == 2
    assert "nonnegative wavenumber" in str(err.value)


def test_ellipse():
    assert in_ellipse(0.5, 0.0) and in_ellipse(1.0, 0.0) and in_ellipse(0.0, 0.0)
    assert in_ellipse(0.5, 1 / (2 * sqrt(2)))
    assert not in_ellipse(0.5, 0.36)
    assert not in_ellipse(1.01, 0.0)


def test_voigt_roundtrip():
    rng = np.random.default_rng(0)
    F = rng.normal(size=(6, 6))
    F = F + F.T
    T = voigt_to_tensor(F)
    np.testing.assert_array_equal(tensor_to_voigt(T), F)
    assert np.array_equal(T, T.transpose(1, 0, 2, 3)) and np.array_equal(T, T.transpose(2, 3, 0, 1))


def test_extreme_matrices():
    assert np.trace(extreme_matrix(1)) == pytest.approx(1.0)
    assert np.trace(extreme_matrix(2)) == pytest.approx(1.0)
    assert np.trace(extreme_matrix(3, 0.2, 0.1)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        extreme_matrix(4)


def test_vector_density_matrix():
    np.testing.assert_allclose(f_matrix_vector(0.4, 0.6), np.diag([0.2, 0.6, 0.2]))
    with pytest.raises(ValueError):
        f_matrix_vector(0.5, 0.6)


def test_f_components_match_voigt_layout():
    rng = np.random.default_rng(1)
    for _ in range(50):
        u = rng.dirichlet(np.ones(4))
        u5 = rng.uniform(-1, 1) * sqrt(u[2] * u[3] / 2)
        c = SimplexCoords(tuple(u) + (u5,))
        lhs = voigt_from_f_components(f_components_from_u(c))
        assert np.max(np.abs(lhs - f_matrix_tensor(c))) < 1e-14


def test_v_from_u():
    assert v_from_u((0.1, 0.1, 0.6, 0.2, 0.1)) == pytest.approx((0.75, 0.125))
    assert v_from_u((0.5, 0.5, 0.0, 0.0, 0.0)) == (0.5, 0.0)


def test_u5_bound_is_sharp():
    u3, u4 = 0.3, 0.2
    edge = sqrt(u3 * u4 / 2)
    ok = f_matrix_tensor((0.25, 0.25, u3, u4, edge))
    assert np.linalg.eigvalsh(ok)[0] > -1e-14
    bad = f_matrix_tensor((0.25, 0.25, u3, u4, 1.05 * edge), check=False)
    assert np.linalg.eigvalsh(bad)[0] < -1e-6
    with pytest.raises(ValueError):
        f_matrix_tensor((0.25, 0.25, u3, u4, 1.05 * edge))


def test_zero_density_psd_range():
    # a negative f020 breaks positivity
    assert np.linalg.eigvalsh(f_matrix_zero(1.0, 0.2))[0] >= -1e-15
    assert np.linalg.eigvalsh(f_matrix_zero(1.0, -0.2))[0] < 0


def test_zero_atom_v_is_isotropic():
    # u1 D1 + u2 D2 + u3 D(v) at the v returned is invariant under rotations about any axis
    from isofield.verify import _act, random_rotations

    a1, a2, a3 = 0.2, 0.3, 0.4
    v = zero_atom_v(a2, a3)
    assert v == pytest.approx((0.5, 0.0))
    F = (a1 * extreme_matrix(1) + a2 * extreme_matrix(2) + a3 * extreme_matrix(3, *v)) / 0.9
    T = voigt_to_tensor(F)
    for k in random_rotations(5, 2):
        assert np.max(np.abs(_act(k, T) - T)) < 1e-14


def test_tetra_as_three_measure():
    m = TetraTensorModel(((1.0, 0.3),), (), ((1.0, 0.2), (2.0, 0.4)), ((1.0, 0.6),))
    t = m.as_three_measure()
    assert t.phi3.atoms == ((1.0, 0.8), (2.0, 0.4))
    assert t.v_for_atoms() == [(0.25, 0.0), (1.0, 0.0)]


@pytest.mark.parametrize("name", EXAMPLES)
def test_examples_load_and_roundtrip(name, tmp_path):
    m = load_example(name)
    path = tmp_path / "m.json"
    save_model(m, path)
    assert load_model(path) == m


def test_example_tensor_has_zero_atoms_and_boundary_v(tensor_example):
    m = tensor_example
    assert all(mu.mass_at_zero > 0 for mu in m.measures.values())
    q = [4 * (a - 0.5) ** 2 + 8 * b ** 2 for a, b in m.v_for_atoms()]
    assert max(q) == pytest.approx(1.0, abs=1e-12)


def test_from_dict_rejects_unknown():
    with pytest.raises(ValueError):
        model_from_dict({"kind": "spinor"})
    with pytest.raises(ValueError):
        model_from_dict({"kind": "vector", "measures": [{"name": "phi3", "atoms": []}]})


atom_lists = st.lists(
    st.tuples(st.floats(0.0, 10.0, allow_nan=False), st.floats(0.01, 5.0, allow_nan=False)),
    max_size=4, unique_by=lambda a: a[0]).map(lambda xs: tuple(sorted(xs)))


@settings(max_examples=50, deadline=None)
@given(atom_lists, atom_lists, atom_lists, st.floats(-3, 3, allow_nan=False))
def test_json_roundtrip_tensor(p1, p2, p3, mean):
    v = tuple((lam, 0.5, 0.1) for lam, _ in p3)
    m = TensorModel(p1, p2, p3, v, mean)
    again = model_from_dict(json.loads(json.dumps(model_to_dict(m))))
    assert again == m
