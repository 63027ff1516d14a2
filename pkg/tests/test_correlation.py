from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isofield.correlation import (M_TO_L, TABLE2, L_all, L_basis, M_all, M_rank2,
                                  density_from_M, lomakin_coefficients,
                                  longitudinal_transverse_correlation, n_functions,
                                  n_functions_tetra, robertson_AB, scalar_correlation,
                                  tensor_correlation, tensor_correlation_u5zero,
                                  vector_correlation)
from isofield.model import (ScalarModel, SpectralMeasure, TensorModel, TetraTensorModel,
                            VectorModel, tensor_density)
from isofield.specfun import direction, sphere_grid, spherical_bessel_all
from isofield.verify import _act, random_rotations

# quadrature projections of a unit atom at lambda * rho = 1.3, (v1, v2) = (0.3, 0.1)
FROZEN_N = np.array([
    [-0.11797464065340936, 0.16232108451965777, -0.02056253275515286,
     0.029281752920912375, -0.005595127742125379],
    [-0.0405399444980774, 0.07986482471588044, 0.028349231630558042,
     -0.038109815937528824, 0.0009325212903541811],
    [0.12149197632011192, 0.03834175821235802, -0.009516569699296533,
     -0.004532141131689847, 0.0018184165161907642],
])


def test_n_functions_frozen():
    N = n_functions(1.3, 0.3, 0.1)
    assert np.max(np.abs(N - FROZEN_N)) < 1e-13


def test_table_entries_in_closed_form():
    # a few coefficients checked one by one (units of j0, j2, j4)
    assert TABLE2[0, 0, :, 0] == pytest.approx([-2 / 15, -4 / 21, -2 / 35])
    assert TABLE2[0, 4, :, 0] == pytest.approx([0, 0, -2])
    assert TABLE2[1, 4, :, 0] == pytest.approx([0, 0, 1 / 3])
    # second column: j4 coefficient equals that of the first column
    for n in range(2):
        assert TABLE2[n, 1, 2, 0] == pytest.approx(TABLE2[n, 0, 2, 0])
    np.testing.assert_allclose(TABLE2[2, 1, 2], TABLE2[2, 0, 2])


def test_n_functions_at_zero():
    # only the isotropic part survives and equals the sphere average of the density
    th, ph, w = sphere_grid(6)
    N = n_functions(0.0, 0.3, 0.1)
    assert not N[:, 2:].any()
    for fam in (1, 2, 3):
        avg = np.einsum("k,kijlm->ijlm", w, density_from_M(th, ph, fam, 0.3, 0.1)) / (4 * np.pi)
        R = np.einsum("q,qijlm->ijlm", N[fam - 1], L_all(np.zeros(3)))
        assert np.max(np.abs(R - avg)) < 1e-14


def test_n_functions_broadcast():
    x = np.linspace(0, 5, 7)
    N = n_functions(x, np.full(7, 0.2), 0.0)
    assert N.shape == (3, 5, 7)
    np.testing.assert_allclose(N[:, :, 3], n_functions(x[3], 0.2, 0.0), atol=1e-15)
    assert n_functions_tetra(x).shape == (4, 5, 7)


def test_eq25_identity():
    rng = np.random.default_rng(5)
    th = np.arccos(rng.uniform(-1, 1, 100))
    ph = rng.uniform(0, 2 * np.pi, 100)
    M = M_all(th, ph)
    for k in range(100):
        L = L_all(direction(th[k], ph[k]))
        rhs = np.einsum("nq,qijlm->nijlm", M_TO_L, L)
        assert np.max(np.abs(M[k] - rhs)) < 1e-12


def test_m5_traceless():
    M5 = M_all(0.4, 1.2)[4]
    assert np.max(np.abs(np.einsum("iilm->lm", M5))) < 1e-14


def test_density_from_M_matches_rotated_extremes():
    for fam, v in ((1, (0.5, 0)), (2, (0.5, 0)), (3, (0.3, 0.1)), (3, (1.0, 0.0))):
        a = density_from_M(1.1, 2.3, fam, *v)
        b = tensor_density(1.1, 2.3, fam, *v)
        assert np.max(np.abs(a - b)) < 1e-14


def test_rank2_m_basis():
    np.testing.assert_allclose(M_rank2("01", 0, 0), np.eye(3) / sqrt(3), atol=1e-15)
    p = direction(0.9, 0.4)
    assert np.allclose(M_rank2("21", 0.9, 0.4), sqrt(3 / 2) * (np.outer(p, p) - np.eye(3) / 3))
    with pytest.raises(ValueError):
        M_rank2("11", 0, 0)


def test_L_basis_undefined_at_zero():
    with pytest.raises(ValueError):
        L_basis(3, [0, 0, 0])
    np.testing.assert_array_equal(L_basis(1, [0, 0, 0]), L_all([1, 0, 0])[0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 5), st.floats(0.01, 2)), min_size=1, max_size=4,
                unique_by=lambda a: a[0]), st.floats(0, 10))
def test_scalar_is_sinc_sum(atoms, rho):
    mu = SpectralMeasure(tuple(sorted(atoms)))
    expect = sum(m * (np.sin(l * rho) / (l * rho) if l * rho > 0 else 1.0) for l, m in mu.atoms)
    assert scalar_correlation(ScalarModel(mu), rho) == pytest.approx(expect, abs=1e-13)


def test_scalar_rejects_negative_rho():
    with pytest.raises(ValueError):
        scalar_correlation(SpectralMeasure(((1.0, 1.0),)), -1.0)


def test_vector_at_origin(vector_example):
    R = vector_correlation(vector_example, np.zeros(3))
    np.testing.assert_allclose(R, vector_example.total_mass / 3 * np.eye(3), atol=1e-15)


def test_longitudinal_transverse_form(vector_example):
    half = SpectralMeasure(tuple((l, m / 2) for l, m in vector_example.phi1.atoms))
    rng = np.random.default_rng(2)
    for xi in rng.normal(size=(10, 3)):
        a = vector_correlation(vector_example, xi)
        b = longitudinal_transverse_correlation(vector_example.phi2, half, xi)
        assert np.max(np.abs(a - b)) < 1e-14


def test_j1_over_x_identity():
    x = np.random.default_rng(0).uniform(0.01, 20, 50)
    j = spherical_bessel_all(2, x)
    np.testing.assert_allclose(j[1] / x, (j[0] + j[2]) / 3, atol=1e-13)


def test_two_scalar_form(vector_example):
    xi = np.array([0.3, -1.1, 0.6])
    A, B = robertson_AB(vector_example, np.linalg.norm(xi))
    R = A * np.outer(xi, xi) + B * np.eye(3)
    assert np.max(np.abs(R - vector_correlation(vector_example, xi))) < 1e-14


def test_polynomial_form(tensor_example):
    xi = np.array([0.5, 0.2, -0.7])
    rho = np.linalg.norm(xi)
    a = lomakin_coefficients(tensor_example, rho)
    d = np.eye(3)
    R = (a[0] * np.einsum("ij,lm->ijlm", d, d)
         + a[1] * (np.einsum("il,jm->ijlm", d, d) + np.einsum("im,jl->ijlm", d, d))
         + a[2] * (np.einsum("j,l,im->ijlm", xi, xi, d) + np.einsum("i,m,jl->ijlm", xi, xi, d)
                   + np.einsum("i,l,jm->ijlm", xi, xi, d) + np.einsum("j,m,il->ijlm", xi, xi, d))
         + a[3] * (np.einsum("i,j,lm->ijlm", xi, xi, d) + np.einsum("l,m,ij->ijlm", xi, xi, d))
         + a[4] * np.einsum("i,j,l,m->ijlm", xi, xi, xi, xi))
    assert np.max(np.abs(R - tensor_correlation(tensor_example, xi))) < 1e-13
    with pytest.raises(ValueError):
        lomakin_coefficients(tensor_example, 0.0)


def test_tensor_symmetries(tensor_example):
    R = tensor_correlation(tensor_example, [0.2, 0.9, -0.4])
    for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
        assert np.max(np.abs(R - R.transpose(perm))) < 1e-15


def test_isotropy_of_closed_forms(vector_example, tensor_example):
    rng = np.random.default_rng(8)
    for k in random_rotations(10, 4):
        xi = rng.normal(size=3)
        for m, f in ((vector_example, vector_correlation), (tensor_example, tensor_correlation)):
            assert np.max(np.abs(f(m, k @ xi) - _act(k, f(m, xi)))) < 1e-13


def test_u5zero_matches_three_measure():
    tetra = TetraTensorModel(((1.0, 0.2),), ((2.0, 0.3),), ((0.7, 0.4), (1.5, 0.1)),
                             ((1.2, 0.5),))
    three = TensorModel(tetra.phi1, tetra.phi2, SpectralMeasure(((0.7, 0.4), (1.5, 0.1))),
                        ((0.7, 1.0, 0.0), (1.5, 1.0, 0.0)))
    xi = np.array([0.4, -0.3, 1.0])
    no4 = TetraTensorModel(tetra.phi1, tetra.phi2, tetra.phi3, ())
    assert np.max(np.abs(tensor_correlation_u5zero(no4, xi) - tensor_correlation(three, xi))) < 1e-14
    merged = tetra.as_three_measure()
    assert np.max(np.abs(tensor_correlation(tetra, xi) - tensor_correlation(merged, xi))) < 1e-14


def test_invalid_model_rejected():
    with pytest.raises(ValueError):
        vector_correlation(VectorModel(((1.0, -1.0),), ()), [1, 0, 0])
