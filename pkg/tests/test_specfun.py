import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import spherical_jn
from scipy.spatial.transform import Rotation

from isofield.specfun import (AngularPair, HarmonicIndex, angles, direction, gaunt_integral,
                              harmonic_slot, real_spherical_harmonic, real_spherical_harmonics,
                              rotation_from_angles, sphere_grid, spherical_bessel,
                              spherical_bessel_all, wigner_d_matrix)


def test_bessel_matches_scipy():
    x = np.concatenate([np.linspace(0, 30, 601), [1e-8, 1e-3, 3.14159, 50.0, 120.0]])
    J = spherical_bessel_all(40, x)
    ref = np.array([spherical_jn(n, x) for n in range(41)])
    assert np.max(np.abs(J - ref)) < 1e-13


def test_bessel_at_zero():
    J = spherical_bessel_all(5, 0.0)
    np.testing.assert_array_equal(J, [1, 0, 0, 0, 0, 0])


def test_bessel_near_zero_of_j0():
    # matching on j1 keeps the normalisation accurate where j0 vanishes
    x = np.pi * np.arange(1, 8)
    J = spherical_bessel_all(20, x)
    ref = np.array([spherical_jn(n, x) for n in range(21)])
    assert np.max(np.abs(J - ref)) < 1e-14


@pytest.mark.parametrize("bad", [-1.0, np.nan, np.inf])
def test_bessel_rejects_bad_argument(bad):
    with pytest.raises(ValueError):
        spherical_bessel(2, bad)


def test_bessel_shape_follows_argument():
    assert spherical_bessel_all(3, np.ones((4, 5))).shape == (4, 4, 5)
    assert spherical_bessel(2, 1.5) == pytest.approx(spherical_jn(2, 1.5), abs=1e-15)


def test_harmonics_orthonormal():
    th, ph, w = sphere_grid(12)
    S = real_spherical_harmonics(6, th, ph)
    G = (S * w) @ S.T
    assert np.max(np.abs(G - np.eye(len(S)))) < 1e-13


def test_harmonic_slot_layout():
    assert [harmonic_slot(l, m) for l in range(2) for m in range(-l, l + 1)] == [0, 1, 2, 3]
    v = real_spherical_harmonic(2, -1, 0.7, 1.1)
    assert v == pytest.approx(real_spherical_harmonics(2, 0.7, 1.1)[harmonic_slot(2, -1)])


def test_harmonics_match_wigner_columns():
    k = Rotation.random(random_state=3).as_matrix()
    th, ph = angles(k[:, 1])
    for ell in range(5):
        D = wigner_d_matrix(ell, k)
        S = real_spherical_harmonics(ell, th, ph)
        for m in range(-ell, ell + 1):
            lhs = S[harmonic_slot(ell, m)]
            rhs = np.sqrt((2 * ell + 1) / (4 * np.pi)) * D[-m + ell, ell]
            assert lhs == pytest.approx(rhs, abs=1e-12)


def test_wigner_l1_is_rotation():
    for seed in range(5):
        k = Rotation.random(random_state=seed).as_matrix()
        assert np.max(np.abs(wigner_d_matrix(1, k) - k)) < 1e-13


def test_wigner_homomorphism():
    k1, k2 = Rotation.random(2, random_state=1).as_matrix()
    for ell in (2, 3, 4):
        lhs = wigner_d_matrix(ell, k1 @ k2)
        rhs = wigner_d_matrix(ell, k1) @ wigner_d_matrix(ell, k2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_rotation_maps_pole_to_direction():
    k = rotation_from_angles(1.2, 4.0)
    np.testing.assert_allclose(k @ [0, 1, 0], direction(1.2, 4.0), atol=1e-15)
    np.testing.assert_allclose(k.T @ k, np.eye(3), atol=1e-15)
    assert np.linalg.det(k) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, np.pi - 0.01), st.floats(0, 2 * np.pi - 1e-6))
def test_angles_roundtrip(theta, phi):
    th, ph = angles(direction(theta, phi))
    assert th == pytest.approx(theta, abs=1e-9)
    assert np.cos(ph - phi) == pytest.approx(1.0, abs=1e-9)


def test_angular_pair_validation():
    assert AngularPair(0.0, 2.0).phi == 0.0  # pole
    assert AngularPair(1.0, 2 * np.pi + 0.5).phi == pytest.approx(0.5)
    with pytest.raises(ValueError):
        AngularPair(-0.1, 0.0)
    with pytest.raises(ValueError):
        HarmonicIndex(2, 3)
    assert angles(np.zeros(3)) == (0.0, 0.0)


def test_gaunt_against_quadrature():
    th, ph, w = sphere_grid(10)
    S = real_spherical_harmonics(4, th, ph)
    rng = np.random.default_rng(0)
    for _ in range(60):
        idx = [(int(l), int(rng.integers(-l, l + 1))) for l in rng.integers(0, 5, 3)]
        q = np.sum(w * np.prod([S[harmonic_slot(*i)] for i in idx], axis=0))
        assert gaunt_integral(*idx) == pytest.approx(q, abs=1e-13)


def test_gaunt_vanishes_for_odd_or_broken_triangle():
    assert gaunt_integral((1, 0), (1, 0), (1, 0)) == 0.0
    assert gaunt_integral((0, 0), (1, 0), (3, 0)) == 0.0
    assert gaunt_integral(HarmonicIndex(1, 1), HarmonicIndex(1, 1), HarmonicIndex(0, 0)) == \
        pytest.approx(1 / np.sqrt(4 * np.pi))
