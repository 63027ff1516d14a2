from math import sqrt

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from isofield.coupling import (clebsch_gordan, coupling_table, gg, gg_block, gg_matrix,
                               precompute, wigner_product_expand)
from isofield.specfun import wigner_d_matrix


def test_printed_constants():
    for n in range(-2, 3):
        for q in range(-2, 3):
            assert gg(0, 0, 2, n, 2, q) == pytest.approx(sqrt(1 / 5) * (n == q), abs=1e-14)
    assert gg(2, 0, 2, 0, 2, 0) == pytest.approx(sqrt(2 / 7), abs=1e-14)
    assert gg(4, 0, 2, 0, 2, 0) == pytest.approx(3 * sqrt(2) / sqrt(35), abs=1e-14)


def test_clebsch_gordan_known_values():
    assert clebsch_gordan(1, 1, 1, -1, 0, 0) == pytest.approx(1 / sqrt(3))
    assert clebsch_gordan(1, 0, 1, 0, 2, 0) == pytest.approx(sqrt(2 / 3))
    assert clebsch_gordan(1, 1, 1, 1, 2, 2) == 1.0
    assert clebsch_gordan(1, 0, 1, 0, 1, 0) == 0.0
    assert clebsch_gordan(1, 1, 1, 0, 2, 0) == 0.0  # m mismatch


@pytest.mark.parametrize("l1,l2", [(1, 1), (2, 2), (1, 3), (3, 4)])
def test_blocks_are_orthogonal(l1, l2):
    # stacking all l gives an orthogonal change of basis
    rows = np.concatenate([gg_matrix(l, l1, l2) for l in range(abs(l1 - l2), l1 + l2 + 1)])
    n = (2 * l1 + 1) * (2 * l2 + 1)
    assert rows.shape == (n, n)
    assert np.max(np.abs(rows @ rows.T - np.eye(n))) < 1e-13


def test_sign_convention():
    for l1 in range(4):
        for l2 in range(4):
            for l in range(abs(l1 - l2), l1 + l2 + 1):
                G = gg_block(l, l1, l2)
                if (l + l1 + l2) % 2 == 0:
                    assert G[l, l1, l2] > 0
                else:
                    assert G[l, l1, l2] == 0.0
                    flat = G.ravel()
                    assert flat[np.flatnonzero(np.abs(flat) > 1e-10)[0]] > 0


def test_odd_triple_is_skew():
    # l = 1 in 1 x 1 is the cross product: antisymmetric and nonzero
    G = gg_block(1, 1, 1)
    assert np.abs(G).max() > 0.5
    assert np.max(np.abs(G + G.transpose(0, 2, 1))) < 1e-15


def test_triangle_failure():
    assert gg_matrix(5, 1, 2).shape == (0, 15)
    assert not gg_block(5, 1, 2).any()
    with pytest.raises(ValueError):
        gg(2, 3, 1, 0, 1, 0)


def test_blocks_read_only():
    with pytest.raises(ValueError):
        gg_block(2, 1, 1)[0, 0, 0] = 1.0


def test_product_rule():
    k = Rotation.random(random_state=11).as_matrix()
    for (l1, m1, n1, l2, m2, n2) in [(1, 0, 1, 1, -1, 0), (2, 1, -2, 1, 0, 1), (3, -2, 2, 2, 1, 0)]:
        lhs = wigner_d_matrix(l1, k)[m1 + l1, n1 + l1] * wigner_d_matrix(l2, k)[m2 + l2, n2 + l2]
        assert wigner_product_expand(l1, m1, n1, l2, m2, n2, k) == pytest.approx(lhs, abs=1e-12)


def test_coupling_table_rows():
    rows = list(coupling_table(2, tol=1e-14))
    hit = [r for r in rows if r[:6] == (2, 0, 2, 0, 2, 0)]
    assert len(hit) == 1 and hit[0][6] == pytest.approx(sqrt(2 / 7))
    assert all(abs(r[6]) > 1e-14 for r in rows)


def test_precompute_runs():
    precompute(2, extra=1)
    assert gg_block(3, 1, 2).shape == (7, 3, 5)
