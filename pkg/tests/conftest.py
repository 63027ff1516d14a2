import numpy as np
import pytest

from isofield.model import (SpectralMeasure, TensorModel, VectorModel, load_example,
                            zero_atom_v)


@pytest.fixture(scope="session")
def scalar_example():
    return load_example("scalar")


@pytest.fixture(scope="session")
def vector_example():
    return load_example("vector")


@pytest.fixture(scope="session")
def tensor_example():
    return load_example("tensor")


def random_measure(rng, n_atoms, lam_range=(0.2, 3.0)):
    lams = np.sort(rng.uniform(*lam_range, n_atoms))
    return SpectralMeasure(tuple(zip(lams, rng.uniform(0.1, 1.0, n_atoms))))


def random_ellipse_point(rng):
    # uniform angle, radius in [0, 1] of the ellipse 4(v1-1/2)^2 + 8 v2^2 <= 1
    t, s = rng.uniform(0, 2 * np.pi), np.sqrt(rng.uniform())
    return 0.5 + 0.5 * s * np.cos(t), s * np.sin(t) / (2 * np.sqrt(2))


def random_vector_model(rng, with_zero=True):
    p1 = random_measure(rng, rng.integers(1, 4))
    p2 = random_measure(rng, rng.integers(1, 4))
    if with_zero:
        a = rng.uniform(0.1, 0.5)
        p1 = SpectralMeasure(((0.0, 2 * a),) + p1.atoms)
        p2 = SpectralMeasure(((0.0, a),) + p2.atoms)
    return VectorModel(p1, p2)


def random_tensor_model(rng, with_zero=True):
    p1 = random_measure(rng, rng.integers(1, 3))
    p2 = random_measure(rng, rng.integers(1, 3))
    p3 = random_measure(rng, rng.integers(1, 4))
    v = [(lam,) + random_ellipse_point(rng) for lam, _ in p3.atoms]
    if with_zero:
        a1 = rng.uniform(0.05, 0.2)
        a2, a3 = 1.5 * a1, rng.uniform(0.3, 0.6)
        p1 = SpectralMeasure(((0.0, a1),) + p1.atoms)
        p2 = SpectralMeasure(((0.0, a2),) + p2.atoms)
        p3 = SpectralMeasure(((0.0, a3),) + p3.atoms)
        v = [(0.0,) + zero_atom_v(a2, a3)] + v
    return TensorModel(p1, p2, p3, tuple(v), mean=rng.uniform(-1, 1))


# lines reported by the acceptance suite, echoed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
