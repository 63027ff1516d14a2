"""Longitudinal and transverse correlation of the shipped vector model.

Along the direction of the separation the correlation splits into a
longitudinal part ``R_LL`` and a transverse part ``R_NN``.  The script
prints both against the separation length and checks them against the
quadrature oracle at a few points.
"""
import numpy as np

from isofield.correlation import vector_correlation
from isofield.model import load_example
from isofield.verify import quadrature_correlation

model = load_example("vector")
e = np.array([0.0, 1.0, 0.0])  # the polar axis has index 1
n = np.array([1.0, 0.0, 0.0])

print(f"{'rho':>6} {'R_LL':>10} {'R_NN':>10}")
for rho in np.linspace(0.0, 6.0, 13):
    R = vector_correlation(model, rho * e)
    print(f"{rho:6.2f} {e @ R @ e:10.5f} {n @ R @ n:10.5f}")

worst = max(np.max(np.abs(vector_correlation(model, x) - quadrature_correlation(model, x)))
            for x in np.random.default_rng(0).normal(size=(5, 3)))
print(f"\nlargest deviation from the quadrature oracle: {worst:.2e}")
