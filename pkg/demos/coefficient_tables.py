"""Coupling coefficients, the mode covariance and its factor.

Prints the nonzero real coupling coefficients for degree 2 and shows that
the vector mode covariance at Lmax=2 is rank-deficient yet factors exactly.
"""
import numpy as np

from isofield.bmodes import assemble, semidefinite_cholesky
from isofield.coupling import coupling_table

print("g^{m[m1,m2]}_{l[2,2]} for m = m1 = m2 = 0:")
for l, m, l1, m1, l2, m2, val in coupling_table(4, tol=1e-14):
    if l1 == l2 == 2 and m == m1 == m2 == 0:
        print(f"  l={l}: {val:+.6f}")

c = assemble("vector1", 2)
L = semidefinite_cholesky(c.matrix)
rank = np.linalg.matrix_rank(c.matrix, tol=1e-10)
print(f"\nvector family-1 modes at Lmax=2: {len(c.modes)}, rank {rank}, "
      f"factor columns in use {np.count_nonzero(np.abs(L).sum(0) > 0)}")
print(f"reconstruction error {np.max(np.abs(L @ L.T - c.matrix)):.1e}")
