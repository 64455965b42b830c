"""Cumulants are additive over independent variables and vanish for Gaussians.

Run with ``python3 demos/cumulants_demo.py``.
"""

import numpy as np

from rca import cumulant, multilinear_apply, unfold

rng = np.random.default_rng(0)
n = 200_000
X = rng.exponential(size=(n, 2))
Y = rng.uniform(-1, 1, size=(n, 2))
G = rng.standard_normal((n, 2))

print("third cumulant of X + Y minus the two parts (close to zero):")
print(np.round(cumulant(X + Y, 3) - cumulant(X, 3) - cumulant(Y, 3), 4))

print("\nfourth cumulant of a Gaussian sample, largest entry:", np.abs(cumulant(G, 4)).max())

M = rng.normal(size=(2, 3))
lhs = cumulant(X @ M, 3)
rhs = multilinear_apply(cumulant(X, 3), [M, M, M])
print("\nmultilinearity holds on the sample itself:", np.abs(lhs - rhs).max())
print("unfolded third cumulant has shape", unfold(lhs).shape)
