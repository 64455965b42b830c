"""Three views sharing components along a set system.

View 1 sees components {1,2} and {1,2,3}; view 3 sees {2,3} and {1,2,3}.
The set system is checked for distinguishability, the linear maps are
estimated from third-order cross-cumulants, and component covariances follow.

Run with ``python3 demos/general_demo.py``.
"""

import numpy as np

from rca import SetSystem, check_distinguishable, compute_cumulants, find_linear

system = SetSystem(3, [[1, 2], [2, 3], [1, 2, 3]])
cert = check_distinguishable(system, 2)
print("2-distinguishable:", cert.ok, cert.sets)

rng = np.random.default_rng(0)
n, d = 200_000, 2
comps = {q: rng.exponential(size=(n, d)) - 1.0 for q in system.subsets}
maps = {(i, q): (np.eye(d) if i == min(q) else rng.uniform(-1, 1, (d, d)) + 2 * np.eye(d))
        for q in system.subsets for i in q}
views = []
for i in (1, 2, 3):
    X = rng.uniform(-1, 1, size=(n, d)) * 0.1  # small private noise
    for q in system.subsets:
        if i in q:
            X = X + comps[q] @ maps[(i, q)].T
    views.append(X)

ext = find_linear(views, system)
for key in sorted(ext.maps):
    if key[0] != min(key[1]):
        err = np.abs(ext.maps[key] - maps[key]).max()
        print(f"map of view {key[0]} for component {key[1]}: max error {err:.3f}")
cov = compute_cumulants(views, ext, 2)
for q in system.subsets:
    print(f"covariance of {q}: error {np.abs(cov[q] - np.cov(comps[q].T)).max():.3f}")
