"""Separate a foreground signal from a background seen in a second view.

U = S1 + S2 is the dataset of interest, V = A S2 + S3 a reference dataset
sharing the background S2.  The shared map A is read off fourth cumulants,
then the covariance of S1 is recovered without observing it.

Run with ``python3 demos/contrastive_demo.py``.
"""

import numpy as np

from rca import ExperimentConfig, cumulant, estimate_A, extract_cumulants, generate

data = generate(ExperimentConfig(setting="pca", d=5, n=100_000, seed=1))
v1 = data.truth["v1"]
population = np.outer(v1, v1) + 0.25 * np.eye(5)

A_hat, report = estimate_A(data.U, data.V)
print("entrywise MSE of the estimated A:", np.mean((A_hat - data.A) ** 2))
print("conditioning:", report.as_dict())

for label, A in (("estimated A", A_hat), ("true A", data.A)):
    k2 = extract_cumulants(data.U, data.V, A, t_max=2).cumulant(1, 2)
    print(f"covariance error of S1 with {label}: {np.linalg.norm(k2 - population):.3f}")
print(f"covariance error of the raw U:         {np.linalg.norm(cumulant(data.U, 2) - population):.3f}")
