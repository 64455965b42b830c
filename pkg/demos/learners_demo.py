"""Run PCA, least squares and a Gaussian mixture fit on an extracted component.

Each learner reads only cumulants, so it runs unchanged on the cumulants of
the raw data (naive) or on those extracted for S1 (contrastive).

Run with ``python3 demos/learners_demo.py``.
"""

import numpy as np

from rca import (
    ComponentCumulants,
    ExperimentConfig,
    contrastive_gmm,
    contrastive_lsr,
    contrastive_pca,
    extract_cumulants,
    generate,
)
from rca.errors import ConvergenceError
from rca.learners import center_mse

for setting in ("pca", "regression", "gmm"):
    data = generate(ExperimentConfig(setting=setting, d=6, n=50_000, seed=3))
    rca = extract_cumulants(data.U, data.V, data.A, t_max=3).component(1)
    naive = ComponentCumulants.from_samples(data.U, 3)
    for label, src in (("rca", rca), ("naive", naive)):
        if setting == "pca":
            v = contrastive_pca(src).top_eigenvector
            err = 1 - abs(v @ data.truth["v1"])
        elif setting == "regression":
            b = contrastive_lsr(src, data.y @ data.U / len(data.y)).beta
            err = np.mean((b - data.truth["beta"]) ** 2)
        else:
            try:
                res = contrastive_gmm(src, k=6, seed=0)
            except ConvergenceError as exc:
                res = exc.best_result  # best restart, kept for inspection
            err = center_mse(res.centers, data.truth["centers"])
        print(f"{setting:>10} {label:>5}: error {err:.4f}")
