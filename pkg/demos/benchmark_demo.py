"""A small seeded benchmark comparing the true, rca, naive and cca arms.

Reports are bit-reproducible from the configuration and seed; the same runs
are available from the command line as ``rca fit <setting>``.

Run with ``python3 demos/benchmark_demo.py``.
"""

from rca import ExperimentConfig, run
from rca.experiments import table_to_csv

rows = []
for setting in ("pca", "regression"):
    report = run(ExperimentConfig(setting=setting, d=5, n=2000, repeats=3, seed=7))
    rows.extend(report.rows())
print(table_to_csv(rows))
