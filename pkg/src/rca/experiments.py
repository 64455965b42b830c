"""Synthetic benchmarks comparing contrastive learners with simple baselines.

Each setting draws a foreground ``S1`` with a known parameter, a background
``S2`` and a private component ``S3``, and assembles ``U = S1 + S2`` and
``V = A S2 + S3``.  Four arms run the same learner on different inputs:

``true``   cumulants of the hidden ``S1`` samples (gold standard)
``rca``    cumulants of ``S1`` extracted from ``(U, V)``
``naive``  cumulants of ``U``, ignoring the background
``cca``    cumulants of ``U`` projected away from its canonical correlations with ``V``
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .approx_gradient import ApproxGDConfig, contrastive_logistic
from .contrastive import ContrastiveEntrySource, estimate_A, extract_cumulants
from .cumulants import ComponentCumulants, cumulant
from .errors import ConfigError, ConvergenceError, InvalidInputError, RankError, RCAError
from .general import SetSystem, compute_cumulants, find_linear
from .ising import IsingSpec, exact_sgd, sample, taylor_sgd
from .learners import center_mse, contrastive_gmm, contrastive_lsr, contrastive_pca
from .tensor_core import smallest_singular_value

SETTINGS = ("pca", "regression", "gmm", "logistic", "ising", "general", "biomarker_sim")
ARMS = ("true", "rca", "naive", "cca")

# learner input orders per setting
_ORDER = {"pca": 2, "regression": 2, "gmm": 3, "logistic": 4, "biomarker_sim": 4}

# background spike: S2 = B + c v2 with c Rademacher so that
# Cov(S2) = I/3 + v2 v2^T
SPIKE_SCALE = 1.0
SPARSE_RATE = 0.1
BACKGROUNDS = ("uniform", "sparse")
DEFAULT_SYSTEM = {"k": 3, "subsets": [[1, 2], [2, 3], [1, 2, 3]]}
BIOMARKER_ROWS = 686
BIOMARKER_LABS = 3


@dataclass
class ExperimentConfig:
    """One benchmark configuration.

    ``perturbation_ratio`` is the ratio of the root total variances of
    ``S2`` and ``S1``; ``None`` keeps the background at its natural scale.
    For the ``ising`` setting ``d`` is the grid side.
    """

    setting: str
    d: int = 10
    n: int = 1000
    perturbation_ratio: Optional[float] = None
    seed: int = 0
    arms: tuple = ARMS
    repeats: int = 10
    t_max: int = 4
    poly_degree: int = 4
    batch: int = 100
    sgd_step: float = 0.05
    sgd_iters: int = 500
    gd_iters: int = 2000
    ls_iters: int = 200
    restarts: int = 10
    sigma: float = 0.5
    cca_threshold: float = 0.3
    min_singular: float = 0.1
    background: str = "uniform"
    system: Optional[dict] = None

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ConfigError(f"unknown setting {self.setting!r}; choose from {', '.join(SETTINGS)}")
        if isinstance(self.arms, str):
            self.arms = tuple(a.strip() for a in self.arms.split(",") if a.strip())
        self.arms = tuple(self.arms)
        bad = [a for a in self.arms if a not in ARMS]
        if bad or not self.arms:
            raise ConfigError(f"unknown or empty arms {bad}; choose from {', '.join(ARMS)}")
        if int(self.n) < 1 or int(self.d) < 1 or int(self.repeats) < 1:
            raise ConfigError("n, d and repeats must be positive")
        if self.perturbation_ratio is not None and not self.perturbation_ratio >= 0:
            raise ConfigError("perturbation_ratio must be nonnegative")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not 2 <= self.t_max <= 6:
            raise ConfigError("t_max must be in 2..6")
        if self.poly_degree not in (3, 4, 5):
            raise ConfigError("poly_degree must be 3, 4 or 5")
        if self.setting == "ising" and self.d < 3:
            raise ConfigError("the ising grid side must be at least 3")
        if self.background not in BACKGROUNDS:
            raise ConfigError(f"background must be one of {', '.join(BACKGROUNDS)}")
        if self.system is not None:
            SetSystem.from_json(self.system)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "setting" not in obj:
            raise ConfigError("config needs a 'setting'")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = asdict(self)
        out["arms"] = list(self.arms)
        return out

    def replace(self, **kw) -> "ExperimentConfig":
        return ExperimentConfig.from_dict({**self.to_dict(), **kw})


@dataclass
class Dataset:
    setting: str
    U: np.ndarray
    V: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S3: np.ndarray
    A: np.ndarray
    truth: dict
    y: Optional[np.ndarray] = None
    views: Optional[list] = None  # general setting only
    components: Optional[list] = None


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def unit_vector(rng, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_map(rng, d_out: int, d_in: int, min_singular: float = 0.1,
               max_tries: int = 10_000) -> np.ndarray:
    """``Unif[-1,1]`` entries, redrawn until ``sigma_min >= min_singular``."""
    for _ in range(max_tries):
        A = rng.uniform(-1.0, 1.0, size=(d_out, d_in))
        if smallest_singular_value(A) >= min_singular:
            return A
    raise ConfigError(f"could not draw a {d_out}x{d_in} map with sigma_min >= {min_singular}")


def _spiked_background(rng, n, d, law="uniform"):
    """Background with a spike: ``B + c v2``, ``c`` Rademacher.

    ``law="uniform"`` draws ``B ~ Unif([-1,1]^d)``; ``law="sparse"`` uses
    sparse Rademacher coordinates of the same variance (mostly zero, so
    strongly non-Gaussian).
    """
    v2 = unit_vector(rng, d)
    c = rng.choice([-1.0, 1.0], size=n)
    if law == "uniform":
        B = rng.uniform(-1.0, 1.0, size=(n, d))
    else:
        on = rng.random((n, d)) < SPARSE_RATE
        B = on * rng.choice([-1.0, 1.0], size=(n, d)) / np.sqrt(3.0 * SPARSE_RATE)
    return B + SPIKE_SCALE * np.outer(c, v2), v2


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _gmm_draw(rng, centers, n, sigma):
    k, d = centers.shape
    z = rng.integers(0, k, size=n)
    return centers[z] + sigma * rng.standard_normal((n, d))


def _rescale(S1, S2, ratio):
    if ratio is None:
        return S2
    s1 = np.trace(np.atleast_2d(np.cov(S1.T, bias=True)))
    s2 = np.trace(np.atleast_2d(np.cov(S2.T, bias=True)))
    if s2 == 0:
        return S2 * 0.0
    return S2 * (ratio * np.sqrt(s1 / s2))


def generate(config: ExperimentConfig, seed: Optional[int] = None) -> Dataset:
    """Draw one dataset; identical ``(config, seed)`` gives identical arrays."""
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    if config.setting == "general":
        return _generate_general(config, rng)
    if config.setting == "biomarker_sim":
        return _generate_biomarker(config, rng)
    d, n = config.d, config.n
    truth, y = {}, None
    if config.setting == "pca":
        v1 = unit_vector(rng, d)
        S1 = np.outer(rng.standard_normal(n), v1) + config.sigma * rng.standard_normal((n, d))
        truth["v1"] = v1
        S2, v2 = _spiked_background(rng, n, d, config.background)
    elif config.setting == "regression":
        beta = unit_vector(rng, d)
        S1 = rng.uniform(-1.0, 1.0, size=(n, d))
        y = S1 @ beta + rng.standard_normal(n)
        truth["beta"] = beta
        S2, v2 = _spiked_background(rng, n, d, config.background)
    elif config.setting == "logistic":
        beta = unit_vector(rng, d)
        S1 = rng.uniform(-1.0, 1.0, size=(n, d))
        y = (rng.random(n) < _sigmoid(S1 @ beta)).astype(np.float64)
        truth["beta"] = beta
        S2, v2 = _spiked_background(rng, n, d, config.background)
    elif config.setting == "gmm":
        mu1 = rng.uniform(-1.0, 1.0, size=(d, d))
        mu2 = rng.uniform(-1.0, 1.0, size=(d, d))
        mu2 -= mu2.mean(axis=0)  # zero-mean background
        S1 = _gmm_draw(rng, mu1, n, config.sigma)
        S2 = _gmm_draw(rng, mu2, n, config.sigma)
        truth["centers"] = mu1
    elif config.setting == "ising":
        spec = IsingSpec.torus(d)
        spec = spec.with_couplings(rng.uniform(-1.0, 1.0, size=spec.n_edges))
        N = spec.n_spins
        S1 = sample(spec, n, rng)
        block = np.zeros(N, dtype=bool)
        block[rng.permutation(N)[: N // 2]] = True
        S2 = rng.choice([-1.0, 1.0], size=(n, N))
        S2[:, block] = rng.choice([-1.0, 1.0], size=n)[:, None]
        truth["J"] = spec.couplings
        truth["spec"] = spec
        d = N
    else:  # pragma: no cover - guarded by the config
        raise ConfigError(config.setting)
    S2 = _rescale(S1, S2, config.perturbation_ratio)
    S3 = rng.uniform(-1.0, 1.0, size=(n, d))
    A = random_map(rng, d, d, config.min_singular)
    U = S1 + S2
    V = S2 @ A.T + S3
    return Dataset(config.setting, U, V, S1, S2, S3, A, truth, y)


def _generate_biomarker(config, rng) -> Dataset:
    """Lab-bias perturbation of synthetic methylation-like markers.

    Markers are centered Beta variables; each row is assigned to one of a few
    labs whose offsets (a zero-mean mixture) perturb both marker panels.
    """
    n, d = config.n, config.d
    a1, b1 = rng.uniform(1.0, 5.0, size=(2, d))
    S1 = rng.beta(a1, b1, size=(n, d)) - a1 / (a1 + b1)
    a3, b3 = rng.uniform(1.0, 5.0, size=(2, d))
    S3 = rng.beta(a3, b3, size=(n, d)) - a3 / (a3 + b3)
    beta = 3.0 * unit_vector(rng, d)
    y = (rng.random(n) < _sigmoid(S1 @ beta)).astype(np.float64)
    offsets = rng.uniform(-0.5, 0.5, size=(BIOMARKER_LABS, d))
    w = rng.dirichlet(np.ones(BIOMARKER_LABS))
    offsets -= w @ offsets
    lab = rng.choice(BIOMARKER_LABS, size=n, p=w)
    S2 = offsets[lab] + 0.02 * rng.standard_normal((n, d))
    S2 = _rescale(S1, S2, config.perturbation_ratio)
    A = random_map(rng, d, d, config.min_singular)
    U = S1 + S2
    V = S2 @ A.T + S3
    return Dataset("biomarker_sim", U, V, S1, S2, S3, A, {"beta": beta}, y)


def _generate_general(config, rng) -> Dataset:
    """Views ``U_i = sum_{j: i in Q_j} A^(i,j) S_j`` with centered exponential sources."""
    system = SetSystem.from_json(config.system or DEFAULT_SYSTEM)
    d, n = config.d, config.n
    comps, mixers, maps = [], [], {}
    for q in system.subsets:
        M = random_map(rng, d, d, config.min_singular)
        S = (rng.exponential(size=(n, d)) - 1.0) @ M.T
        comps.append(S)
        mixers.append(M)
        for i in q:
            maps[(i, q)] = np.eye(d) if i == min(q) else random_map(rng, d, d, config.min_singular)
    views = []
    for i in range(1, system.k + 1):
        Ui = np.zeros((n, d))
        for q, S in zip(system.subsets, comps):
            if i in q:
                Ui += S @ maps[(i, q)].T
        views.append(Ui)
    truth = {"system": system, "maps": maps,
             "kappa2": {q: M @ M.T for q, M in zip(system.subsets, mixers)}}
    empty = np.zeros((n, 0))
    return Dataset("general", views[0], views[-1], empty, empty, empty, np.zeros((0, 0)),
                   truth, views=views, components=comps)


# --------------------------------------------------------------------------
# CCA baseline
# --------------------------------------------------------------------------

@dataclass
class CcaResult:
    projected: np.ndarray
    directions: np.ndarray  # (d, r) orthonormal basis of the removed subspace
    correlations: np.ndarray
    identifiable: bool


def _inv_sqrt(C, rank_tol):
    w, Q = np.linalg.eigh(0.5 * (C + C.T))
    if w[-1] <= 0 or w[0] <= rank_tol * w[-1]:
        raise RankError("covariance matrix is singular")
    return (Q / np.sqrt(w)) @ Q.T


def cca_baseline(U, V, threshold: float = 0.3, rank_tol: float = 1e-10) -> CcaResult:
    """Project ``U`` orthogonally to its strongly correlated canonical directions.

    Linear CCA through the SVD of the whitened cross-covariance; canonical
    weight vectors of ``U`` with correlation above ``threshold`` span the
    removed subspace.
    """
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if U.ndim != 2 or V.ndim != 2 or U.shape[0] != V.shape[0]:
        raise InvalidInputError("U and V must be row-aligned matrices")
    Uc = U - U.mean(axis=0)
    Vc = V - V.mean(axis=0)
    n = U.shape[0]
    Wu = _inv_sqrt(Uc.T @ Uc / n, rank_tol)
    Wv = _inv_sqrt(Vc.T @ Vc / n, rank_tol)
    P, s, _ = np.linalg.svd(Wu @ (Uc.T @ Vc / n) @ Wv)
    keep = s > threshold
    d = U.shape[1]
    if not np.any(keep):
        return CcaResult(U.copy(), np.zeros((d, 0)), s, True)
    weights = Wu @ P[:, : len(s)][:, keep]
    Q, _ = np.linalg.qr(weights)
    projected = U - (U @ Q) @ Q.T
    return CcaResult(projected, Q, s, bool(Q.shape[1] < d))


# --------------------------------------------------------------------------
# arms
# --------------------------------------------------------------------------

def _arm_source(arm, data: Dataset, config, order):
    """Cumulants the learner sees in a given arm (plus diagnostics)."""
    if arm == "true":
        return ComponentCumulants.from_samples(data.S1, order), {}, data.S1
    if arm == "naive":
        return ComponentCumulants.from_samples(data.U, order), {}, data.U
    if arm == "cca":
        res = cca_baseline(data.U, data.V, config.cca_threshold)
        diag = {"cca_removed": int(res.directions.shape[1]),
                "cca_identifiable": res.identifiable}
        return ComponentCumulants.from_samples(res.projected, order), diag, res.projected
    if arm == "rca":
        A_hat, report = estimate_A(data.U, data.V)
        ext = extract_cumulants(data.U, data.V, A_hat, t_max=max(order, 2), components=(1,))
        diag = report.as_dict()
        diag["A_mse"] = float(np.mean((A_hat - data.A) ** 2))
        return ext.component(1), diag, data.U
    raise ConfigError(f"unknown arm {arm!r}")


def _pca_mse(v, truth):
    return float(min(np.mean((v - truth) ** 2), np.mean((v + truth) ** 2)))


def _fit_learner(setting, arm, source, samples, data, config, seed):
    """Run the setting's learner; returns (mse, trace, diagnostics)."""
    if setting == "pca":
        res = contrastive_pca(source)
        return _pca_mse(res.top_eigenvector, data.truth["v1"]), None, {
            "identifiable": res.identifiable}
    if setting == "regression":
        xy = (data.y[:, None] * samples).mean(axis=0)
        # projected samples have a singular moment matrix by construction
        beta = contrastive_lsr(source, xy, rank_tol=1e-8, allow_singular=arm == "cca").beta
        return float(np.mean((beta - data.truth["beta"]) ** 2)), None, {}
    if setting in ("logistic", "biomarker_sim"):
        xy = (data.y[:, None] * samples).mean(axis=0)
        gd = ApproxGDConfig(max_iters=config.gd_iters, grad_tol=1e-9,
                            poly_degree=config.poly_degree)
        truth = data.truth["beta"]
        res, trace = contrastive_logistic(source, xy, gd)
        return float(np.mean((res.beta - truth) ** 2)), trace, {"gd_iters": int(trace.size)}
    if setting == "gmm":
        diag = {}
        try:
            res = contrastive_gmm(source, config.d, ls_iters=config.ls_iters,
                                  restarts=config.restarts, seed=seed)
        except ConvergenceError as exc:
            if exc.best_result is None:
                raise
            res = exc.best_result
            diag["als_converged"] = False
        return center_mse(res.centers, data.truth["centers"]), None, diag
    raise ConfigError(setting)


def _run_ising_arm(arm, data: Dataset, config, seed):
    spec = data.truth["spec"]
    J = data.truth["J"]
    rng = np.random.default_rng(seed)
    kw = dict(step=config.sgd_step, batch=config.batch, iters=config.sgd_iters, J_true=J)
    diag = {}
    if arm == "true":
        fit = exact_sgd(data.S1, spec, rng, **kw)
    elif arm == "naive":
        fit = exact_sgd(data.U, spec, rng, **kw)
    elif arm == "cca":
        res = cca_baseline(data.U, data.V, config.cca_threshold)
        diag["cca_removed"] = int(res.directions.shape[1])
        fit = exact_sgd(res.projected, spec, rng, **kw)
    else:
        A_hat, report = estimate_A(data.U, data.V)
        diag = report.as_dict()
        diag["A_mse"] = float(np.mean((A_hat - data.A) ** 2))
        source = ContrastiveEntrySource.from_views(data.U, data.V, A_hat)
        fit = taylor_sgd(source, spec, rng, **kw)
    return float(np.mean((fit.spec.couplings - J) ** 2)), fit.trace, diag


def _run_general_arm(arm, data: Dataset, config):
    system = data.truth["system"]
    target = data.truth["kappa2"]
    L = system.smallest_level()
    t = max(2, L)
    if arm == "cca":
        raise InvalidInputError("the CCA baseline is defined for two views only")
    est = {}
    if arm == "true":
        for q, S in zip(system.subsets, data.components):
            est[q] = cumulant(S, t)
    elif arm == "naive":
        for q in system.subsets:
            est[q] = cumulant(data.views[min(q) - 1], t)
    else:
        ext = find_linear(data.views, system)
        est = compute_cumulants(data.views, ext, t)
        for q in ext.zero_components:
            est[q] = np.zeros_like(next(iter(est.values())))
    if t != 2:
        # higher-order targets are not tracked; compare the order-t estimates
        # of the true-sample arm instead
        ref = {q: cumulant(S, t) for q, S in zip(system.subsets, data.components)}
    else:
        ref = target
    err = [np.mean((est[q] - ref[q]) ** 2) for q in system.subsets]
    return float(np.mean(err)), None, {"order": t}


def run_arm(arm: str, data: Dataset, config: ExperimentConfig, seed: int):
    """Returns ``(mse, trace or None, diagnostics)`` for one arm on one dataset."""
    if config.setting == "ising":
        return _run_ising_arm(arm, data, config, seed)
    if config.setting == "general":
        return _run_general_arm(arm, data, config)
    source, diag, samples = _arm_source(arm, data, config, _ORDER[config.setting])
    mse, trace, d2 = _fit_learner(config.setting, arm, source, samples, data, config, seed)
    diag.update(d2)
    return mse, trace, diag


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

@dataclass
class ArmSummary:
    mse: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    traces: list = field(default_factory=list)

    @property
    def mse_mean(self) -> float:
        return float(np.mean(self.mse)) if self.mse else float("nan")

    @property
    def mse_std(self) -> float:
        return float(np.std(self.mse)) if self.mse else float("nan")

    def mean_trace(self):
        if not self.traces:
            return None
        m = min(len(t) for t in self.traces)
        return np.mean([np.asarray(t[:m]) for t in self.traces], axis=0)


@dataclass
class RunReport:
    config: ExperimentConfig
    arms: dict
    wall_clock: float = 0.0

    @property
    def repeats(self) -> int:
        return self.config.repeats

    def mse(self, arm: str) -> float:
        return self.arms[arm].mse_mean

    def to_dict(self, timing: bool = True) -> dict:
        out = {"config": self.config.to_dict(), "repeats": self.repeats, "arms": {}}
        for name, s in self.arms.items():
            tr = s.mean_trace()
            out["arms"][name] = {
                "mse_mean": s.mse_mean, "mse_std": s.mse_std, "mse": list(s.mse),
                "failures": list(s.failures), "diagnostics": list(s.diagnostics),
                "trace": None if tr is None else [float(x) for x in tr],
            }
        if timing:
            out["wall_clock"] = self.wall_clock
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, default=_json_default)

    def rows(self) -> list:
        c = self.config
        return [{"setting": c.setting, "d": c.d, "n": c.n,
                 "perturbation_ratio": "" if c.perturbation_ratio is None else c.perturbation_ratio,
                 "seed": c.seed, "arm": name, "mse_mean": s.mse_mean, "mse_std": s.mse_std,
                 "n_ok": len(s.mse), "n_failed": len(s.failures)}
                for name, s in self.arms.items()]


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def run(config: ExperimentConfig) -> RunReport:
    """Run every requested arm on ``config.repeats`` datasets.

    Repeat ``r`` (1-based) uses sub-seed ``config.seed + r``.  Arm errors are
    recorded and do not stop the run.
    """
    start = time.perf_counter()
    arms = {a: ArmSummary() for a in config.arms}
    for r in range(1, config.repeats + 1):
        sub = (int(config.seed) + r) % 2 ** 64
        data = generate(config, seed=sub)
        for a in config.arms:
            try:
                mse, trace, diag = run_arm(a, data, config, sub)
            except RCAError as exc:
                arms[a].failures.append(f"repeat {r}: {type(exc).__name__}: {exc}")
                continue
            arms[a].mse.append(mse)
            arms[a].diagnostics.append(diag)
            if trace is not None:
                arms[a].traces.append(np.asarray(trace))
    return RunReport(config=config, arms=arms, wall_clock=time.perf_counter() - start)


def sweep(configs) -> list:
    """Run several configurations and return the flat table of arm rows."""
    rows = []
    reports = [run(c) for c in configs]
    for rep in reports:
        rows.extend(rep.rows())
    return rows


TABLE_COLUMNS = ("setting", "d", "n", "perturbation_ratio", "seed", "arm",
                 "mse_mean", "mse_std", "n_ok", "n_failed")


def table_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: row.get(k, "") for k in TABLE_COLUMNS})
    return buf.getvalue()


def table_to_json(rows) -> str:
    return json.dumps(list(rows), indent=2, default=_json_default)
