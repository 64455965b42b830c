"""Ising models on the periodic grid and composite-likelihood fitting.

The model is ``P(s) ~ exp(sum_{(i,j) in E} J_ij s_i s_j)`` over spins in
``{-1, +1}``.  Couplings are fitted by maximizing the composite likelihood
``sum_i log P(s_i | s_-i)``; its gradient has a fourth-order Taylor
expansion that only needs second- and fourth-order moments, so it can be
driven by cumulants extracted from contaminated data.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cumulants import SampleEntrySource, moment_entries
from .errors import DivergenceError, InvalidInputError, ShapeError

SGD_STEP = 0.05
SGD_BATCH = 100
SGD_ITERS = 500
MAX_ENUM_SPINS = 16
# couplings this large saturate every conditional; treat as divergence
MAX_COUPLING = 1e6


@dataclass
class IsingSpec:
    """Edge list and couplings of a pairwise binary model.

    ``side`` is the grid side for the periodic 4-neighbour torus, or 0 for
    a model built from an explicit edge list.
    """

    n_spins: int
    edges: np.ndarray  # (m, 2), i < j
    couplings: np.ndarray  # (m,)
    side: int = 0
    periodic: bool = True
    _quads: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.intp).reshape(-1, 2)
        self.couplings = np.asarray(self.couplings, dtype=np.float64).reshape(-1)
        if self.couplings.shape[0] != self.edges.shape[0]:
            raise ShapeError("one coupling per edge is required")
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= self.n_spins):
            raise InvalidInputError("edge endpoint out of range")
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise InvalidInputError("self-loops are not allowed")

    @classmethod
    def torus(cls, side: int, couplings=None) -> "IsingSpec":
        """Periodic ``side x side`` grid, spins numbered row-major."""
        if side < 3:
            raise InvalidInputError("the periodic grid needs side >= 3 (smaller sides repeat edges)")
        edges = []
        for r in range(side):
            for c in range(side):
                v = r * side + c
                for w in (r * side + (c + 1) % side, ((r + 1) % side) * side + c):
                    edges.append((min(v, w), max(v, w)))
        edges = np.array(edges)
        J = np.zeros(len(edges)) if couplings is None else couplings
        return cls(n_spins=side * side, edges=edges, couplings=J, side=side)

    def with_couplings(self, J) -> "IsingSpec":
        return IsingSpec(self.n_spins, self.edges, np.asarray(J, dtype=np.float64),
                         self.side, self.periodic, self._quads)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def coupling_matrix(self, J=None) -> np.ndarray:
        J = self.couplings if J is None else np.asarray(J, dtype=np.float64)
        W = np.zeros((self.n_spins, self.n_spins))
        W[self.edges[:, 0], self.edges[:, 1]] = J
        W[self.edges[:, 1], self.edges[:, 0]] = J
        return W

    def taylor_index(self):
        """Index structure of the fourth-order terms of the gradient.

        Returns ``(quads, edge_of, coupling_of)``: for every edge ``e=(i,j)``
        and every neighbour ``k`` of ``i`` (edge ``e'``) the quadruple
        ``(i, i, j, k)``, and symmetrically ``(j, j, i, k)`` for neighbours of
        ``j``; ``edge_of`` and ``coupling_of`` hold ``e`` and ``e'``.
        """
        if self._quads is None:
            nbrs = [[] for _ in range(self.n_spins)]
            for e, (i, j) in enumerate(self.edges):
                nbrs[i].append((j, e))
                nbrs[j].append((i, e))
            quads, edge_of, coupling_of = [], [], []
            for e, (i, j) in enumerate(self.edges):
                for a, b in ((i, j), (j, i)):
                    for k, e2 in nbrs[a]:
                        quads.append((a, a, b, k))
                        edge_of.append(e)
                        coupling_of.append(e2)
            self._quads = (np.array(quads, dtype=np.intp).reshape(-1, 4),
                           np.array(edge_of, dtype=np.intp),
                           np.array(coupling_of, dtype=np.intp))
        return self._quads


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------

def all_states(n_spins: int) -> np.ndarray:
    if n_spins > MAX_ENUM_SPINS:
        raise InvalidInputError(f"enumeration limited to {MAX_ENUM_SPINS} spins")
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n_spins)))


def exact_distribution(spec: IsingSpec):
    """All ``2^N`` states and their probabilities."""
    S = all_states(spec.n_spins)
    energy = (S[:, spec.edges[:, 0]] * S[:, spec.edges[:, 1]]) @ spec.couplings
    p = np.exp(energy - energy.max())
    return S, p / p.sum()


def sample_exact(spec: IsingSpec, n: int, rng) -> np.ndarray:
    S, p = exact_distribution(spec)
    return S[rng.choice(S.shape[0], size=n, p=p)]


def gibbs_sample(spec: IsingSpec, n: int, rng, burn_in: Optional[int] = None,
                 thin: Optional[int] = None, chains: int = 50) -> np.ndarray:
    """Systematic-scan Gibbs sampler with parallel chains.

    Defaults: ``10 side^2`` burn-in sweeps and ``side^2`` sweeps between
    kept samples.
    """
    side = spec.side or int(round(np.sqrt(spec.n_spins)))
    burn_in = 10 * side * side if burn_in is None else burn_in
    thin = side * side if thin is None else thin
    chains = max(1, min(chains, n))
    W = spec.coupling_matrix()
    X = rng.choice([-1.0, 1.0], size=(chains, spec.n_spins))

    def sweep():
        for i in range(spec.n_spins):
            h = X @ W[:, i]
            X[:, i] = np.where(rng.random(chains) < 0.5 * (1 + np.tanh(h)), 1.0, -1.0)

    for _ in range(burn_in):
        sweep()
    out = []
    kept = 0
    while kept < n:
        for _ in range(thin):
            sweep()
        out.append(X.copy())
        kept += chains
    return np.concatenate(out)[:n]


def sample(spec: IsingSpec, n: int, rng) -> np.ndarray:
    """Exact sampling when the state space can be enumerated, Gibbs otherwise."""
    if spec.n_spins <= 9:
        return sample_exact(spec, n, rng)
    return gibbs_sample(spec, n, rng)


# --------------------------------------------------------------------------
# composite likelihood
# --------------------------------------------------------------------------

def _weights(S, weights):
    if weights is None:
        return np.full(S.shape[0], 1.0 / S.shape[0])
    return np.asarray(weights, dtype=np.float64)


def composite_loglik(spec: IsingSpec, J, S, weights=None) -> float:
    """Mean of ``sum_i log P(s_i | s_-i)`` (optionally probability-weighted)."""
    S = np.asarray(S, dtype=np.float64)
    H = S @ spec.coupling_matrix(J)
    w = _weights(S, weights)
    return float(w @ (-np.logaddexp(0.0, -2 * S * H)).sum(axis=1))


def exact_composite_gradient(spec: IsingSpec, J, S, weights=None) -> np.ndarray:
    """Gradient of :func:`composite_loglik` with respect to the couplings.

    ``E[2 s_i s_j / (1 + exp(2 s_i h_i)) + 2 s_i s_j / (1 + exp(2 s_j h_j))]``.
    """
    S = np.asarray(S, dtype=np.float64)
    H = S @ spec.coupling_matrix(J)
    R = 1.0 - np.tanh(S * H)  # = 2 / (1 + exp(2 s h))
    i, j = spec.edges[:, 0], spec.edges[:, 1]
    w = _weights(S, weights)
    return w @ (S[:, i] * S[:, j] * (R[:, i] + R[:, j]))


def ising_composite_gradient(spec: IsingSpec, moments2, moments4, J=None) -> np.ndarray:
    """Fourth-order Taylor gradient of the composite log-likelihood.

    ``2 E[s_i s_j] - sum_{k ~ i} J_ik E[s_i^2 s_j s_k] - sum_{k ~ j} J_jk E[s_i s_j^2 s_k]``.
    Squared spins are *not* replaced by one: moment estimates are used as
    given.

    Parameters
    ----------
    moments2 : (N, N) array or callable
        Second moments, or a function mapping an ``(m, 2)`` index array to
        entries.
    moments4 : (N, N, N, N) array or callable
        Fourth moments, dense or as an entry accessor for ``(m, 4)`` indices.
    """
    J = spec.couplings if J is None else np.asarray(J, dtype=np.float64)
    quads, edge_of, coupling_of = spec.taylor_index()
    m2 = _lookup(moments2, spec.edges, 2)
    m4 = _lookup(moments4, quads, 4)
    return 2.0 * m2 - np.bincount(edge_of, weights=J[coupling_of] * m4,
                                  minlength=spec.n_edges)


def _lookup(moments, index, order):
    if callable(moments):
        vals = np.asarray(moments(index), dtype=np.float64)
    else:
        M = np.asarray(moments, dtype=np.float64)
        if M.ndim != order:
            raise InvalidInputError(f"need an order-{order} moment array, got {M.ndim} axes")
        try:
            vals = M[tuple(index.T)]
        except IndexError as exc:
            raise InvalidInputError(f"missing moment entries: {exc}") from None
    if vals.shape != (index.shape[0],) or not np.all(np.isfinite(vals)):
        raise InvalidInputError(f"missing or non-finite order-{order} moment entries")
    return vals


def taylor_objective(spec: IsingSpec, J, moments2, moments4) -> float:
    """Truncated objective whose gradient is :func:`ising_composite_gradient`.

    ``sum_e 2 J_e E[s_i s_j] - 1/2 sum_i E[s_i^2 h_i^2]`` (up to a constant),
    written with the same moment entries.
    """
    J = np.asarray(J, dtype=np.float64)
    quads, edge_of, coupling_of = spec.taylor_index()
    m2 = _lookup(moments2, spec.edges, 2)
    m4 = _lookup(moments4, quads, 4)
    # every product J_e J_e' E[s_a^2 s_b s_k] appears once per ordered pair
    # of edges at a shared vertex a, i.e. exactly once in (quads, edge_of, coupling_of)
    return float(2.0 * J @ m2 - 0.5 * np.sum(J[edge_of] * J[coupling_of] * m4))


def moments_from_distribution(S, weights, order):
    """Dense moment tensor ``E[s^{(x) order}]`` of a weighted sample."""
    S = np.asarray(S, dtype=np.float64)
    w = _weights(S, weights)
    letters = "abcdefgh"[:order]
    spec = ",".join(["z" + c for c in letters]) + ",z->" + letters
    return np.einsum(spec, *([S] * order), w)


# --------------------------------------------------------------------------
# stochastic gradient ascent
# --------------------------------------------------------------------------

@dataclass
class IsingFit:
    spec: IsingSpec
    trace: np.ndarray  # per-iteration value reported by the callback (or grad norm)


def _sgd(spec0: IsingSpec, n: int, batch_grad: Callable, rng, step: float,
         batch: int, iters: int, J_true=None, J0=None) -> IsingFit:
    if batch < 1 or iters < 1 or step <= 0:
        raise InvalidInputError("batch, iters and step must be positive")
    J = np.zeros(spec0.n_edges) if J0 is None else np.array(J0, dtype=np.float64)
    trace = np.empty(iters)
    b = min(batch, n)
    for it in range(iters):
        rows = rng.choice(n, size=b, replace=False)
        with np.errstate(over="ignore", invalid="ignore"):
            g = batch_grad(rows, J)
            J = J + step * g
        if not np.all(np.isfinite(J)) or np.max(np.abs(J), initial=0.0) > MAX_COUPLING:
            raise DivergenceError(f"couplings diverged at iteration {it}", iteration=it)
        trace[it] = (float(np.mean((J - J_true) ** 2)) if J_true is not None
                     else np.linalg.norm(g))
    return IsingFit(spec=spec0.with_couplings(J), trace=trace)


def taylor_sgd(source, spec0: IsingSpec, rng, step: float = SGD_STEP,
               batch: int = SGD_BATCH, iters: int = SGD_ITERS, J_true=None) -> IsingFit:
    """Composite-likelihood ascent with Taylor gradients from batch moments.

    ``source`` supplies cumulant entries and supports ``subset(rows)``; the
    contrastive entry source makes this the extraction-driven estimator,
    a :class:`~rca.cumulants.SampleEntrySource` the ordinary one.
    """
    quads, _, _ = spec0.taylor_index()
    n = _n_rows(source)

    def batch_grad(rows, J):
        sub = source.subset(rows)
        m2 = moment_entries(sub, spec0.edges)
        m4 = moment_entries(sub, quads)
        return ising_composite_gradient(spec0, lambda idx: m2, lambda idx: m4, J)

    return _sgd(spec0, n, batch_grad, rng, step, batch, iters, J_true)


def exact_sgd(S, spec0: IsingSpec, rng, step: float = SGD_STEP, batch: int = SGD_BATCH,
              iters: int = SGD_ITERS, J_true=None) -> IsingFit:
    """Composite-likelihood ascent with the exact gradient on observed spins."""
    S = np.asarray(S, dtype=np.float64)

    def batch_grad(rows, J):
        return exact_composite_gradient(spec0, J, S[rows])

    return _sgd(spec0, S.shape[0], batch_grad, rng, step, batch, iters, J_true)


def contrastive_ising(source, spec0: IsingSpec, rng, step: float = SGD_STEP,
                      batch: int = SGD_BATCH, iters: int = SGD_ITERS,
                      J_true=None) -> IsingFit:
    """Fit couplings on the edge set of ``spec0`` from a foreground entry source.

    Plain sample matrices are wrapped in a
    :class:`~rca.cumulants.SampleEntrySource`.
    """
    if isinstance(source, np.ndarray):
        source = SampleEntrySource(source)
    return taylor_sgd(source, spec0, rng, step, batch, iters, J_true)


def _n_rows(source) -> int:
    for attr in ("U", "X"):
        if hasattr(source, attr):
            return int(getattr(source, attr).shape[0])
    raise InvalidInputError("entry source does not expose its sample count")
