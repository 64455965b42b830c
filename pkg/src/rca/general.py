"""Rich component analysis over an arbitrary set system.

View ``i`` (1-based) is ``U_i = sum_j A^(i,j) S_j`` where component ``S_j``
feeds exactly the views in ``Q_j``.  The maps are normalised so that
``A^(min Q_j, j) = I``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .cumulants import MAX_ORDER, _as_samples, cross_cumulant
from .errors import (
    AlignmentError,
    ConfigError,
    DegenerateComponentError,
    InvalidInputError,
    InvalidOrderError,
    NumericError,
    ShapeError,
)
from .tensor_core import (
    DEFAULT_RANK_TOL,
    multilinear_apply,
    pinv,
    singular_values,
    unfold,
)

ZERO_TOL = 1e-6


# --------------------------------------------------------------------------
# set systems
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SetSystem:
    k: int
    subsets: tuple

    def __init__(self, k: int, subsets):
        subs = tuple(tuple(sorted(set(int(i) for i in q))) for q in subsets)
        if k < 1:
            raise ConfigError("k must be positive")
        if not subs:
            raise ConfigError("a set system needs at least one subset")
        for q in subs:
            if not q:
                raise ConfigError("subsets must be nonempty")
            if q[0] < 1 or q[-1] > k:
                raise ConfigError(f"subset {list(q)} is not within views 1..{k}")
        if len(set(subs)) != len(subs):
            raise ConfigError("subsets must be pairwise distinct")
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "subsets", subs)

    @classmethod
    def from_json(cls, text_or_obj) -> "SetSystem":
        obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
        try:
            return cls(obj["k"], obj["subsets"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad set-system JSON: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "subsets": [list(q) for q in self.subsets]})

    def __len__(self):
        return len(self.subsets)

    def processing_order(self) -> list:
        """Maximal sets first; descending size, then lexicographic."""
        return sorted(self.subsets, key=lambda q: (-len(q), q))

    def supersets(self, q) -> list:
        sq = set(q)
        return [p for p in self.subsets if p != q and sq <= set(p)]

    def smallest_level(self) -> int:
        for L in range(1, self.k + 1):
            if check_distinguishable(self, L).ok:
                return L
        raise ConfigError("set system is not distinguishable at any level")


@dataclass
class DistinguishingCertificate:
    """Result of a distinguishability check.

    On success ``sets`` maps each subset to its distinguishing set; on
    failure ``witness`` holds ``(Q_j, Q_j')`` for the first subset without one.
    """

    L: int
    sets: dict = field(default_factory=dict)
    witness: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.witness is None


def check_distinguishable(system: SetSystem, L: int) -> DistinguishingCertificate:
    """Exhaustive search for distinguishing sets of size at most ``L``."""
    if L < 1 or L > system.k:
        raise InvalidInputError(f"L must be in 1..{system.k}")
    cert = DistinguishingCertificate(L=L)
    for q in system.subsets:
        others = [p for p in system.subsets if p != q]
        found = None
        blocker = None
        for size in range(1, min(L, len(q)) + 1):
            for T in combinations(q, size):
                bad = next((p for p in others
                            if not set(q) <= set(p) and set(T) <= set(p)), None)
                if bad is None:
                    found = T
                    break
                blocker = blocker or bad
            if found:
                break
        if found is None:
            cert.witness = (q, blocker)
            return cert
        cert.sets[q] = found
    return cert


def index_sequence(T: Sequence[int], length: int) -> tuple:
    """Distinguishing set stretched to ``length`` view indices.

    The first element is repeated in front, so the last mode is always
    ``max(T)``: ``(1, 2) -> (1, 1, 1, 2)``.
    """
    T = tuple(T)
    if length < len(T):
        raise InvalidOrderError(f"order too low for a distinguishing set of size {len(T)}")
    return (T[0],) * (length - len(T) + 1) + T[1:]


# --------------------------------------------------------------------------
# cumulant sources
# --------------------------------------------------------------------------

class SampleCumulants:
    """Cross-cumulants between views estimated from row-aligned samples."""

    def __init__(self, views):
        views = [_as_samples(X) for X in views]
        n = views[0].shape[0]
        if any(X.shape[0] != n for X in views):
            raise AlignmentError("views have different sample counts")
        d = views[0].shape[1]
        if any(X.shape[1] != d for X in views):
            raise ShapeError("all views must share the same dimension")
        self.views = views
        self.k = len(views)
        self.dim = d
        self._cache: dict = {}

    def cross(self, ids) -> np.ndarray:
        ids = tuple(ids)
        if ids not in self._cache:
            self._cache[ids] = cross_cumulant([self.views[i - 1] for i in ids])
        return self._cache[ids]


class PopulationCumulants:
    """Exact cross-cumulants of views built from known component cumulants.

    Parameters
    ----------
    system : SetSystem
    maps : dict
        ``(i, Q) -> A^(i,Q)`` for every ``i in Q``.
    component_cumulants : dict
        ``Q -> {order: tensor}``; zero components may be omitted.
    """

    def __init__(self, system: SetSystem, maps: dict, component_cumulants: dict):
        self.system = system
        self.maps = maps
        self.kappa = component_cumulants
        self.k = system.k
        self.dim = next(iter(maps.values())).shape[0]

    def cross(self, ids) -> np.ndarray:
        ids = tuple(ids)
        t = len(ids)
        out = np.zeros((self.dim,) * t)
        for q in self.system.subsets:
            if q not in self.kappa or not set(ids) <= set(q):
                continue
            out = out + multilinear_apply(
                self.kappa[q][t], [self.maps[(i, q)].T for i in ids])
        return out


def _as_source(views):
    if hasattr(views, "cross"):
        return views
    return SampleCumulants(views)


# --------------------------------------------------------------------------
# FindLinear / ComputeCumulant
# --------------------------------------------------------------------------

@dataclass
class GeneralExtraction:
    """Recovered maps, component cumulants and detected zero components."""

    system: SetSystem
    certificate: DistinguishingCertificate
    order: int
    maps: dict = field(default_factory=dict)
    cumulants: dict = field(default_factory=dict)
    zero_components: set = field(default_factory=set)
    processing_order: list = field(default_factory=list)

    def map(self, i: int, q) -> np.ndarray:
        q = tuple(sorted(q))
        if i not in q:
            return np.zeros((self._dim(), self._dim()))
        if q in self.zero_components:
            return np.zeros((self._dim(), self._dim()))
        return self.maps[(i, q)]

    def _dim(self) -> int:
        return next(iter(self.maps.values())).shape[0]

    @property
    def active(self) -> list:
        return [q for q in self.processing_order if q not in self.zero_components]


def _validate_order(system: SetSystem, order) -> list:
    if order is None:
        return system.processing_order()
    order = [tuple(sorted(q)) for q in order]
    if sorted(order) != sorted(system.subsets):
        raise InvalidInputError("processing order must list every subset once")
    for pos, q in enumerate(order):
        for later in order[pos + 1:]:
            if set(q) < set(later):
                raise InvalidInputError(f"{list(q)} is processed before its superset {list(later)}")
    return order


def _correction(ext: GeneralExtraction, q, ids, order_t: int, last_map_of=None):
    """Sum over processed supersets ``l`` of ``kappa(S_l)`` mapped onto modes ``ids``.

    Mode ``m`` uses ``A^(ids[m], l)^T``, right-multiplied by
    ``A^(ids[m], q)^{-T}`` when ``last_map_of`` says so (see callers).
    """
    total = 0.0
    for l in ext.active:
        if l == q or not set(q) < set(l) or l not in ext.cumulants:
            continue
        mats = []
        for m, i in enumerate(ids):
            M = ext.maps[(i, l)].T
            if last_map_of is not None and last_map_of[m] is not None:
                M = M @ last_map_of[m]
            mats.append(M)
        total = total + multilinear_apply(ext.cumulants[l][order_t], mats)
    return total


def find_linear(views, system: SetSystem, order: int | None = None,
                zero_tol: float = ZERO_TOL, rank_tol: float = DEFAULT_RANK_TOL,
                processing_order=None) -> GeneralExtraction:
    """Recover every map ``A^(i,j)`` and the order-``order`` component cumulants.

    Parameters
    ----------
    views : list of (n, d) arrays, or a cumulant source with ``cross(ids)``
    system : SetSystem
    order : int, optional
        Cumulant order; defaults to ``L + 1`` for the smallest certified
        level ``L``.  Higher orders help when ``L + 1``-th cumulants vanish
        (e.g. symmetric components).
    zero_tol : float
        ``S_j`` is declared zero when ``||M_min||`` falls below ``zero_tol``
        times the norm of the auto-cumulant of view ``min Q_j``.
    """
    source = _as_source(views)
    if source.k != system.k:
        raise ShapeError(f"system has {system.k} views but {source.k} were given")
    L = system.smallest_level()
    cert = check_distinguishable(system, L)
    if order is None:
        order = L + 1
    if not L + 1 <= order <= MAX_ORDER:
        raise InvalidOrderError(f"order must be in {L + 1}..{MAX_ORDER}")
    proc = _validate_order(system, processing_order)
    ext = GeneralExtraction(system=system, certificate=cert, order=order,
                            processing_order=proc)
    for q in proc:
        w = index_sequence(cert.sets[q], order - 1)
        lead = min(q)
        M = {}
        for i in q:
            raw = source.cross(w + (i,))
            M[i] = unfold(raw - _correction(ext, q, w + (i,), order))
        scale = np.linalg.norm(unfold(source.cross((lead,) * order)), 2)
        s = singular_values(M[lead])
        if s[0] <= zero_tol * scale:
            ext.zero_components.add(q)
            continue
        if s[-1] < zero_tol * s[0]:
            raise DegenerateComponentError(
                f"component {list(q)} has a rank-deficient cumulant unfolding "
                f"(sigma_min/sigma_max = {s[-1] / s[0]:.3g})")
        P = pinv(M[lead], rank_tol)
        for i in q:
            ext.maps[(i, q)] = np.eye(M[lead].shape[1]) if i == lead else (P @ M[i]).T
        # kappa(S_j) = kappa(A^-1 U_w1, ..., A^-1 U_w(L'), U_min) - corrections
        inv_t = [np.linalg.inv(ext.maps[(i, q)]).T for i in w]
        ids = w + (lead,)
        kap = multilinear_apply(source.cross(ids), inv_t + [None])
        kap = kap - _correction(ext, q, ids, order, last_map_of=inv_t + [None])
        ext.cumulants[q] = {order: kap}
    if len(ext.zero_components) == len(system):
        raise NumericError("every component was detected as zero")
    return ext


def compute_cumulants(views, extraction: GeneralExtraction, t: int) -> dict:
    """Order-``t`` cumulant of every nonzero component (ComputeCumulant).

    The result is also stored in ``extraction.cumulants``.
    """
    source = _as_source(views)
    cert = extraction.certificate
    if t < cert.L:
        raise InvalidOrderError(
            f"order {t} is below the distinguishability level {cert.L}; "
            "these cumulants are not identifiable")
    if t > MAX_ORDER:
        raise InvalidOrderError(f"order {t} exceeds the cap of {MAX_ORDER}")
    # work on a copy so corrections use order-t cumulants only
    work = GeneralExtraction(system=extraction.system, certificate=cert, order=t,
                             maps=extraction.maps,
                             zero_components=extraction.zero_components,
                             processing_order=extraction.processing_order)
    out = {}
    for q in extraction.active:
        w = index_sequence(cert.sets[q], t)
        inv_t = [np.linalg.inv(extraction.maps[(i, q)]).T for i in w]
        kap = multilinear_apply(source.cross(w), inv_t)
        kap = kap - _correction(work, q, w, t, last_map_of=inv_t)
        work.cumulants[q] = {t: kap}
        out[q] = kap
        extraction.cumulants.setdefault(q, {})[t] = kap
    return out


def reconstruct_view_cumulant(extraction: GeneralExtraction, i: int, t: int) -> np.ndarray:
    """``sum_j kappa_t(S_j)(A^(i,j)^T, ...)`` for view ``i``."""
    total = 0.0
    for q in extraction.active:
        if i in q:
            total = total + multilinear_apply(
                extraction.cumulants[q][t], [extraction.maps[(i, q)].T] * t)
    return total
