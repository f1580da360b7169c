"""Loss-guided stability selection and post-stability subset search.

The pipeline is:

1. fit the base selector (componentwise boosting) on ``B`` subsamples of the
   training rows and count how often each predictor is selected
   (:func:`compute_profile`, :func:`aggregate`);
2. turn the frequencies into candidate stable sets, either by rank
   (:func:`stable_by_rank`) or by threshold (:func:`stable_by_threshold`);
3. pick the candidate with the lowest validation loss
   (:func:`loss_guided_select`), or search the subsets of a meta-stable set
   (:func:`pss_exhaustive`, :func:`pss_stepwise`);
4. refit the winner on all non-test rows.

Indices are 0-based in memory and 1-based in the JSON produced by
:func:`profile_to_dict` and :func:`stable_model_to_dict`.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Literal, Sequence

import numpy as np

from .boosting import BoostConfig, fit_boost
from .datagen import Dataset, draw_subsample, rng_stream
from .errors import ConfigError, SelectionError, UnderdeterminedError
from .estimators import FittedSubmodel, evaluate_loss, fit_reduced, fit_with_fallback
from .losses import SQUARED, get_loss, sigmoid

log = logging.getLogger(__name__)

EXHAUSTIVE_HARD_CAP = 25
_CHUNK = 8192


# -- frequencies ----------------------------------------------------------------


@dataclass
class SelectionProfile:
    """Selection counts over ``B`` subsample models.

    Counts are kept as integers so frequencies are exact multiples of 1/B.
    ``sets`` is only filled when diagnostics were requested.
    """

    p: int
    counts: np.ndarray = None
    B: int = 0
    total_size: int = 0
    sets: list[np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.counts is None:
            self.counts = np.zeros(self.p, dtype=np.int64)

    def add(self, selected: Iterable[int]) -> None:
        """Fold one subsample selection into the counts."""
        s = np.unique(np.asarray(list(selected) if not isinstance(selected, np.ndarray) else selected, dtype=int))
        if s.size and (s[0] < 0 or s[-1] >= self.p):
            raise ValueError(f"selected index out of range for p={self.p}")
        self.counts[s] += 1
        self.B += 1
        self.total_size += int(s.size)
        if self.sets is not None:
            self.sets.append(s)

    @property
    def freq(self) -> np.ndarray:
        if self.B == 0:
            return np.zeros(self.p)
        return self.counts / self.B

    @property
    def mean_set_size(self) -> float:
        return self.total_size / self.B if self.B else 0.0

    def frequency(self, j: int) -> Fraction:
        return Fraction(int(self.counts[j]), self.B)


def aggregate(sets: Sequence[Iterable[int]], p: int, keep_sets: bool = False) -> SelectionProfile:
    """Selection frequencies of ``p`` predictors over the given index sets."""
    profile = SelectionProfile(p, sets=[] if keep_sets else None)
    for s in sets:
        profile.add(s)
    if profile.B < 1:
        raise ValueError("need at least one selected set")
    return profile


def stable_by_threshold(profile: SelectionProfile, pi_thr: float) -> np.ndarray:
    """Indices whose frequency is at least ``pi_thr``."""
    if not 0.0 < pi_thr <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {pi_thr}")
    return np.flatnonzero(profile.freq >= pi_thr)


def kth_largest_count(profile: SelectionProfile, q: int) -> int:
    return int(np.sort(profile.counts)[::-1][q - 1])


def stable_by_rank(profile: SelectionProfile, q: int) -> np.ndarray:
    """Indices whose frequency reaches the ``q``-th largest frequency.

    Ties at the cut are all kept, so the result can hold more than ``q``
    indices.
    """
    if not 1 <= q <= profile.p:
        raise ValueError(f"q must lie in 1..{profile.p}, got {q}")
    return np.flatnonzero(profile.counts >= kth_largest_count(profile, q))


# -- grids ------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    kind: Literal["q_grid", "pi_grid"] = "q_grid"
    q_values: tuple[int, ...] = tuple(range(1, 11))
    delta: float = 0.05

    def __post_init__(self) -> None:
        if self.kind == "q_grid":
            q = tuple(int(v) for v in self.q_values)
            if not q or any(v < 1 for v in q) or any(b <= a for a, b in zip(q, q[1:])):
                raise ConfigError(f"q grid must be positive and strictly ascending, got {self.q_values}")
            object.__setattr__(self, "q_values", q)
        elif self.kind == "pi_grid":
            if not 0.0 < self.delta < 1.0:
                raise ConfigError(f"pi grid mesh must lie in (0, 1), got {self.delta}")
        else:
            raise ConfigError(f"unknown grid kind {self.kind!r}")

    def pi_values(self) -> list[float]:
        """``delta, 2*delta, ..., 1``, rounded so that k/B frequencies compare cleanly."""
        out = []
        k = 1
        while k * self.delta < 1.0 - 1e-12:
            out.append(round(k * self.delta, 12))
            k += 1
        out.append(1.0)
        return out

    def resolve(self, profile: SelectionProfile) -> list:
        """Grid values usable with ``profile``.

        q values are clipped to the number of predictors with positive
        frequency (duplicates after clipping are dropped).
        """
        if self.kind == "pi_grid":
            return self.pi_values()
        n_pos = int(np.count_nonzero(profile.counts))
        if n_pos == 0:
            raise SelectionError("empty frequency support: no predictor was ever selected, a q grid has no valid value")
        return sorted({min(q, n_pos) for q in self.q_values})

    @classmethod
    def parse(cls, spec: Any) -> "GridSpec":
        """From a dict, or a string like ``"q:1-10"``, ``"q:1,2,5"`` or ``"pi:0.05"``."""
        if isinstance(spec, GridSpec):
            return spec
        if isinstance(spec, dict):
            spec = dict(spec)
            if "q_values" in spec:
                spec["q_values"] = tuple(spec["q_values"])
            return cls(**spec)
        if isinstance(spec, str):
            kind, _, body = spec.partition(":")
            kind = kind.strip().lower()
            if kind == "q":
                values: list[int] = []
                for part in body.split(","):
                    if "-" in part:
                        lo, hi = part.split("-")
                        values.extend(range(int(lo), int(hi) + 1))
                    elif part.strip():
                        values.append(int(part))
                return cls("q_grid", tuple(values))
            if kind == "pi":
                return cls("pi_grid", delta=float(body) if body else 0.05)
        raise ConfigError(f"cannot parse grid {spec!r}")

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "q_grid":
            return {"kind": self.kind, "q_values": list(self.q_values)}
        return {"kind": self.kind, "delta": self.delta}


# -- models ---------------------------------------------------------------------------


@dataclass
class StableModel:
    support: np.ndarray
    submodel: FittedSubmodel
    chosen: Any
    val_loss: float
    pfer_bound: float | None = None
    pfer_applicable: bool = False
    candidates: list[dict[str, Any]] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class PssConfig:
    pi_thr: float = 0.25
    q0: int = 20
    strategy: Literal["exhaustive", "forward", "backward"] = "exhaustive"

    def __post_init__(self) -> None:
        if not 0.0 < self.pi_thr <= 1.0:
            raise ConfigError(f"pi_thr must lie in (0, 1], got {self.pi_thr}")
        if isinstance(self.q0, bool) or not isinstance(self.q0, (int, np.integer)) or self.q0 < 1:
            raise ConfigError(f"q0 must be an integer >= 1, got {self.q0!r}")
        if self.strategy not in ("exhaustive", "forward", "backward"):
            raise ConfigError(f"unknown PSS strategy {self.strategy!r}")


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    # shortest decimal repr: 0.6 is read as 3/5, not as its binary neighbour
    return Fraction(repr(float(x)))


def pfer_bound(freq_floor, mean_set_size, p: int) -> float | None:
    """Ex-post bound on the expected number of false selections.

    ``(q_bar**2 / p) / (2 * floor - 1)``, defined only for ``floor > 0.5``.
    Arithmetic is done on rationals so that decimal inputs give exact
    results.
    """
    floor = _exact(freq_floor)
    if floor <= Fraction(1, 2):
        return None
    qbar = _exact(mean_set_size)
    return float(qbar * qbar / (p * (2 * floor - 1)))


def _fit_val_loss(train: Dataset, val: Dataset, support, loss) -> float:
    try:
        model = fit_reduced(train.X, train.y, support, loss)
    except UnderdeterminedError:
        return math.inf
    return evaluate_loss(model, val.X, val.y, loss)


def _argmin_sparsest(losses: Sequence[float], sizes: Sequence[int]) -> int:
    """Index of the minimal loss; ties go to the smaller set, then the earlier index."""
    best = None
    for k, (l, s) in enumerate(zip(losses, sizes)):
        if math.isinf(l):
            continue
        if best is None or l < losses[best] or (l == losses[best] and s < sizes[best]):
            best = k
    if best is None:
        raise SelectionError("no fittable candidate")
    return best


def _refit(full: Dataset, support, loss, boost: BoostConfig) -> FittedSubmodel:
    return fit_with_fallback(full.X, full.y, support, loss, boost)


def loss_guided_select(
    profile: SelectionProfile,
    grid: GridSpec,
    train: Dataset,
    val: Dataset,
    full: Dataset,
    loss=SQUARED,
    boost: BoostConfig = BoostConfig(),
) -> StableModel:
    """Choose the grid element whose stable set predicts ``val`` best.

    Each candidate is refit on ``train`` and scored on ``val``; the winner is
    refit on ``full``.  Candidates that cannot be fit (underdetermined) are
    skipped.
    """
    if isinstance(loss, str):
        loss = get_loss(loss)
    values = grid.resolve(profile)
    rule = stable_by_rank if grid.kind == "q_grid" else stable_by_threshold
    supports = [rule(profile, v) for v in values]
    cache: dict[tuple[int, ...], float] = {}
    losses = []
    for s in supports:
        key = tuple(s.tolist())
        if key not in cache:
            cache[key] = _fit_val_loss(train, val, s, loss)
        losses.append(cache[key])
    k = _argmin_sparsest(losses, [s.size for s in supports])
    support = supports[k]
    submodel = _refit(full, support, loss, boost)

    if grid.kind == "q_grid":
        outside = np.setdiff1d(np.arange(profile.p), support)
        floor = profile.frequency(int(outside[np.argmax(profile.counts[outside])])) if outside.size else None
    else:
        floor = values[k]
    bound = pfer_bound(floor, Fraction(profile.total_size, profile.B), profile.p) if floor is not None else None
    candidates = [
        {"value": v, "size": int(s.size), "val_loss": l} for v, s, l in zip(values, supports, losses)
    ]
    return StableModel(
        submodel.support, submodel, values[k], losses[k], bound, bound is not None, candidates
    )


# -- post-stability search ------------------------------------------------------------


def pss_meta_stable(profile: SelectionProfile, cfg: PssConfig) -> np.ndarray:
    """Predictors above ``pi_thr``, cut to the ``q0`` most frequent.

    Ties at the cut prefer lower indices so the cap is exact.
    """
    meta = stable_by_threshold(profile, cfg.pi_thr)
    if meta.size > cfg.q0:
        order = np.lexsort((meta, -profile.counts[meta]))
        meta = np.sort(meta[order[: cfg.q0]])
    return meta


def _squared_insample_champion(Xm: np.ndarray, y: np.ndarray, c: int):
    """Lowest-RSS subset of size ``c`` of the columns of ``Xm`` (lexicographic ties)."""
    n, m = Xm.shape
    Xc = Xm - Xm.mean(axis=0)
    yc = y - y.mean()
    G = Xc.T @ Xc
    g = Xc.T @ yc
    yy = float(yc @ yc)
    best_loss, best = math.inf, None
    combos_iter = itertools.combinations(range(m), c)
    while True:
        chunk = np.array(list(itertools.islice(combos_iter, _CHUNK)), dtype=int)
        if chunk.size == 0:
            break
        Gs = G[chunk[:, :, None], chunk[:, None, :]]
        gs = g[chunk]
        try:
            sol = np.linalg.solve(Gs, gs[..., None])[..., 0]
            rss = yy - np.einsum("kc,kc->k", gs, sol)
        except np.linalg.LinAlgError:
            rss = np.array([_single_insample(Xm, y, row, SQUARED) * n for row in chunk])
        i = int(np.argmin(rss))
        if rss[i] / n < best_loss:
            best_loss, best = float(rss[i] / n), tuple(chunk[i].tolist())
    return best, best_loss


def _single_insample(Xm, y, cols, loss) -> float:
    try:
        model = fit_reduced(Xm, y, cols, loss)
    except UnderdeterminedError:
        return math.inf
    return evaluate_loss(model, Xm, y, loss)


def _logistic_insample_batch(Xc: np.ndarray, y: np.ndarray, chunk: np.ndarray) -> np.ndarray:
    """Mean deviance of the logistic MLE for every column subset in ``chunk``.

    Batched Newton iterations with step halving; subsets whose coefficients
    blow up (separation) keep their last iterate.
    """
    n = Xc.shape[0]
    k, c = chunk.shape
    A = np.concatenate([np.ones((k, n, 1)), np.transpose(Xc[:, chunk], (1, 0, 2))], axis=2)
    b = np.zeros((k, c + 1))
    ybar = y.mean()
    b[:, 0] = np.log(ybar / (1 - ybar))

    def deviance(eta):
        return np.mean(np.logaddexp(0.0, eta) - y * eta, axis=1)

    eta = np.einsum("knc,kc->kn", A, b)
    dev = deviance(eta)
    active = np.ones(k, dtype=bool)
    for _ in range(100):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Aa = A[idx]
        mu = sigmoid(eta[idx])
        grad = np.einsum("knc,kn->kc", Aa, y - mu) / n
        done = np.linalg.norm(grad, axis=1) <= 1e-8
        w = mu * (1 - mu)
        H = np.matmul(np.transpose(Aa * w[:, :, None], (0, 2, 1)), Aa) / n
        try:
            delta = np.linalg.solve(H, grad[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = np.matmul(np.linalg.pinv(H), grad[..., None])[..., 0]
        t = np.ones(idx.size)
        new_b = b[idx] + delta
        new_eta = np.einsum("knc,kc->kn", Aa, new_b)
        new_dev = deviance(new_eta)
        for _ in range(30):
            worse = new_dev > dev[idx] + 1e-15 * np.abs(dev[idx])
            if not worse.any():
                break
            t[worse] *= 0.5
            new_b[worse] = b[idx[worse]] + t[worse, None] * delta[worse]
            new_eta[worse] = np.einsum("knc,kc->kn", Aa[worse], new_b[worse])
            new_dev[worse] = deviance(new_eta[worse])
        stuck = new_dev > dev[idx] + 1e-15 * np.abs(dev[idx])
        upd = ~done & ~stuck
        b[idx[upd]] = new_b[upd]
        eta[idx[upd]] = new_eta[upd]
        dev[idx[upd]] = new_dev[upd]
        diverged = np.max(np.abs(b[idx]), axis=1) > 1e4
        active[idx[done | stuck | diverged]] = False
    return dev


def _logistic_insample_champion(Xm: np.ndarray, y: np.ndarray, c: int):
    n, m = Xm.shape
    if y.min() == y.max():
        # every subset fits perfectly in the limit; keep the lexicographic first
        return tuple(range(c)), 0.0
    Xc = Xm - Xm.mean(axis=0)
    best_loss, best = math.inf, None
    combos_iter = itertools.combinations(range(m), c)
    chunk_size = max(1, _CHUNK * 16 // (n * (c + 1)))
    while True:
        chunk = np.array(list(itertools.islice(combos_iter, chunk_size)), dtype=int)
        if chunk.size == 0:
            break
        dev = _logistic_insample_batch(Xc, y, chunk)
        i = int(np.argmin(dev))
        if dev[i] < best_loss:
            best_loss, best = float(dev[i]), tuple(chunk[i].tolist())
    return best, best_loss


def best_subsets_by_size(X, y, meta, loss=SQUARED) -> list[tuple[np.ndarray, float]]:
    """In-sample best subset of ``meta`` for every cardinality ``0..len(meta)``.

    Returns ``(support, in_sample_loss)`` per cardinality; sizes with no
    fittable subset get ``inf`` loss.  Exact ties keep the lexicographically
    smallest subset.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(loss, str):
        loss = get_loss(loss)
    meta = np.asarray(meta, dtype=int)
    n = X.shape[0]
    Xm = X[:, meta]
    out = [(meta[:0], _single_insample(Xm, y, [], loss))]
    for c in range(1, meta.size + 1):
        if c >= n:
            out.append((meta[:c], math.inf))
            continue
        if loss.kind == "squared":
            best, l = _squared_insample_champion(Xm, y, c)
        else:
            best, l = _logistic_insample_champion(Xm, y, c)
        support = meta[list(best)] if best is not None else meta[:c]
        out.append((support, l if best is not None else math.inf))
    return out


def pss_exhaustive(
    meta,
    train: Dataset,
    val: Dataset,
    full: Dataset,
    loss=SQUARED,
    boost: BoostConfig = BoostConfig(),
) -> StableModel:
    """Best (validation) of the best (in-sample) subsets of each size."""
    meta = np.unique(np.asarray(meta, dtype=int))
    if meta.size > EXHAUSTIVE_HARD_CAP:
        raise ConfigError(
            f"meta-stable set has {meta.size} variables; exhaustive search is capped at "
            f"{EXHAUSTIVE_HARD_CAP}, lower q0"
        )
    if isinstance(loss, str):
        loss = get_loss(loss)
    champions = best_subsets_by_size(train.X, train.y, meta, loss)
    losses = [
        _fit_val_loss(train, val, s, loss) if math.isfinite(l) else math.inf for s, l in champions
    ]
    k = _argmin_sparsest(losses, list(range(len(losses))))
    submodel = _refit(full, champions[k][0], loss, boost)
    candidates = [
        {"size": int(s.size), "support": s.tolist(), "train_loss": tl, "val_loss": vl}
        for (s, tl), vl in zip(champions, losses)
    ]
    return StableModel(submodel.support, submodel, {"size": k}, losses[k], candidates=candidates)


def pss_stepwise(
    meta,
    direction: Literal["forward", "backward"],
    train: Dataset,
    val: Dataset,
    full: Dataset,
    loss=SQUARED,
    boost: BoostConfig = BoostConfig(),
) -> StableModel:
    """Greedy search over ``meta`` driven by validation loss only.

    Forward starts empty and adds, backward starts from ``meta`` and removes;
    both stop when no single move strictly lowers the validation loss.
    """
    if direction not in ("forward", "backward"):
        raise ConfigError(f"unknown direction {direction!r}")
    if isinstance(loss, str):
        loss = get_loss(loss)
    meta = np.unique(np.asarray(meta, dtype=int))
    current = [] if direction == "forward" else meta.tolist()
    cur_loss = _fit_val_loss(train, val, current, loss)
    path = [{"support": list(current), "val_loss": cur_loss}]
    while True:
        if direction == "forward":
            moves = [sorted(current + [j]) for j in meta.tolist() if j not in current]
        else:
            moves = [[i for i in current if i != j] for j in current]
        if not moves:
            break
        move_losses = [_fit_val_loss(train, val, s, loss) for s in moves]
        i = int(np.argmin(move_losses))
        if not move_losses[i] < cur_loss:
            break
        current, cur_loss = moves[i], move_losses[i]
        path.append({"support": list(current), "val_loss": cur_loss})
    if math.isinf(cur_loss):
        raise SelectionError("no fittable candidate")
    submodel = _refit(full, current, loss, boost)
    return StableModel(
        submodel.support, submodel, {"direction": direction, "steps": len(path) - 1}, cur_loss, candidates=path
    )


# -- full pipeline ---------------------------------------------------------------------


Method = Literal["lss", "pss_es", "pss_fw", "pss_bw"]


@dataclass(frozen=True)
class StabSelConfig:
    B: int = 100
    n_sub: int = 200
    boost: BoostConfig = BoostConfig()
    loss: str = "squared"
    method: Method = "lss"
    grid: GridSpec = GridSpec()
    pss: PssConfig = PssConfig()

    def __post_init__(self) -> None:
        if self.B < 1 or self.n_sub < 2:
            raise ConfigError("B must be >= 1 and n_sub >= 2")
        if self.method not in ("lss", "pss_es", "pss_fw", "pss_bw"):
            raise ConfigError(f"unknown method {self.method!r}")
        get_loss(self.loss)


def _subsample_selection(train: Dataset, n_sub: int, loss, boost: BoostConfig, seed: int, keys, b: int):
    rng = rng_stream(seed, *keys, b)
    rows = draw_subsample(np.arange(train.n), n_sub, rng)
    return fit_boost(train.X[rows], train.y[rows], loss, boost).selected


def compute_profile(
    train: Dataset,
    B: int,
    n_sub: int,
    loss=SQUARED,
    boost: BoostConfig = BoostConfig(),
    seed: int = 0,
    keys: tuple[int, ...] = (),
    n_jobs: int = 1,
    keep_sets: bool = False,
) -> SelectionProfile:
    """Boost on ``B`` subsamples of ``train`` and aggregate the selections.

    Subsample ``b`` draws from ``rng_stream(seed, *keys, b)``, so the result
    does not depend on ``n_jobs``.
    """
    if isinstance(loss, str):
        loss = get_loss(loss)
    profile = SelectionProfile(train.p, sets=[] if keep_sets else None)
    args = (train, n_sub, loss, boost, seed, tuple(keys))
    if n_jobs == 1:
        for b in range(B):
            profile.add(_subsample_selection(*args, b))
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            for sel in pool.map(lambda b: _subsample_selection(*args, b), range(B)):
                profile.add(sel)
    return profile


def select_from_profile(
    profile: SelectionProfile,
    cfg: StabSelConfig,
    train: Dataset,
    val: Dataset,
    full: Dataset,
) -> StableModel:
    loss = get_loss(cfg.loss)
    if cfg.method == "lss":
        return loss_guided_select(profile, cfg.grid, train, val, full, loss, cfg.boost)
    meta = pss_meta_stable(profile, cfg.pss)
    if cfg.method == "pss_es":
        return pss_exhaustive(meta, train, val, full, loss, cfg.boost)
    direction = "forward" if cfg.method == "pss_fw" else "backward"
    return pss_stepwise(meta, direction, train, val, full, loss, cfg.boost)


def run_stability_selection(
    train: Dataset,
    val: Dataset,
    full: Dataset,
    cfg: StabSelConfig,
    seed: int = 0,
    keys: tuple[int, ...] = (),
    n_jobs: int = 1,
    keep_sets: bool = False,
) -> tuple[StableModel, SelectionProfile]:
    """Subsample, aggregate, and select; deterministic given ``(seed, keys)``."""
    if cfg.n_sub > train.n:
        raise ConfigError(f"n_sub={cfg.n_sub} exceeds the {train.n} training rows")
    profile = compute_profile(train, cfg.B, cfg.n_sub, cfg.loss, cfg.boost, seed, keys, n_jobs, keep_sets)
    return select_from_profile(profile, cfg, train, val, full), profile


# -- serialization ----------------------------------------------------------------------


def profile_to_dict(profile: SelectionProfile) -> dict[str, Any]:
    out: dict[str, Any] = {
        "p": profile.p,
        "B": profile.B,
        "mean_set_size": str(Fraction(profile.total_size, profile.B)) if profile.B else "0",
        "frequencies": {
            str(j + 1): f"{int(profile.counts[j])}/{profile.B}" for j in np.flatnonzero(profile.counts)
        },
    }
    if profile.sets is not None:
        out["sets"] = [[int(j) + 1 for j in s] for s in profile.sets]
    return out


def profile_from_dict(data: dict[str, Any]) -> SelectionProfile:
    p, B = int(data["p"]), int(data["B"])
    counts = np.zeros(p, dtype=np.int64)
    for key, frac in data["frequencies"].items():
        k, denom = frac.split("/")
        if int(denom) != B:
            raise ValueError(f"frequency {frac} does not use denominator B={B}")
        counts[int(key) - 1] = int(k)
    total = Fraction(data["mean_set_size"]) * B
    sets = [np.asarray(s, dtype=int) - 1 for s in data["sets"]] if "sets" in data else None
    return SelectionProfile(p, counts, B, int(total), sets)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isinf(x) or math.isnan(x) else x
    return x


def stable_model_to_dict(model: StableModel) -> dict[str, Any]:
    sub = model.submodel
    return {
        "support": [int(j) + 1 for j in model.support],
        "intercept": sub.intercept,
        "coef": {str(int(j) + 1): float(c) for j, c in zip(sub.support, sub.coef)},
        "converged": sub.converged,
        "chosen": _jsonable(model.chosen),
        "val_loss": _jsonable(model.val_loss),
        "expected_false_positive_bound": model.pfer_bound,
        "pfer_applicable": model.pfer_applicable,
    }
