"""Synthetic data generation, partitioning and subsampling.

All randomness flows through :func:`rng_stream`, which derives an independent
``numpy.random.Generator`` from a root seed plus a tuple of integer keys
(repetition, purpose, partition, subsample ...).  Because a stream depends
only on its keys, work can be scheduled in any order or on any number of
workers and still reproduce the serial result.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np

from .errors import ConfigError, DataError

Task = Literal["regression", "classification"]

# keys used as the second element of a stream key tuple
STREAM_DATA = 0
STREAM_PARTITIONS = 1
STREAM_SUBSAMPLES = 2


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``.

    ``rng_stream(s, 3, 1)`` and ``rng_stream(s, 3, 2)`` are statistically
    independent, and each is reproducible on its own.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class ScenarioConfig:
    """Simulation design plus run bookkeeping.

    ``n_test`` defaults to ``n_val`` when omitted.
    """

    p: int
    n_train: int
    n_sub: int
    n_val: int
    s0: int
    snr: float | None = None
    mu_beta: float = 0.0
    mu_x: float = 0.0
    B: int = 100
    V: int = 1
    n_test: int | None = None
    task: Task = "regression"
    n_partitions: int = 10
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self) -> None:
        if self.n_test is None:
            self.n_test = self.n_val
        for key in ("p", "n_train", "n_sub", "n_val", "n_test", "B", "V", "n_partitions"):
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{key} must be an integer >= 1, got {value!r}")
        if isinstance(self.s0, bool) or not isinstance(self.s0, (int, np.integer)) or self.s0 < 0:
            raise ConfigError(f"s0 must be a nonnegative integer, got {self.s0!r}")
        if self.s0 > self.p:
            raise ConfigError(f"s0={self.s0} exceeds p={self.p}")
        if self.n_sub >= self.n_train:
            raise ConfigError(f"n_sub={self.n_sub} must be smaller than n_train={self.n_train}")
        if self.task not in ("regression", "classification"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.task == "regression":
            if self.snr is None or not self.snr > 0:
                raise ConfigError("snr must be positive for regression scenarios")

    @property
    def n_total(self) -> int:
        return self.n_train + self.n_val + self.n_test

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        missing = {"p", "n_train", "n_sub", "n_val", "s0"} - set(data)
        if missing:
            raise ConfigError(f"missing scenario keys: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        with open(path) as fh:
            data = json.load(fh)
        data.pop("methods", None)
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass
class GroundTruth:
    support: np.ndarray
    beta: np.ndarray
    sigma_noise: float | None = None


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    task: Task = "regression"
    columns: list[str] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2:
            raise DataError("X must be two-dimensional")
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError(f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} entries")
        if self.task == "classification" and not np.all((self.y == 0) | (self.y == 1)):
            raise DataError("classification responses must be 0 or 1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def rows(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.y[idx], self.task, self.columns)


@dataclass(frozen=True)
class Partition:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


def _draw_design(cfg: ScenarioConfig, n: int, rng: np.random.Generator):
    X = rng.normal(loc=cfg.mu_x, scale=1.0, size=(n, cfg.p))
    support = np.sort(rng.choice(cfg.p, size=cfg.s0, replace=False))
    beta = np.zeros(cfg.p)
    beta[support] = rng.normal(loc=cfg.mu_beta, scale=1.0, size=cfg.s0)
    # a N(mu, 1) draw is exactly 0.0 with probability zero, but the contract is
    # that the support is exactly the nonzero pattern
    assert np.count_nonzero(beta) == cfg.s0, "zero coefficient drawn on the support"
    return X, support, beta


def generate_regression(cfg: ScenarioConfig, rng: np.random.Generator) -> tuple[Dataset, GroundTruth]:
    """Gaussian design, sparse coefficients, noise scaled to hit ``cfg.snr``.

    The noise standard deviation is chosen from the *empirical* variance of
    the realized signal ``X @ beta``, so ``var(X @ beta) / sigma**2 == snr``
    holds for each dataset rather than only in expectation.
    """
    if cfg.task != "regression":
        raise ConfigError("generate_regression needs task='regression'")
    n = cfg.n_total
    X, support, beta = _draw_design(cfg, n, rng)
    signal = X @ beta
    signal_var = float(np.var(signal))
    if signal_var == 0.0:
        raise DataError("zero signal variance")
    sigma = float(np.sqrt(signal_var / cfg.snr))
    y = signal + rng.normal(scale=sigma, size=n)
    return Dataset(X, y, "regression"), GroundTruth(support, beta, sigma)


def generate_classification(
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    nsr_estimator: Literal["marginal", "conditional"] = "marginal",
) -> tuple[Dataset, GroundTruth, float]:
    """Logistic responses on the centered linear predictor.

    Returns the dataset, the truth and the inverse noise-to-signal ratio
    ``var(X @ beta) / var(Y | X @ beta)``.  With ``nsr_estimator="marginal"``
    (default) the denominator is the sample variance of the drawn labels;
    ``"conditional"`` uses the mean Bernoulli variance ``mean(eta * (1 - eta))``,
    which is systematically smaller for strong signals.
    """
    if cfg.task != "classification":
        raise ConfigError("generate_classification needs task='classification'")
    n = cfg.n_total
    X, support, beta = _draw_design(cfg, n, rng)
    signal = X @ beta
    signal_var = float(np.var(signal))
    if signal_var == 0.0:
        raise DataError("zero signal variance")
    centered = signal - signal.mean()
    eta = 1.0 / (1.0 + np.exp(-centered))
    y = (rng.random(n) < eta).astype(float)
    if nsr_estimator == "marginal":
        noise_var = float(np.var(y))
    elif nsr_estimator == "conditional":
        noise_var = float(np.mean(eta * (1.0 - eta)))
    else:
        raise ConfigError(f"unknown nsr_estimator {nsr_estimator!r}")
    nsr_inverse = signal_var / noise_var if noise_var > 0 else float("inf")
    return Dataset(X, y, "classification"), GroundTruth(support, beta), nsr_inverse


def generate(cfg: ScenarioConfig, rng: np.random.Generator) -> tuple[Dataset, GroundTruth, float | None]:
    """Dispatch on ``cfg.task``; the third element is 1/NSR for classification."""
    if cfg.task == "regression":
        data, truth = generate_regression(cfg, rng)
        return data, truth, None
    return generate_classification(cfg, rng)


def make_partitions(
    n: int,
    sizes: tuple[int, int, int],
    n_partitions: int,
    rng: np.random.Generator,
) -> list[Partition]:
    """Independent uniform random (train, val, test) splits of ``range(n)``."""
    n_train, n_val, n_test = sizes
    if n_train + n_val + n_test != n:
        raise DataError(f"partition sizes {sizes} do not add up to n={n}")
    out = []
    for _ in range(n_partitions):
        perm = rng.permutation(n)
        out.append(
            Partition(
                np.sort(perm[:n_train]),
                np.sort(perm[n_train : n_train + n_val]),
                np.sort(perm[n_train + n_val :]),
            )
        )
    return out


def make_scenario_partitions(n: int, cfg: ScenarioConfig, rng: np.random.Generator) -> list[Partition]:
    return make_partitions(n, (cfg.n_train, cfg.n_val, cfg.n_test), cfg.n_partitions, rng)


def draw_subsample(train_idx, n_sub: int, rng: np.random.Generator) -> np.ndarray:
    train_idx = np.asarray(train_idx)
    if n_sub > train_idx.size:
        raise DataError(f"n_sub={n_sub} exceeds training size {train_idx.size}")
    return np.sort(rng.choice(train_idx, size=n_sub, replace=False))


# -- CSV ----------------------------------------------------------------------


def write_csv(data: Dataset, path: str | Path) -> None:
    columns = data.columns or [f"x{j + 1}" for j in range(data.p)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*columns, "y"])
        for xi, yi in zip(data.X, data.y):
            label = str(int(yi)) if data.task == "classification" else repr(float(yi))
            writer.writerow([*(repr(float(v)) for v in xi), label])


def read_csv(path: str | Path, task: Task = "regression", response: str = "y") -> Dataset:
    """Read a header-first numeric CSV; ``response`` names the target column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if response not in header:
            raise DataError(f"{path}: response column {response!r} not found in header")
        yi = header.index(response)
        xcols = [j for j in range(len(header)) if j != yi]
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DataError(f"{path}: line {reader.line_num}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path}: non-finite values")
    try:
        return Dataset(arr[:, xcols], arr[:, yi], task, [header[j] for j in xcols])
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None
