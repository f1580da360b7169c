"""Componentwise linear functional gradient boosting.

Each iteration regresses the negative gradient on every standardized
predictor separately (simple least squares, no intercept since the columns
are centered), keeps the best-fitting column and moves the model ``kappa``
of the way along that fit.  With squared loss this is L2-Boosting, with the
binomial deviance it is LogitBoost in its gradient form.

For the logistic loss the step is rescaled (see
:class:`~lgss.losses.LogisticLoss`) so that ``kappa`` matches the mboost
convention; coefficients are always reported on the log-odds scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .losses import LOGISTIC, SQUARED, LogisticLoss, SquaredLoss, get_loss

TIE_RTOL = 1e-12

__all__ = [
    "BoostConfig",
    "BoostModel",
    "LogisticLoss",
    "SquaredLoss",
    "SQUARED",
    "LOGISTIC",
    "get_loss",
    "fit_boost",
    "selected_set",
]


@dataclass(frozen=True)
class BoostConfig:
    m_iter: int = 100
    kappa: float = 0.1

    def __post_init__(self) -> None:
        if isinstance(self.m_iter, bool) or not isinstance(self.m_iter, (int, np.integer)) or self.m_iter < 1:
            raise ConfigError(f"m_iter must be an integer >= 1, got {self.m_iter!r}")
        if not 0.0 < self.kappa <= 1.0:
            raise ConfigError(f"kappa must lie in (0, 1], got {self.kappa!r}")


@dataclass
class BoostModel:
    """Fitted boosting model on the original predictor scale.

    ``trace`` lists ``(column, step)`` per iteration, where ``step`` is the
    increment of the coefficient of the *standardized* column (in units of
    the linear predictor ``f``).
    """

    intercept: float
    coef: np.ndarray
    offset: float
    center: np.ndarray
    scale: np.ndarray
    trace: list[tuple[int, float]] = field(default_factory=list, repr=False)

    @property
    def selected(self) -> np.ndarray:
        return selected_set(self)

    def predict(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=float) @ self.coef


def selected_set(model: BoostModel) -> np.ndarray:
    """Sorted indices of the nonzero coefficients."""
    return np.flatnonzero(model.coef)


def fit_boost(X, y, loss=SQUARED, cfg: BoostConfig = BoostConfig()) -> BoostModel:
    """Run ``cfg.m_iter`` boosting iterations on ``(X, y)``.

    Constant columns are never selected.  If every column is constant, or if
    logistic labels are all one class, the model is offset-only.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < 2:
        raise ValueError("boosting needs at least two rows")
    if isinstance(loss, str):
        loss = get_loss(loss)

    center = X.mean(axis=0)
    spread = np.ptp(X, axis=0)
    usable = spread > 0
    scale = np.ones(p)
    Z = X - center
    scale[usable] = np.sqrt(np.mean(Z[:, usable] ** 2, axis=0))
    Z[:, usable] /= scale[usable]
    Z[:, ~usable] = 0.0
    Zu = Z[:, usable]
    cols = np.flatnonzero(usable)

    offset = loss.offset(y)
    f = np.full(n, offset)
    std_coef = np.zeros(p)
    trace: list[tuple[int, float]] = []

    degenerate = loss.kind == "logistic" and (y.min() == y.max())
    if cols.size and not degenerate:
        # every usable column has sum(z**2) == n, so the least squares slope is
        # z.u / n and the residual sum of squares is |u|^2 - (z.u)^2 / n;
        # minimizing RSS means maximizing |z.u|.  BLAS may round identical
        # columns differently, so scores within TIE_RTOL of the best count as
        # tied and the lowest index wins.
        for _ in range(cfg.m_iter):
            u = loss.negative_gradient(y, f)
            zu = Zu.T @ u
            score = np.abs(zu)
            top = score.max()
            k = int(np.argmax(score >= top * (1.0 - TIE_RTOL)))
            if top == 0.0:
                # gradient orthogonal to every column: no further progress possible
                break
            j = int(cols[k])
            b = zu[k] / n
            step = cfg.kappa * loss.boost_step_scale * b
            std_coef[j] += step
            f += step * Z[:, j]
            trace.append((j, float(step)))

    coef = std_coef / scale
    intercept = offset - float(center @ coef)
    return BoostModel(intercept, coef, offset, center, scale, trace)
