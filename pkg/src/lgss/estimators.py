"""Unpenalized refits on a reduced predictor set and out-of-sample losses."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .boosting import BoostConfig, fit_boost
from .errors import UnderdeterminedError
from .losses import SQUARED, get_loss, sigmoid

log = logging.getLogger(__name__)

NEWTON_MAX_ITER = 100
NEWTON_TOL = 1e-8
DIVERGENCE_BOUND = 1e4


@dataclass
class FittedSubmodel:
    support: np.ndarray
    intercept: float
    coef: np.ndarray
    converged: bool = True

    def __post_init__(self) -> None:
        self.support = np.asarray(self.support, dtype=int)
        self.coef = np.asarray(self.coef, dtype=float)
        if self.coef.shape != self.support.shape:
            raise ValueError("coef and support lengths differ")

    def predict(self, X) -> np.ndarray:
        """Linear predictor (mean or log-odds) for the rows of the full design ``X``."""
        X = np.asarray(X, dtype=float)
        return self.intercept + X[:, self.support] @ self.coef


def _as_support(support) -> np.ndarray:
    s = np.unique(np.asarray(support, dtype=int))
    return s


def _centered_qr(Xs: np.ndarray):
    center = Xs.mean(axis=0)
    Xc = Xs - center
    Q, R = np.linalg.qr(Xc)
    d = np.abs(np.diag(R))
    tol = max(Xc.shape) * np.finfo(float).eps * max(d.max(initial=0.0), np.abs(Xs).max(initial=0.0), 1.0)
    if np.any(d <= tol):
        raise UnderdeterminedError("reduced design is rank deficient")
    return center, Xc, Q, R


def fit_reduced(X, y, support, loss=SQUARED) -> FittedSubmodel:
    """Fit intercept plus the ``support`` columns of ``X`` without penalty.

    Squared loss gives ordinary least squares, logistic loss the maximum
    likelihood estimate via Newton steps with step halving.  Raises
    :class:`UnderdeterminedError` when the reduced design has at least as
    many predictors as rows or is rank deficient.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(loss, str):
        loss = get_loss(loss)
    support = _as_support(support)
    n = X.shape[0]
    if n < 1:
        raise ValueError("no rows to fit")
    k = support.size
    if k == 0:
        converged = not (loss.kind == "logistic" and y.min() == y.max())
        return FittedSubmodel(support, loss.offset(y), np.empty(0), converged)
    if k >= n:
        raise UnderdeterminedError(f"{k} predictors for {n} rows")
    center, Xc, Q, R = _centered_qr(X[:, support])

    if loss.kind == "squared":
        ybar = float(y.mean())
        coef = np.linalg.solve(R, Q.T @ (y - ybar))
        return FittedSubmodel(support, ybar - float(center @ coef), coef)

    return _fit_logistic(Xc, y, support, center)


def _mean_deviance(y, eta) -> float:
    return float(np.mean(np.logaddexp(0.0, eta) - y * eta))


def _fit_logistic(Xc, y, support, center) -> FittedSubmodel:
    n, k = Xc.shape
    A = np.hstack([np.ones((n, 1)), Xc])
    b = np.zeros(k + 1)
    ybar = float(y.mean())
    if 0.0 < ybar < 1.0:
        b[0] = np.log(ybar / (1.0 - ybar))
    eta = A @ b
    dev = _mean_deviance(y, eta)
    converged = False
    for _ in range(NEWTON_MAX_ITER):
        mu = sigmoid(eta)
        grad = A.T @ (y - mu) / n
        if np.linalg.norm(grad) <= NEWTON_TOL:
            converged = True
            break
        w = mu * (1.0 - mu)
        H = (A * w[:, None]).T @ A / n
        try:
            delta = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        for _ in range(40):
            cand = b + t * delta
            cand_eta = A @ cand
            cand_dev = _mean_deviance(y, cand_eta)
            if cand_dev <= dev + 1e-15 * abs(dev):
                break
            t *= 0.5
        else:
            # no descent possible at machine precision
            mu = sigmoid(eta)
            converged = bool(np.linalg.norm(A.T @ (y - mu) / n) <= 1e-6)
            break
        b, eta, dev = cand, cand_eta, cand_dev
        if np.max(np.abs(b)) > DIVERGENCE_BOUND:
            log.debug("logistic fit diverging on support %s", support.tolist())
            break
    coef = b[1:]
    intercept = float(b[0] - center @ coef)
    return FittedSubmodel(support, intercept, coef, converged)


def fit_with_fallback(X, y, support, loss=SQUARED, boost: BoostConfig = BoostConfig()) -> FittedSubmodel:
    """:func:`fit_reduced`, re-running boosting on the reduced columns if needed.

    When the reduced problem is underdetermined the base selection algorithm
    is applied again to the support columns only, and the refit is done on
    the variables it keeps.  The returned ``support`` may therefore be a
    strict subset of the requested one.
    """
    X = np.asarray(X, dtype=float)
    support = _as_support(support)
    try:
        return fit_reduced(X, y, support, loss)
    except UnderdeterminedError:
        if isinstance(loss, str):
            loss = get_loss(loss)
        model = fit_boost(X[:, support], y, loss, boost)
        reduced = support[model.selected]
        log.debug("underdetermined refit: %d -> %d predictors", support.size, reduced.size)
        return fit_reduced(X, y, reduced, loss)


def evaluate_loss(model: FittedSubmodel, X, y, loss=SQUARED) -> float:
    """Mean per-row loss of ``model`` on ``(X, y)``."""
    if isinstance(loss, str):
        loss = get_loss(loss)
    return float(np.mean(loss.evaluate(np.asarray(y, dtype=float), model.predict(X))))
