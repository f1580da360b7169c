"""Loss functions used by boosting, refitting and evaluation.

``f`` is always the linear predictor: the fitted mean for squared loss and
the log-odds for logistic loss.
"""

from __future__ import annotations

import numpy as np

# offset used when the training labels are all 0 or all 1
LOGIT_CLIP = 15.0


class SquaredLoss:
    kind = "squared"
    boost_step_scale = 1.0

    def evaluate(self, y, f):
        return (np.asarray(y) - np.asarray(f)) ** 2

    def negative_gradient(self, y, f):
        # gradient of (y - f)**2 / 2; the factor 2 would only rescale the step size
        return np.asarray(y) - np.asarray(f)

    def offset(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if y.size and y.min() == y.max():
            return float(y[0])
        return float(np.mean(y))

    def __repr__(self) -> str:
        return "SquaredLoss()"


class LogisticLoss:
    """Binomial deviance ``log(1 + exp(f)) - y * f`` with ``y`` in {0, 1}.

    ``boost_step_scale`` makes a boosting step size ``kappa`` mean what it
    means for mboost's ``Binomial()`` family, which works on half the
    log-odds with a base-2 loss: its update ``2 * kappa * (2 / ln 2) * b``
    in log-odds equals ours with ``kappa * 4 / ln 2``.
    """

    kind = "logistic"
    boost_step_scale = 4.0 / np.log(2.0)

    def evaluate(self, y, f):
        f = np.asarray(f, dtype=float)
        return np.logaddexp(0.0, f) - np.asarray(y) * f

    def negative_gradient(self, y, f):
        return np.asarray(y) - sigmoid(f)

    def offset(self, y) -> float:
        ybar = float(np.mean(y))
        if ybar <= 0.0:
            return -LOGIT_CLIP
        if ybar >= 1.0:
            return LOGIT_CLIP
        return float(np.log(ybar / (1.0 - ybar)))

    def __repr__(self) -> str:
        return "LogisticLoss()"


def sigmoid(f):
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    pos = f >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-f[pos]))
    ef = np.exp(f[~pos])
    out[~pos] = ef / (1.0 + ef)
    return out


SQUARED = SquaredLoss()
LOGISTIC = LogisticLoss()


def get_loss(kind: str):
    """Loss object by name; accepts task names as aliases."""
    if kind in ("squared", "regression", "l2"):
        return SQUARED
    if kind in ("logistic", "classification", "binomial"):
        return LOGISTIC
    raise ValueError(f"unknown loss {kind!r}")
