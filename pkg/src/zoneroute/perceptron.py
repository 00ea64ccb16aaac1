"""Structured perceptron with a TSP solver as the inference step.

Inputs ``u`` are any objects exposing ``cost_matrix(w)``, ``features(tour)``
and ``n_weights`` (see :class:`~zoneroute.zones.ZoneProblem` and
:class:`~zoneroute.stops.StopProblem`). Features are nonnegative costs and
inference is ``argmin_x w . features(u, x)``, i.e. a TSP over
``cost_matrix(w)``. A mistake moves the weights towards making the
predicted tour more expensive than the true one::

    w <- w + lr * (features(u, predicted) - features(u, true))
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import Tour, check_weights
from .exceptions import InvalidInputError, ZoneRouteError
from .tsp import EXACT_CAP, SolveBudget, solve

logger = logging.getLogger(__name__)

DEFAULT_ZONE_WEIGHTS = (1.0, 1.0)
DEFAULT_STOP_WEIGHTS = (2.0, 1.0, 2.0, 4.0, 2.0, 4.0, 6.0)
STAGES = {"zone": DEFAULT_ZONE_WEIGHTS, "stop": DEFAULT_STOP_WEIGHTS}


class OracleError(ZoneRouteError, RuntimeError):
    """The TSP solver failed inside the training loop."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-5
    epochs: int = 1
    budget: SolveBudget = SolveBudget(max_iter=50)
    init_weights: Optional[tuple] = None
    shuffle: bool = False
    seed: int = 0
    exact_cap: int = EXACT_CAP

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInputError("learning rate must be positive")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise InvalidInputError("epochs must be a positive integer")


@dataclass
class TrainTrace:
    """Weights before training and after every epoch, with per-epoch statistics."""

    weights: list = field(default_factory=list)
    updates: list = field(default_factory=list)
    gap_norms: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"weights": [list(map(float, w)) for w in self.weights],
                "updates": list(self.updates), "gap_norms": list(self.gap_norms)}

    @classmethod
    def from_dict(cls, data: dict) -> "TrainTrace":
        return cls([list(w) for w in data["weights"]], list(data["updates"]), list(data["gap_norms"]))


def predict_tour(u, w, budget: SolveBudget, exact_cap: int = EXACT_CAP) -> Tour:
    if u.size == 1:
        return Tour((0,), 0.0)
    return solve(u.cost_matrix(w), budget, exact_cap)


def perceptron_step(w, phi_pred, phi_true, learning_rate):
    """One update in the cost-minimisation convention."""
    return w + learning_rate * (np.asarray(phi_pred) - np.asarray(phi_true))


def train(data: Sequence, cfg: TrainConfig, stage: str, ids: Optional[Sequence] = None):
    """Run the structured perceptron over ``(u, true_tour)`` pairs.

    Returns ``(weights, trace)``. Examples whose predicted tour has the same
    arc set as the true tour leave the weights untouched.
    """
    if stage not in STAGES:
        raise InvalidInputError(f"stage must be one of {sorted(STAGES)}, got {stage!r}")
    length = len(STAGES[stage])
    init = cfg.init_weights if cfg.init_weights is not None else STAGES[stage]
    w = check_weights(init, length, f"{stage} weights")
    data = list(data)
    ids = list(ids) if ids is not None else list(range(len(data)))
    trace = TrainTrace(weights=[w.tolist()])
    rng = np.random.default_rng(cfg.seed)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(data)) if cfg.shuffle else np.arange(len(data))
        updates = 0
        gaps = []
        for k in order:
            u, x = data[k]
            true = x if isinstance(x, Tour) else Tour(x)
            if u.n_weights != length:
                raise InvalidInputError(f"example {ids[k]!r} has {u.n_weights} features, stage {stage!r} needs {length}")
            try:
                pred = predict_tour(u, w, cfg.budget, cfg.exact_cap)
            except Exception as exc:
                raise OracleError(f"oracle failed on example {ids[k]!r} in epoch {epoch}: {exc}") from exc
            if pred.same_arcs(true):
                gaps.append(0.0)
                continue
            gap = u.features(pred) - u.features(true)
            gaps.append(float(np.linalg.norm(gap)))
            w = perceptron_step(w, u.features(pred), u.features(true), cfg.learning_rate)
            updates += 1
        trace.weights.append(w.tolist())
        trace.updates.append(updates)
        trace.gap_norms.append(float(np.mean(gaps)) if gaps else 0.0)
        logger.info("epoch %d: %d updates, weights %s", epoch, updates, np.round(w, 6).tolist())
    return w, trace


class StructuredPerceptron(BaseEstimator):
    """Learn linear cost weights whose TSP solutions reproduce observed tours.

    Parameters
    ----------
    stage : {"zone", "stop"}
        Selects the weight length (2 or 7) and the default initial weights.
    learning_rate : float, default=1e-5
    epochs : int, default=1
    init_weights : sequence of float, optional
    max_iter : int or None, default=50
        Perturbation rounds per anytime solve. ``None`` switches the solver
        to the wall-clock ``budget_secs`` and gives up determinism.
    budget_secs : float, default=30.0
    seed : int, default=0
    shuffle : bool, default=False
    exact_cap : int, default=13
        Instances with at most this many nodes are solved exactly.

    Attributes
    ----------
    coef_ : ndarray
    trace_ : TrainTrace
    n_updates_ : int
    """

    def __init__(self, stage="zone", learning_rate=1e-5, epochs=1, init_weights=None, max_iter=50,
                 budget_secs=30.0, seed=0, shuffle=False, exact_cap=EXACT_CAP):
        self.stage = stage
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.init_weights = init_weights
        self.max_iter = max_iter
        self.budget_secs = budget_secs
        self.seed = seed
        self.shuffle = shuffle
        self.exact_cap = exact_cap

    def _budget(self) -> SolveBudget:
        return SolveBudget(deadline=self.budget_secs, seed=self.seed, max_iter=self.max_iter)

    def _config(self) -> TrainConfig:
        init = None if self.init_weights is None else tuple(self.init_weights)
        return TrainConfig(self.learning_rate, self.epochs, self._budget(), init, self.shuffle,
                           self.seed, self.exact_cap)

    def fit(self, X, y, ids=None):
        X, y = list(X), list(y)
        if len(X) != len(y):
            raise InvalidInputError(f"{len(X)} inputs but {len(y)} tours")
        self.coef_, self.trace_ = train(list(zip(X, y)), self._config(), self.stage, ids)
        self.n_updates_ = int(sum(self.trace_.updates))
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        budget = self._budget()
        return [predict_tour(u, self.coef_, budget, self.exact_cap) for u in X]

    def match_rate(self, X, y) -> float:
        """Fraction of inputs whose predicted tour has exactly the true arc set."""
        preds = self.predict(X)
        hits = [p.same_arcs(t if isinstance(t, Tour) else Tour(t)) for p, t in zip(preds, y)]
        return float(np.mean(hits)) if hits else 0.0
