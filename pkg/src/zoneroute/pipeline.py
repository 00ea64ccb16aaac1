"""Two-stage route prediction: order the zones, then the stops inside that order."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import RoutingInstance, Tour, zone_sequence_of
from .exceptions import InvalidInputError
from .perceptron import DEFAULT_STOP_WEIGHTS, DEFAULT_ZONE_WEIGHTS, StructuredPerceptron, predict_tour
from .stops import StopProblem, order_index, order_stops, travel_time_tour
from .transitions import TransitionEstimator
from .tsp import EXACT_CAP, SolveBudget
from .zones import ZoneOrdering, ZoneProblem, build_geometry, order_zones_by_distance


@dataclass(frozen=True)
class RoutePrediction:
    route_id: str
    zone_ordering: ZoneOrdering
    tour: Tour

    def to_dict(self, inst: RoutingInstance) -> dict:
        return {
            "route_id": self.route_id,
            "zones": list(self.zone_ordering.sequence),
            "order": list(self.tour.order),
            "stops": [inst.stops[i].id for i in self.tour.order],
        }


def _zone_index_of(X):
    return getattr(X, "zone_index", None)


def zone_examples(instances, matrix):
    """``(ZoneProblem, true zone tour)`` pairs from routes with an actual sequence."""
    out = []
    for inst in instances:
        u = ZoneProblem.from_geometry(build_geometry(inst), matrix)
        out.append((u, u.tour_of(ZoneOrdering(tuple(zone_sequence_of(inst))))))
    return out


def stop_examples(instances):
    # the stop stage learns against the zone order the driver actually followed
    out = []
    for inst in instances:
        o = order_index(inst, ZoneOrdering(tuple(zone_sequence_of(inst))))
        out.append((StopProblem.from_instance(inst, o), Tour(inst.require_sequence())))
    return out


class TwoStageRouter(BaseEstimator):
    """Predict delivery routes from historical zone preferences.

    ``fit`` estimates the zone transition matrix from the training routes
    and, for each stage listed in ``train_stages``, runs the structured
    perceptron starting from ``zone_weights`` / ``stop_weights``.
    ``predict`` returns one :class:`RoutePrediction` per instance.

    With ``zone_weights=(0, 1)`` and no training this is the pure Markov
    model, with ``(1, 1)`` the Markov plus distance model.
    """

    def __init__(self, v_high=1.0, v_medium=1.0, v_low=1.0, epsilon=1e-6, zone_weights=None, stop_weights=None,
                 train_stages=("zone",), learning_rate=1e-5, epochs=1, max_iter=50, budget_secs=30.0, seed=0,
                 exact_cap=EXACT_CAP):
        self.v_high = v_high
        self.v_medium = v_medium
        self.v_low = v_low
        self.epsilon = epsilon
        self.zone_weights = zone_weights
        self.stop_weights = stop_weights
        self.train_stages = train_stages
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.max_iter = max_iter
        self.budget_secs = budget_secs
        self.seed = seed
        self.exact_cap = exact_cap

    @classmethod
    def from_parts(cls, matrix, zone_weights, stop_weights, **params) -> "TwoStageRouter":
        """A ready-to-predict router from an estimated matrix and fixed weights."""
        router = cls(zone_weights=tuple(zone_weights), stop_weights=tuple(stop_weights), train_stages=(), **params)
        router.matrix_ = matrix
        router.zone_coef_ = np.asarray(zone_weights, dtype=float)
        router.stop_coef_ = np.asarray(stop_weights, dtype=float)
        router.zone_trace_ = router.stop_trace_ = None
        return router

    def _budget(self) -> SolveBudget:
        return SolveBudget(deadline=self.budget_secs, seed=self.seed, max_iter=self.max_iter)

    def _perceptron(self, stage, init):
        return StructuredPerceptron(stage, learning_rate=self.learning_rate, epochs=self.epochs,
                                    init_weights=tuple(init), max_iter=self.max_iter, budget_secs=self.budget_secs,
                                    seed=self.seed, exact_cap=self.exact_cap)

    def fit(self, X, y=None):
        stages = set(self.train_stages or ())
        if not stages <= {"zone", "stop"}:
            raise InvalidInputError(f"unknown stages {sorted(stages - {'zone', 'stop'})}")
        zone_index = _zone_index_of(X)
        X = list(X)
        self.transitions_ = TransitionEstimator(self.v_high, self.v_medium, self.v_low, self.epsilon).fit(
            X, zone_index=zone_index)
        self.matrix_ = self.transitions_.transition_matrix_
        ids = [inst.route_id for inst in X]
        zone_init = self.zone_weights if self.zone_weights is not None else DEFAULT_ZONE_WEIGHTS
        stop_init = self.stop_weights if self.stop_weights is not None else DEFAULT_STOP_WEIGHTS
        self.zone_trace_ = self.stop_trace_ = None
        if "zone" in stages:
            model = self._perceptron("zone", zone_init).fit(*zip(*zone_examples(X, self.matrix_)), ids=ids)
            self.zone_coef_, self.zone_trace_ = model.coef_, model.trace_
        else:
            self.zone_coef_ = np.asarray(zone_init, dtype=float)
        if "stop" in stages:
            model = self._perceptron("stop", stop_init).fit(*zip(*stop_examples(X)), ids=ids)
            self.stop_coef_, self.stop_trace_ = model.coef_, model.trace_
        else:
            self.stop_coef_ = np.asarray(stop_init, dtype=float)
        return self

    def predict_zones(self, X) -> list:
        check_is_fitted(self, "matrix_")
        budget = self._budget()
        out = []
        for inst in X:
            u = ZoneProblem.from_geometry(build_geometry(inst), self.matrix_)
            out.append(u.ordering_of(predict_tour(u, self.zone_coef_, budget, self.exact_cap)))
        return out

    def predict(self, X) -> list:
        X = list(X)
        budget = self._budget()
        out = []
        for inst, ordering in zip(X, self.predict_zones(X)):
            tour = order_stops(inst, order_index(inst, ordering), self.stop_coef_, budget, self.exact_cap)
            out.append(RoutePrediction(inst.route_id, ordering, tour))
        return out


def distance_zone_orderings(X, budget: Optional[SolveBudget] = None, exact_cap: int = EXACT_CAP) -> list:
    budget = budget or SolveBudget()
    return [order_zones_by_distance(build_geometry(inst), budget, exact_cap) for inst in X]


def travel_time_routes(X, budget: Optional[SolveBudget] = None, exact_cap: int = EXACT_CAP) -> list:
    budget = budget or SolveBudget()
    return [travel_time_tour(inst, budget, exact_cap) for inst in X]
