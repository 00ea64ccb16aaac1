"""Zone transition probabilities estimated from historical routes."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import QUALITY_LABELS, RoutingInstance, ZoneIndex, zone_sequence_of
from .exceptions import InvalidInputError, MissingLabelError

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class QualityWeights:
    high: float = 1.0
    medium: float = 1.0
    low: float = 1.0

    def __post_init__(self):
        vals = (self.high, self.medium, self.low)
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise InvalidInputError("quality weights must be finite and nonnegative")
        if not any(v > 0 for v in vals):
            raise InvalidInputError("at least one quality weight must be positive")

    @property
    def uniform(self) -> bool:
        return self.high == self.medium == self.low

    def weight_of(self, inst: RoutingInstance) -> float:
        if inst.quality is None:
            if self.uniform:
                return self.high
            raise MissingLabelError(f"route {inst.route_id!r} has no quality label but weights differ by label")
        return getattr(self, inst.quality)

    def as_dict(self) -> dict:
        return {label: getattr(self, label) for label in QUALITY_LABELS}


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic zone-to-zone probabilities over ``zone_index``."""

    zone_index: ZoneIndex
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        m = len(self.zone_index)
        if p.shape != (m, m):
            raise InvalidInputError(f"transition matrix shape {p.shape} does not match {m} zones")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def submatrix(self, zones: Sequence[str], strict: bool = False) -> np.ndarray:
        """Rows and columns for ``zones``, in that order.

        Zones never seen during estimation get the uniform probability
        ``1 / (m - 1)`` on their rows and columns unless ``strict``.
        """
        if strict:
            idx = self.zone_index.indices(zones)
            return self.p[np.ix_(idx, idx)]
        m = len(self.zone_index)
        known = np.array([z in self.zone_index for z in zones])
        idx = np.array([self.zone_index.index_of.get(z, 0) for z in zones], dtype=int)
        sub = self.p[np.ix_(idx, idx)].copy()
        fallback = 1.0 / max(m - 1, 1)
        sub[~known, :] = fallback
        sub[:, ~known] = fallback
        return sub

    def to_dict(self) -> dict:
        return {"zones": list(self.zone_index.zones), "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "TransitionMatrix":
        try:
            return cls(ZoneIndex(tuple(data["zones"])), np.asarray(data["p"], dtype=float))
        except KeyError as exc:
            raise InvalidInputError(f"transition matrix artifact is missing {exc.args[0]!r}") from None

    def dumps(self, **extra) -> str:
        payload = dict(extra)
        payload.update(self.to_dict())
        return json.dumps(payload, sort_keys=True)


def zone_arcs(zone_seq: Sequence[str], closing: bool = True) -> list:
    """Consecutive zone pairs of an ordering, with the return arc if ``closing``."""
    arcs = list(zip(zone_seq[:-1], zone_seq[1:]))
    if closing and len(zone_seq) > 1:
        arcs.append((zone_seq[-1], zone_seq[0]))
    return arcs


def count_transitions(histories: Sequence[RoutingInstance], weights: QualityWeights,
                      zone_index: ZoneIndex, closing: bool = True) -> np.ndarray:
    """Quality-weighted count of observed zone transitions.

    Each route contributes ``v`` (its label's weight) to every transition
    in its extracted zone ordering. The diagonal stays zero.
    """
    m = len(zone_index)
    freq = np.zeros((m, m))
    for inst in histories:
        v = weights.weight_of(inst)
        seq = zone_sequence_of(inst)
        for a, b in zone_arcs(seq, closing):
            if a not in zone_index or b not in zone_index:
                missing = a if a not in zone_index else b
                raise InvalidInputError(f"route {inst.route_id!r}: zone {missing!r} is not in the zone index")
            freq[zone_index.index_of[a], zone_index.index_of[b]] += v
    np.fill_diagonal(freq, 0.0)
    return freq


def normalize_rows(freq, epsilon: float = DEFAULT_EPSILON, zone_index: ZoneIndex = None) -> TransitionMatrix:
    """Row-normalise a frequency matrix into probabilities.

    Rows that were never observed become uniform over the other zones.
    Smoothing then mixes every row with ``epsilon`` mass per entry,
    ``p <- (1 - m * epsilon) * p + epsilon``, so every entry is at least
    ``epsilon`` and rows still sum to one.
    """
    freq = np.asarray(freq, dtype=float)
    if freq.ndim != 2 or freq.shape[0] != freq.shape[1]:
        raise InvalidInputError("frequency matrix must be square")
    m = freq.shape[0]
    if m < 2:
        raise InvalidInputError("need at least two zones to normalise transitions")
    if np.any(freq < 0) or not np.all(np.isfinite(freq)):
        raise InvalidInputError("frequencies must be finite and nonnegative")
    if not 0 <= epsilon * m < 1:
        raise InvalidInputError(f"epsilon={epsilon} too large for {m} zones")
    sums = freq.sum(axis=1, keepdims=True)
    uniform = (1.0 - np.eye(m)) / (m - 1)
    p = np.where(sums > 0, freq / np.where(sums > 0, sums, 1.0), uniform)
    p = (1.0 - m * epsilon) * p + epsilon
    if zone_index is None:
        zone_index = ZoneIndex(tuple(str(i) for i in range(m)))
    return TransitionMatrix(zone_index, p)


def neg_log(p, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Entrywise ``-ln p``; refuses entries below the smoothing floor."""
    if isinstance(p, TransitionMatrix):
        p = p.p
    p = np.asarray(p, dtype=float)
    if np.any(p < epsilon * (1 - 1e-9)):
        raise InvalidInputError("probabilities below the smoothing floor; smooth before taking logs")
    return -np.log(p)


class TransitionEstimator(BaseEstimator):
    """Estimate a zone transition matrix from labelled historical routes.

    Parameters
    ----------
    v_high, v_medium, v_low : float
        Weight of a route's transitions by its quality label.
    epsilon : float
        Probability floor applied to every entry after normalisation.
    count_closing_arc : bool
        Whether the return to the station counts as a transition.

    Attributes
    ----------
    zone_index_ : ZoneIndex
    frequencies_ : ndarray of shape (m, m)
    transition_matrix_ : TransitionMatrix
    """

    def __init__(self, v_high=1.0, v_medium=1.0, v_low=1.0, epsilon=DEFAULT_EPSILON,
                 count_closing_arc=True):
        self.v_high = v_high
        self.v_medium = v_medium
        self.v_low = v_low
        self.epsilon = epsilon
        self.count_closing_arc = count_closing_arc

    def fit(self, X, y=None, zone_index=None):
        histories = list(X)
        if not histories:
            raise InvalidInputError("no routes")
        weights = QualityWeights(self.v_high, self.v_medium, self.v_low)
        self.zone_index_ = zone_index if zone_index is not None else ZoneIndex.from_instances(histories)
        self.frequencies_ = count_transitions(histories, weights, self.zone_index_, self.count_closing_arc)
        self.transition_matrix_ = normalize_rows(self.frequencies_, self.epsilon, self.zone_index_)
        return self

    def transform(self, X):
        """Per-instance transition submatrix over each instance's zones."""
        check_is_fitted(self, "transition_matrix_")
        return [self.transition_matrix_.submatrix(inst.zones_present()) for inst in X]
