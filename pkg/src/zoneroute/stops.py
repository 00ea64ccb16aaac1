"""Stage 2: ordering stops under zone-order penalties."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import QUALITY_LABELS, RoutingInstance, Tour, as_order, check_weights, zone_sequence_of
from .exceptions import InvalidInputError
from .tsp import EXACT_CAP, SolveBudget, solve
from .zones import ZoneOrdering

REPORT_COLUMNS = ("same", "next", "next2", "next3plus", "prev", "prev2", "prev3plus")


class PenaltyCategory(enum.IntEnum):
    """Relation of ``O_j`` to ``O_i``; the value is the weight index it selects."""

    SAME = 1
    NEXT = 2
    NEXT2 = 3
    PREV = 4
    PREV2 = 5
    FAR = 6


def classify(oi: int, oj: int) -> PenaltyCategory:
    step = oj - oi
    if step == 0:
        return PenaltyCategory.SAME
    if step == 1:
        return PenaltyCategory.NEXT
    if step == 2:
        return PenaltyCategory.NEXT2
    if step == -1:
        return PenaltyCategory.PREV
    if step == -2:
        return PenaltyCategory.PREV2
    return PenaltyCategory.FAR


def report_column(oi: int, oj: int) -> str:
    """Finer split used by :func:`violation_report`: far jumps keep their direction."""
    step = oj - oi
    if step >= 3:
        return "next3plus"
    if step <= -3:
        return "prev3plus"
    return classify(oi, oj).name.lower()


def category_matrix(o) -> np.ndarray:
    """``cat[i, j]`` = weight index (1..6) of the pair ``(O_i, O_j)``."""
    o = np.asarray(o, dtype=int)
    step = o[None, :] - o[:, None]
    cat = np.full(step.shape, int(PenaltyCategory.FAR))
    for s, k in ((0, PenaltyCategory.SAME), (1, PenaltyCategory.NEXT), (2, PenaltyCategory.NEXT2),
                 (-1, PenaltyCategory.PREV), (-2, PenaltyCategory.PREV2)):
        cat[step == s] = int(k)
    return cat


def order_index(inst: RoutingInstance, ordering: ZoneOrdering) -> np.ndarray:
    """Rank of each stop's zone in ``ordering``; the station gets 0."""
    rank = ordering.rank
    try:
        o = np.array([rank[z] for z in inst.stop_zones], dtype=int)
    except KeyError as exc:
        raise InvalidInputError(f"route {inst.route_id!r}: zone {exc.args[0]!r} missing from the zone ordering") from None
    if o[0] != 0:
        raise InvalidInputError(f"route {inst.route_id!r}: zone ordering must start at the station")
    return o


@dataclass(frozen=True)
class StopProblem:
    """Inputs of one stop-level structured prediction example."""

    travel_times: np.ndarray
    o: np.ndarray

    n_weights = 7

    def __post_init__(self):
        t = np.asarray(self.travel_times, dtype=float)
        o = np.asarray(self.o, dtype=int)
        if t.ndim != 2 or t.shape != (len(o), len(o)):
            raise InvalidInputError(f"travel times {t.shape} do not match order index of length {len(o)}")
        object.__setattr__(self, "travel_times", t)
        object.__setattr__(self, "o", o)
        object.__setattr__(self, "_cat", category_matrix(o))

    @classmethod
    def from_instance(cls, inst: RoutingInstance, o) -> "StopProblem":
        return cls(inst.travel_times, o)

    @property
    def size(self) -> int:
        return len(self.o)

    def cost_matrix(self, w) -> np.ndarray:
        w = check_weights(w, 7, "stop weights")
        c = w[0] * self.travel_times + w[self._cat]
        np.fill_diagonal(c, 0.0)
        return c

    def features(self, tour) -> np.ndarray:
        order = np.asarray(as_order(tour))
        if len(order) != self.size:
            raise InvalidInputError(f"tour has {len(order)} nodes, expected {self.size}")
        phi = np.zeros(7)
        if len(order) == 1:
            return phi
        nxt = np.roll(order, -1)
        phi[0] = self.travel_times[order, nxt].sum()
        phi[1:] = np.bincount(self._cat[order, nxt], minlength=7)[1:]
        return phi


def penalty_cost(inst: RoutingInstance, o, w) -> np.ndarray:
    """``w_0 * t_ij`` plus the weight of the pair's penalty category; zero diagonal."""
    return StopProblem.from_instance(inst, o).cost_matrix(w)


def stop_feature_vector(inst: RoutingInstance, o, tour) -> np.ndarray:
    """Total travel time followed by the six category counts, closing arc included."""
    return StopProblem.from_instance(inst, o).features(tour)


def order_stops(inst: RoutingInstance, o, w, budget: SolveBudget = SolveBudget(),
                exact_cap: int = EXACT_CAP) -> Tour:
    if inst.n == 1:
        return Tour((0,), 0.0)
    c = penalty_cost(inst, o, w)
    return solve(c, budget, exact_cap)


def travel_time_tour(inst: RoutingInstance, budget: SolveBudget = SolveBudget(),
                     exact_cap: int = EXACT_CAP) -> Tour:
    """Baseline: plain travel-time TSP, zones ignored."""
    if inst.n == 1:
        return Tour((0,), 0.0)
    return solve(inst.travel_times, budget, exact_cap)


def route_violation_shares(inst: RoutingInstance) -> dict:
    """Percentage of the route's arcs in each report column, against its own zone ordering."""
    ordering = ZoneOrdering(tuple(zone_sequence_of(inst)))
    o = order_index(inst, ordering)
    seq = inst.require_sequence()
    counts = dict.fromkeys(REPORT_COLUMNS, 0)
    n = len(seq)
    if n == 1:
        counts["same"] = 1
    else:
        for k in range(n):
            counts[report_column(o[seq[k]], o[seq[(k + 1) % n]])] += 1
    total = max(n, 1)
    return {col: 100.0 * counts[col] / total for col in REPORT_COLUMNS}


def violation_report(histories: Sequence[RoutingInstance]) -> dict:
    """Mean per-route arc percentages by quality label.

    Returns ``{label: {column: percent}}`` for every label that occurs;
    routes without a label are grouped under ``"unlabeled"``.
    """
    histories = list(histories)
    if not histories:
        raise InvalidInputError("no routes")
    groups: dict = {}
    for inst in histories:
        groups.setdefault(inst.quality or "unlabeled", []).append(route_violation_shares(inst))
    order = [lab for lab in QUALITY_LABELS if lab in groups] + sorted(set(groups) - set(QUALITY_LABELS))
    return {
        label: {col: float(np.mean([row[col] for row in groups[label]])) for col in REPORT_COLUMNS}
        for label in order
    }


def report_to_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("label",) + REPORT_COLUMNS)
    for label, row in report.items():
        writer.writerow([label] + [f"{row[col]:.6f}" for col in REPORT_COLUMNS])
    return buf.getvalue()
