"""Route similarity: sequence deviation times ERP per edit."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import QUALITY_LABELS, RoutingInstance, as_order, zone_sequence_of
from .exceptions import InvalidInputError
from .zones import ZoneGeometry, ZoneOrdering, build_geometry

SCORE_COLUMNS = ("route_id", "quality", "sd", "erp_norm", "erp_edits", "score")


def _check_same_items(actual, predicted):
    if len(actual) != len(predicted) or set(actual) != set(predicted) or len(set(actual)) != len(actual):
        raise InvalidInputError("actual and predicted sequences must be permutations of the same items")
    if actual[0] != predicted[0]:
        raise InvalidInputError("both sequences must start at the depot")


def sequence_deviation(actual: Sequence, predicted: Sequence) -> float:
    """Rank disorder of ``predicted`` relative to ``actual``.

    Both sequences start with the depot, which is excluded. With ``c``
    remaining items and ``r`` the position of each item in ``actual``::

        SD = 2 / (c (c - 1)) * sum_i (|r(B[i+1]) - r(B[i])| - 1)

    Fewer than two items leaves nothing to disorder and gives 0.
    """
    _check_same_items(list(actual), list(predicted))
    rank = {s: k for k, s in enumerate(actual[1:], start=1)}
    body = [rank[s] for s in predicted[1:]]
    c = len(body)
    if c < 2:
        return 0.0
    steps = np.abs(np.diff(body)) - 1
    return float(2.0 / (c * (c - 1)) * steps.sum())


def erp(actual: Sequence[int], predicted: Sequence[int], dist, gap: int = 0):
    """Edit distance with real penalty between the non-depot parts of two sequences.

    Items are indices into ``dist``. Substituting ``a`` by ``b`` costs
    ``dist[a, b]``; deleting or inserting ``x`` costs ``dist[x, gap]``.
    Returns ``(cost, edits)`` for the cheapest alignment, where edits
    counts every operation other than matching an item with itself; among
    equally cheap alignments the one with fewest edits wins.
    """
    dist = np.asarray(dist, dtype=float)
    _check_same_items(list(actual), list(predicted))
    a, b = list(actual[1:]), list(predicted[1:])
    na, nb = len(a), len(b)
    cost = np.zeros((na + 1, nb + 1))
    edits = np.zeros((na + 1, nb + 1), dtype=int)
    for i in range(1, na + 1):
        cost[i, 0] = cost[i - 1, 0] + dist[a[i - 1], gap]
        edits[i, 0] = i
    for j in range(1, nb + 1):
        cost[0, j] = cost[0, j - 1] + dist[b[j - 1], gap]
        edits[0, j] = j
    for i in range(1, na + 1):
        x = a[i - 1]
        for j in range(1, nb + 1):
            y = b[j - 1]
            cands = (
                (cost[i - 1, j - 1] + dist[x, y], edits[i - 1, j - 1] + (x != y)),
                (cost[i - 1, j] + dist[x, gap], edits[i - 1, j] + 1),
                (cost[i, j - 1] + dist[y, gap], edits[i, j - 1] + 1),
            )
            cost[i, j], edits[i, j] = min(cands)
    return float(cost[na, nb]), int(edits[na, nb])


@dataclass(frozen=True)
class ScoreRow:
    route_id: str
    quality: Optional[str]
    sd: float
    erp_norm: float
    erp_edits: int
    score: float


def score_sequences(actual: Sequence[int], predicted: Sequence[int], dist, gap: int = 0,
                    route_id: str = "", quality: Optional[str] = None) -> ScoreRow:
    """Combine deviation and ERP: ``sd * erp_norm / erp_edits`` (0 without edits)."""
    sd = sequence_deviation(actual, predicted)
    cost, edits = erp(actual, predicted, dist, gap)
    value = sd * cost / edits if edits > 0 else 0.0
    return ScoreRow(route_id, quality, sd, cost, edits, value)


def normalized_travel_times(inst: RoutingInstance) -> np.ndarray:
    t = inst.travel_times
    top = t.max()
    return t / top if top > 0 else t.copy()


def score(inst: RoutingInstance, predicted) -> ScoreRow:
    """Stop-level score of a predicted tour against the instance's actual route."""
    actual = inst.require_sequence()
    order = as_order(predicted)
    if len(order) != inst.n:
        raise InvalidInputError(f"route {inst.route_id!r}: predicted tour has {len(order)} stops, expected {inst.n}")
    return score_sequences(actual, order, normalized_travel_times(inst), 0, inst.route_id, inst.quality)


def zone_score(inst: RoutingInstance, ordering: ZoneOrdering, geometry: Optional[ZoneGeometry] = None,
               unit_distances: bool = False) -> ScoreRow:
    """Zone-level score of a predicted zone ordering.

    Element distances are centroid distances divided by their maximum,
    or 1 between distinct zones when ``unit_distances`` is set.
    """
    g = geometry if geometry is not None else build_geometry(inst)
    pos = {z: i for i, z in enumerate(g.zones)}
    actual = [pos[z] for z in zone_sequence_of(inst)]
    try:
        predicted = [pos[z] for z in ordering.sequence]
    except KeyError as exc:
        raise InvalidInputError(f"route {inst.route_id!r}: ordering has unknown zone {exc.args[0]!r}") from None
    if unit_distances:
        dist = 1.0 - np.eye(g.m)
    else:
        dist = g.normalized_distances()
    return score_sequences(actual, predicted, dist, 0, inst.route_id, inst.quality)


@dataclass
class ScoreReport:
    rows: list

    def mean(self, quality: Optional[str] = None) -> float:
        vals = [r.score for r in self.rows if quality is None or r.quality == quality]
        return float(np.mean(vals)) if vals else float("nan")

    def summary(self) -> dict:
        out = {"all": {"count": len(self.rows), "mean_score": self.mean()}}
        for label in QUALITY_LABELS:
            n = sum(r.quality == label for r in self.rows)
            if n:
                out[label] = {"count": n, "mean_score": self.mean(label)}
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for r in self.rows:
            writer.writerow([r.route_id, r.quality or "", f"{r.sd:.10g}", f"{r.erp_norm:.10g}",
                             r.erp_edits, f"{r.score:.10g}"])
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2)

    def histogram_csv(self, bins: int = 20) -> str:
        scores = np.array([r.score for r in self.rows])
        top = max(1.0, float(scores.max())) if len(scores) else 1.0
        counts, edges = np.histogram(scores, bins=bins, range=(0.0, top))
        lines = ["bin_start,bin_end,count"]
        lines += [f"{edges[k]:.6g},{edges[k + 1]:.6g},{counts[k]}" for k in range(bins)]
        return "\n".join(lines) + "\n"

    def as_dicts(self) -> list:
        return [asdict(r) for r in self.rows]
