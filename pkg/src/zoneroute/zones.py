"""Stage 1: ordering the zones of an instance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import RoutingInstance, Tour, ZoneIndex, as_order, check_weights
from .exceptions import InvalidInputError
from .transitions import TransitionMatrix, neg_log
from .tsp import EXACT_CAP, SolveBudget, solve, tour_cost

MIN_DISTANCE = 1e-9


def _offdiag_log(a: np.ndarray) -> np.ndarray:
    """``-ln a`` off the diagonal, zero on it."""
    out = np.zeros_like(a, dtype=float)
    off = ~np.eye(a.shape[0], dtype=bool)
    out[off] = -np.log(a[off])
    return out


@dataclass(frozen=True)
class ZoneGeometry:
    """Centroids and distance-derived matrices for the zones of one instance.

    ``zones[0]`` is the station pseudo-zone. ``d`` holds Euclidean
    distances between centroids in degrees and ``d_prime`` the inverted,
    row-normalised distances.
    """

    zones: tuple
    centroids: np.ndarray
    d: np.ndarray
    d_prime: np.ndarray

    @property
    def m(self) -> int:
        return len(self.zones)

    def normalized_distances(self) -> np.ndarray:
        top = self.d.max()
        return self.d / top if top > 0 else self.d.copy()


@dataclass(frozen=True)
class ZoneOrdering:
    """Visit order over zone ids, station pseudo-zone first."""

    sequence: tuple

    def __post_init__(self):
        seq = tuple(self.sequence)
        if len(set(seq)) != len(seq) or not seq:
            raise InvalidInputError("zone ordering must list each zone exactly once")
        object.__setattr__(self, "sequence", seq)

    @property
    def rank(self) -> Mapping[str, int]:
        return {z: k for k, z in enumerate(self.sequence)}

    def to_dict(self) -> dict:
        return {"sequence": list(self.sequence)}


def build_geometry(inst: RoutingInstance, zone_index: Optional[ZoneIndex] = None) -> ZoneGeometry:
    zones = inst.zones_present()
    if zone_index is not None:
        missing = [z for z in zones if z not in zone_index]
        if missing:
            raise InvalidInputError(f"route {inst.route_id!r}: zones {missing} not in zone index")
    coords = inst.coordinates
    members = {z: [] for z in zones}
    for i, z in enumerate(inst.stop_zones):
        members[z].append(i)
    empty = [z for z, idx in members.items() if not idx]
    if empty:
        raise InvalidInputError(f"route {inst.route_id!r}: zones {empty} have no stops")
    centroids = np.array([coords[members[z]].mean(axis=0) for z in zones])
    diff = centroids[:, None, :] - centroids[None, :, :]
    d = np.sqrt((diff ** 2).sum(axis=2))
    return ZoneGeometry(tuple(zones), centroids, d, distance_probabilities(d))


def distance_probabilities(d) -> np.ndarray:
    """Invert off-diagonal distances and normalise each row to sum to one."""
    d = np.asarray(d, dtype=float)
    m = d.shape[0]
    if m == 1:
        return np.ones((1, 1))
    inv = 1.0 / np.maximum(d, MIN_DISTANCE)
    np.fill_diagonal(inv, 0.0)
    return inv / inv.sum(axis=1, keepdims=True)


def _local_preferences(g: ZoneGeometry, p) -> np.ndarray:
    if isinstance(p, TransitionMatrix):
        return p.submatrix(g.zones)
    p = np.asarray(p, dtype=float)
    if p.shape != (g.m, g.m):
        raise InvalidInputError(f"preference matrix shape {p.shape} does not match {g.m} zones")
    return p


@dataclass(frozen=True)
class ZoneProblem:
    """Inputs of one zone-level structured prediction example.

    ``log_d`` and ``log_p`` hold ``-ln d'`` and ``-ln p`` with zero
    diagonals, so the mixed cost is linear in the weights.
    """

    zones: tuple
    log_d: np.ndarray
    log_p: np.ndarray

    n_weights = 2

    @classmethod
    def from_geometry(cls, g: ZoneGeometry, p) -> "ZoneProblem":
        local = _local_preferences(g, p)
        if g.m > 1:
            neg_log(local[~np.eye(g.m, dtype=bool)])
        return cls(g.zones, _offdiag_log(g.d_prime), _offdiag_log(local))

    @property
    def size(self) -> int:
        return len(self.zones)

    def cost_matrix(self, w) -> np.ndarray:
        w = check_weights(w, 2, "zone weights")
        return w[0] * self.log_d + w[1] * self.log_p

    def features(self, tour) -> np.ndarray:
        order = np.asarray(as_order(tour))
        if len(order) != self.size:
            raise InvalidInputError(f"tour has {len(order)} nodes, expected {self.size}")
        if len(order) == 1:
            return np.zeros(2)
        nxt = np.roll(order, -1)
        return np.array([self.log_d[order, nxt].sum(), self.log_p[order, nxt].sum()])

    def tour_of(self, ordering: ZoneOrdering) -> Tour:
        pos = {z: i for i, z in enumerate(self.zones)}
        return Tour([pos[z] for z in ordering.sequence])

    def ordering_of(self, tour) -> ZoneOrdering:
        return ZoneOrdering(tuple(self.zones[i] for i in as_order(tour)))


def mixed_zone_cost(g: ZoneGeometry, p, w) -> np.ndarray:
    """Cost ``-w_d ln d' - w_p ln p`` over the instance's zones; zero diagonal."""
    return ZoneProblem.from_geometry(g, p).cost_matrix(w)


def zone_feature_vector(u: ZoneProblem, tour) -> np.ndarray:
    """``[sum -ln d', sum -ln p]`` over the arcs of ``tour``."""
    return u.features(tour)


def ordering_from_cost(zones: Sequence[str], c, budget: SolveBudget = SolveBudget(),
                       exact_cap: int = EXACT_CAP) -> ZoneOrdering:
    tour = solve(c, budget, exact_cap)
    return ZoneOrdering(tuple(zones[i] for i in tour.order))


def order_zones(inst: RoutingInstance, g: ZoneGeometry, p, w, budget: SolveBudget = SolveBudget(),
                exact_cap: int = EXACT_CAP) -> ZoneOrdering:
    """Solve the zone-level TSP under the mixed cost, rooted at the station."""
    if g.m == 1:
        return ZoneOrdering(g.zones)
    return ordering_from_cost(g.zones, mixed_zone_cost(g, p, w), budget, exact_cap)


def order_zones_by_distance(g: ZoneGeometry, budget: SolveBudget = SolveBudget(),
                            exact_cap: int = EXACT_CAP) -> ZoneOrdering:
    """Baseline: shortest circuit over raw centroid distances."""
    if g.m == 1:
        return ZoneOrdering(g.zones)
    return ordering_from_cost(g.zones, g.d, budget, exact_cap)


def zone_tour_cost(u: ZoneProblem, w, tour) -> float:
    return tour_cost(u.cost_matrix(w), tour)
