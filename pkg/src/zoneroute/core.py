"""Domain types: stops, routing instances, zone indices and tours."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .exceptions import InvalidInputError, MissingLabelError

QUALITY_LABELS = ("high", "medium", "low")
STATION_PREFIX = "station:"


def station_zone_id(station_id: str) -> str:
    """Return the pseudo-zone id that represents a station."""
    return STATION_PREFIX + station_id


def is_station_zone(zone_id: str) -> bool:
    return zone_id.startswith(STATION_PREFIX)


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Stop:
    id: str
    lat: float
    lng: float
    zone_id: str

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise InvalidInputError("stop id must be a nonempty string")
        if not isinstance(self.zone_id, str) or not self.zone_id:
            raise InvalidInputError(f"stop {self.id!r} has an empty zone_id")
        if not (np.isfinite(self.lat) and np.isfinite(self.lng)):
            raise InvalidInputError(f"stop {self.id!r} has non-finite coordinates")


@dataclass(frozen=True)
class RoutingInstance:
    """One day's routing problem.

    ``stops[0]`` is the station. Its zone is always the station
    pseudo-zone, whatever zone label the caller passed for it.
    ``travel_times[i, j]`` is the travel time in seconds from stop ``i``
    to stop ``j`` and may be asymmetric.
    """

    route_id: str
    station_id: str
    stops: tuple
    travel_times: np.ndarray
    actual_sequence: Optional[tuple] = None
    quality: Optional[str] = None

    def __post_init__(self):
        if not self.route_id:
            raise InvalidInputError("route_id must be nonempty")
        if not self.station_id:
            raise InvalidInputError(f"route {self.route_id!r}: station_id must be nonempty")
        stops = tuple(self.stops)
        if not stops:
            raise InvalidInputError(f"route {self.route_id!r}: no stops (the station is required)")
        depot = stops[0]
        station_zone = station_zone_id(self.station_id)
        if depot.zone_id != station_zone:
            depot = Stop(depot.id, depot.lat, depot.lng, station_zone)
        for s in stops[1:]:
            if is_station_zone(s.zone_id):
                raise InvalidInputError(
                    f"route {self.route_id!r}: stop {s.id!r} uses reserved zone id {s.zone_id!r}"
                )
        stops = (depot,) + stops[1:]
        ids = [s.id for s in stops]
        if len(set(ids)) != len(ids):
            raise InvalidInputError(f"route {self.route_id!r}: duplicate stop ids")
        object.__setattr__(self, "stops", stops)

        n = len(stops)
        t = np.array(self.travel_times, dtype=float)
        if t.shape != (n, n):
            raise InvalidInputError(
                f"route {self.route_id!r}: travel_times has shape {t.shape}, expected {(n, n)}"
            )
        if not np.all(np.isfinite(t)):
            raise InvalidInputError(f"route {self.route_id!r}: travel_times contains non-finite values")
        if np.any(t < 0):
            raise InvalidInputError(f"route {self.route_id!r}: travel_times contains negative values")
        if np.any(np.diag(t) != 0):
            raise InvalidInputError(f"route {self.route_id!r}: travel_times diagonal must be zero")
        t.setflags(write=False)
        object.__setattr__(self, "travel_times", t)

        if self.actual_sequence is not None:
            seq = tuple(int(i) for i in self.actual_sequence)
            if sorted(seq) != list(range(n)) or seq[0] != 0:
                raise InvalidInputError(
                    f"route {self.route_id!r}: actual_sequence must be a permutation of 0..{n - 1} starting at 0"
                )
            object.__setattr__(self, "actual_sequence", seq)
        if self.quality is not None and self.quality not in QUALITY_LABELS:
            raise InvalidInputError(
                f"route {self.route_id!r}: quality {self.quality!r} not in {QUALITY_LABELS}"
            )

    @property
    def n(self) -> int:
        return len(self.stops)

    @property
    def station_zone(self) -> str:
        return station_zone_id(self.station_id)

    @property
    def stop_zones(self) -> list:
        return [s.zone_id for s in self.stops]

    @property
    def coordinates(self) -> np.ndarray:
        """``(n, 2)`` array of ``(lng, lat)`` pairs."""
        return np.array([(s.lng, s.lat) for s in self.stops], dtype=float)

    def zones_present(self) -> list:
        """Zones visited by this instance, station pseudo-zone first, rest sorted."""
        others = sorted({s.zone_id for s in self.stops[1:]})
        return [self.station_zone] + others

    def require_sequence(self) -> tuple:
        if self.actual_sequence is None:
            raise MissingLabelError(f"route {self.route_id!r} has no actual_sequence")
        return self.actual_sequence


@dataclass(frozen=True)
class ZoneIndex:
    """Bijection between zone ids and dense indices ``0..m-1``."""

    zones: tuple
    index_of: Mapping = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        zones = tuple(self.zones)
        if not zones:
            raise InvalidInputError("a zone index needs at least one zone")
        if len(set(zones)) != len(zones):
            raise InvalidInputError("duplicate zone ids in zone index")
        object.__setattr__(self, "zones", zones)
        object.__setattr__(self, "index_of", {z: i for i, z in enumerate(zones)})

    @classmethod
    def from_instances(cls, instances: Iterable[RoutingInstance]) -> "ZoneIndex":
        """Station pseudo-zones first (sorted), then all other zones sorted."""
        stations, others = set(), set()
        for inst in instances:
            stations.add(inst.station_zone)
            others.update(s.zone_id for s in inst.stops[1:])
        return cls(tuple(sorted(stations)) + tuple(sorted(others)))

    def __len__(self):
        return len(self.zones)

    def __contains__(self, zone_id):
        return zone_id in self.index_of

    def indices(self, zone_ids: Iterable[str]) -> np.ndarray:
        try:
            return np.array([self.index_of[z] for z in zone_ids], dtype=int)
        except KeyError as exc:
            raise InvalidInputError(f"unknown zone id {exc.args[0]!r}") from None


@dataclass(frozen=True)
class Tour:
    """A depot-rooted circuit: ``order[0] == 0`` and the last node returns to it."""

    order: tuple
    cost: float = 0.0

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if not order or order[0] != 0 or sorted(order) != list(range(len(order))):
            raise InvalidInputError(f"tour order {order} is not a permutation starting at 0")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "cost", float(self.cost))

    def __len__(self):
        return len(self.order)

    def arcs(self) -> list:
        """Consecutive ``(i, j)`` pairs including the closing arc."""
        o = self.order
        return [(o[k], o[(k + 1) % len(o)]) for k in range(len(o))]

    def same_arcs(self, other: "Tour") -> bool:
        return set(self.arcs()) == set(other.arcs())


def as_order(tour) -> tuple:
    """Accept a ``Tour`` or a plain sequence of node indices."""
    if isinstance(tour, Tour):
        return tour.order
    return Tour(tour).order


def tour_to_adjacency(tour, n: int) -> np.ndarray:
    """Binary ``n x n`` matrix with ``a[i, j] = 1`` iff ``j`` follows ``i``.

    The closing arc from the last node back to the depot is included, so
    every row and every column holds exactly one 1. A single-node tour is a
    self-loop ``a[0, 0] = 1``.
    """
    order = as_order(tour)
    if len(order) != n:
        raise InvalidInputError(f"tour has {len(order)} nodes, expected {n}")
    a = np.zeros((n, n), dtype=int)
    src = np.array(order)
    a[src, np.roll(src, -1)] = 1
    return a


def zone_sequence_of(inst: RoutingInstance) -> list:
    """Zone ordering extracted from the instance's actual route.

    Consecutive repeats collapse, and a zone that is re-entered after
    leaving keeps its first-visit position.
    """
    seq = inst.require_sequence()
    zones = inst.stop_zones
    seen = set()
    out = []
    for i in seq:
        z = zones[i]
        if z not in seen:
            seen.add(z)
            out.append(z)
    return out


def check_weights(w, length: int, name: str = "weights") -> np.ndarray:
    """Validate a weight vector of fixed length; returns a float copy."""
    arr = np.array(w, dtype=float).reshape(-1)
    if arr.shape != (length,):
        raise InvalidInputError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    return arr


def check_square(c, name: str = "cost matrix") -> np.ndarray:
    arr = np.asarray(c, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a nonempty square matrix, got shape {arr.shape}")
    return arr


def order_to_ids(inst: RoutingInstance, order: Sequence[int]) -> list:
    return [inst.stops[i].id for i in order]
