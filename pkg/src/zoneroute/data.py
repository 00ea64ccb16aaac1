"""Corpus I/O, stratified splitting and a synthetic route generator.

Corpus files are JSON Lines, one routing instance per line::

    {"route_id": "r0001",
     "station_id": "S1",
     "stops": [{"id": "depot", "lat": 47.6, "lng": -122.3, "zone_id": null},
               {"id": "a", "lat": 47.61, "lng": -122.31, "zone_id": "z0-1"}, ...],
     "travel_times": [[0, 12.5, ...], ...],
     "actual_sequence": [0, 3, 1, 2],
     "quality": "high"}

``stops[0]`` is the station; its ``zone_id`` may be null or
``"station:<station_id>"``. ``travel_times`` is row-major seconds.
``actual_sequence`` (stop indices, starting at 0) and ``quality``
(``high``/``medium``/``low``) are optional and may be null.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import QUALITY_LABELS, RoutingInstance, Stop, ZoneIndex, station_zone_id
from .exceptions import CorpusFormatError, InvalidInputError, MissingLabelError
from .stops import order_index, penalty_cost
from .tsp import SolveBudget, solve, solve_exact
from .zones import ZoneOrdering, build_geometry

REQUIRED_FIELDS = ("route_id", "station_id", "stops", "travel_times")


@dataclass(frozen=True)
class Corpus:
    instances: tuple
    zone_index: ZoneIndex
    provenance: str = ""

    def __post_init__(self):
        instances = tuple(self.instances)
        ids = [inst.route_id for inst in instances]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise InvalidInputError(f"duplicate route ids: {dupes}")
        for inst in instances:
            for z in inst.stop_zones:
                if z not in self.zone_index:
                    raise InvalidInputError(f"route {inst.route_id!r}: zone {z!r} missing from zone index")
        object.__setattr__(self, "instances", instances)

    @classmethod
    def from_instances(cls, instances: Iterable[RoutingInstance], provenance: str = "") -> "Corpus":
        instances = tuple(instances)
        return cls(instances, ZoneIndex.from_instances(instances), provenance)

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def by_id(self) -> dict:
        return {inst.route_id: inst for inst in self.instances}


def instance_to_dict(inst: RoutingInstance) -> dict:
    stops = [{"id": s.id, "lat": s.lat, "lng": s.lng, "zone_id": s.zone_id} for s in inst.stops]
    stops[0]["zone_id"] = None
    return {
        "route_id": inst.route_id,
        "station_id": inst.station_id,
        "stops": stops,
        "travel_times": inst.travel_times.tolist(),
        "actual_sequence": list(inst.actual_sequence) if inst.actual_sequence is not None else None,
        "quality": inst.quality,
    }


def instance_from_dict(data: dict, line_no: Optional[int] = None) -> RoutingInstance:
    if not isinstance(data, dict):
        raise CorpusFormatError(f"line {line_no}: expected a JSON object")
    route_id = data.get("route_id")
    for name in REQUIRED_FIELDS:
        if name not in data or data[name] is None:
            raise CorpusFormatError("missing required field", route_id, name)
    if not isinstance(route_id, str) or not route_id:
        raise CorpusFormatError("must be a nonempty string", route_id, "route_id")
    station_id = data["station_id"]
    if not isinstance(station_id, str) or not station_id:
        raise CorpusFormatError("must be a nonempty string", route_id, "station_id")
    raw_stops = data["stops"]
    if not isinstance(raw_stops, list) or not raw_stops:
        raise CorpusFormatError("must be a nonempty list", route_id, "stops")
    stops = []
    for k, s in enumerate(raw_stops):
        if not isinstance(s, dict):
            raise CorpusFormatError(f"stop {k} is not an object", route_id, "stops")
        zone = s.get("zone_id")
        if k == 0:
            if zone not in (None, station_zone_id(station_id)):
                raise CorpusFormatError("station zone_id must be null or the station pseudo-zone",
                                        route_id, "stops[0].zone_id")
            zone = station_zone_id(station_id)
        try:
            stops.append(Stop(str(s["id"]), float(s["lat"]), float(s["lng"]), zone))
        except KeyError as exc:
            raise CorpusFormatError(f"stop {k} lacks {exc.args[0]!r}", route_id, "stops") from None
        except (TypeError, ValueError) as exc:
            raise CorpusFormatError(f"stop {k}: {exc}", route_id, "stops") from None
    try:
        travel = np.array(data["travel_times"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise CorpusFormatError(f"not a numeric matrix ({exc})", route_id, "travel_times") from None
    if travel.shape != (len(stops), len(stops)):
        raise CorpusFormatError(f"shape {travel.shape} does not match {len(stops)} stops", route_id, "travel_times")
    seq = data.get("actual_sequence")
    if seq is not None and (not isinstance(seq, list) or not all(isinstance(i, int) for i in seq)):
        raise CorpusFormatError("must be a list of integers", route_id, "actual_sequence")
    quality = data.get("quality")
    if quality is not None and quality not in QUALITY_LABELS:
        raise CorpusFormatError(f"must be one of {QUALITY_LABELS}", route_id, "quality")
    try:
        return RoutingInstance(route_id, station_id, tuple(stops), travel, tuple(seq) if seq is not None else None,
                               quality)
    except InvalidInputError as exc:
        raise CorpusFormatError(str(exc), route_id) from None


def dumps_corpus(corpus: Iterable[RoutingInstance]) -> str:
    return "".join(json.dumps(instance_to_dict(inst), sort_keys=True) + "\n" for inst in corpus)


def save_corpus(corpus: Iterable[RoutingInstance], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_corpus(corpus))


def loads_corpus(text: str, provenance: str = "") -> Corpus:
    instances = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"line {line_no}: invalid JSON ({exc.msg})") from None
        instances.append(instance_from_dict(data, line_no))
    if not instances:
        raise InvalidInputError("no routes")
    try:
        return Corpus.from_instances(instances, provenance)
    except InvalidInputError as exc:
        raise CorpusFormatError(str(exc)) from None


def load_corpus(path) -> Corpus:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CorpusFormatError(f"cannot read {path}: {exc.strerror}") from None
    return loads_corpus(text, str(path))


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise InvalidInputError("test_fraction must lie in (0, 1)")


def stratified_split(corpus: Corpus, spec: SplitSpec = SplitSpec()):
    """Split each quality label independently.

    A label with ``k`` routes sends ``floor(k * test_fraction + 0.5)`` of
    them, chosen by a seeded shuffle, to the test side. Both halves keep
    the corpus order.
    """
    unlabeled = [inst.route_id for inst in corpus if inst.quality is None]
    if unlabeled:
        raise MissingLabelError(f"routes without quality label: {unlabeled}")
    rng = np.random.default_rng(spec.seed)
    test_idx = set()
    for label in QUALITY_LABELS:
        idx = [k for k, inst in enumerate(corpus.instances) if inst.quality == label]
        if not idx:
            continue
        n_test = int(math.floor(len(idx) * spec.test_fraction + 0.5))
        perm = rng.permutation(len(idx))
        test_idx.update(idx[p] for p in perm[:n_test])
    train = [inst for k, inst in enumerate(corpus.instances) if k not in test_idx]
    test = [inst for k, inst in enumerate(corpus.instances) if k in test_idx]
    return (Corpus(tuple(train), corpus.zone_index, corpus.provenance),
            Corpus(tuple(test), corpus.zone_index, corpus.provenance))


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic corpus.

    Routes are planned by a hidden model of the same family the package
    learns: zones are ordered by the mixed cost with ``hidden_zone_weights``
    over a hidden preference matrix, then stops by the penalised cost with
    ``hidden_stop_weights``. The preference matrix favours a hidden
    circular visiting order of all zones; ``preference_scale`` controls how
    sharply. ``preference_order`` is ``"random"`` (a random permutation of
    the grid) or ``"sweep"`` (a serpentine over the grid rows).
    """

    n_instances: int = 250
    grid: int = 4
    stops_per_zone: tuple = (3, 6)
    zones_per_route: tuple = (8, 12)
    preference_scale: float = 0.5
    preference_order: str = "sweep"
    hidden_zone_weights: tuple = (1.0, 0.25)
    hidden_stop_weights: tuple = (1.0, 0.0, 2.0, 8.0, 10.0, 14.0, 20.0)
    medium_rate: float = 0.5
    low_rate: float = 0.04
    medium_swaps: int = 2
    low_swaps: int = 6
    cell_degrees: float = 0.01
    seconds_per_degree: float = 1000.0
    max_iter: int = 30
    seed: int = 0
    station_id: str = "S0"

    def __post_init__(self):
        if self.n_instances < 1 or self.grid < 2:
            raise InvalidInputError("need at least one instance and a grid of at least 2x2")
        lo, hi = self.stops_per_zone
        if not 1 <= lo <= hi:
            raise InvalidInputError("stops_per_zone must be a positive range")
        zlo, zhi = self.zones_per_route
        if not 1 <= zlo <= zhi <= self.grid ** 2:
            raise InvalidInputError("zones_per_route must lie within the number of grid cells")
        if zhi + 1 > 13:
            raise InvalidInputError("zones_per_route above 12 exceeds the exact zone solver")
        if not (0 <= self.medium_rate and 0 <= self.low_rate and self.medium_rate + self.low_rate <= 1):
            raise InvalidInputError("label rates must be nonnegative and sum to at most 1")
        if self.medium_swaps < 0 or self.low_swaps < 0:
            raise InvalidInputError("swap counts must be nonnegative")
        if self.preference_order not in ("random", "sweep"):
            raise InvalidInputError("preference_order must be 'random' or 'sweep'")


def grid_zone_ids(grid: int) -> list:
    return [f"z{r}-{c}" for r in range(grid) for c in range(grid)]


def hidden_preferences(cfg: SynthConfig, rng) -> tuple:
    """Hidden ``(zones, P)`` over the station plus all grid zones."""
    zones = grid_zone_ids(cfg.grid)
    m = len(zones)
    if cfg.preference_order == "random":
        visit = list(rng.permutation(m))
    else:
        visit = []
        for r in range(cfg.grid):
            cols = range(cfg.grid) if r % 2 == 0 else reversed(range(cfg.grid))
            visit.extend(r * cfg.grid + c for c in cols)
    pos = np.empty(m, dtype=int)
    pos[visit] = np.arange(m)
    logits = np.zeros((m + 1, m + 1))
    ahead = (pos[None, :] - pos[:, None] - 1) % m
    logits[1:, 1:] = -cfg.preference_scale * ahead
    logits[0, 1:] = -cfg.preference_scale * pos
    logits[1:, 0] = -cfg.preference_scale * (m - 1 - pos)
    weights = np.exp(logits)
    np.fill_diagonal(weights, 0.0)
    p = weights / weights.sum(axis=1, keepdims=True)
    return [station_zone_id(cfg.station_id)] + zones, p


def _assign_labels(n: int, cfg: SynthConfig, rng) -> list:
    n_medium = int(math.floor(n * cfg.medium_rate + 0.5))
    n_low = int(math.floor(n * cfg.low_rate + 0.5))
    n_low = min(n_low, n - n_medium)
    labels = ["high"] * (n - n_medium - n_low) + ["medium"] * n_medium + ["low"] * n_low
    return [labels[k] for k in rng.permutation(n)]


def _perturb_sequence(seq: list, swaps: int, rng) -> list:
    seq = list(seq)
    if len(seq) < 3:
        return seq
    for _ in range(swaps):
        k = int(rng.integers(1, len(seq) - 1))
        seq[k], seq[k + 1] = seq[k + 1], seq[k]
    return seq


def plan_route(inst: RoutingInstance, pref_zones: Sequence[str], pref: np.ndarray, cfg: SynthConfig):
    """Route the hidden planner would drive: returns ``(zone ordering, stop order)``."""
    g = build_geometry(inst)
    pos = {z: k for k, z in enumerate(pref_zones)}
    idx = [pos[z] for z in g.zones]
    local = pref[np.ix_(idx, idx)]
    np.fill_diagonal(local, 0.0)
    local = local / local.sum(axis=1, keepdims=True) if g.m > 1 else np.ones((1, 1))
    wd, wp = cfg.hidden_zone_weights
    off = ~np.eye(g.m, dtype=bool)
    c = np.zeros((g.m, g.m))
    c[off] = -wd * np.log(g.d_prime[off]) - wp * np.log(local[off])
    zone_tour = solve_exact(c)
    ordering = ZoneOrdering(tuple(g.zones[i] for i in zone_tour.order))
    if inst.n == 1:
        return ordering, [0]
    cost = penalty_cost(inst, order_index(inst, ordering), cfg.hidden_stop_weights)
    stop_tour = solve(cost, SolveBudget(seed=cfg.seed, max_iter=cfg.max_iter))
    return ordering, list(stop_tour.order)


def generate_synthetic(cfg: SynthConfig = SynthConfig()) -> Corpus:
    rng = np.random.default_rng(cfg.seed)
    pref_zones, pref = hidden_preferences(cfg, rng)
    grid_zones = pref_zones[1:]
    base_lat, base_lng = 47.60, -122.33
    station = (base_lat - 0.5 * cfg.cell_degrees, base_lng - 0.5 * cfg.cell_degrees)
    labels = _assign_labels(cfg.n_instances, cfg, rng)
    instances = []
    for k in range(cfg.n_instances):
        route_id = f"R{k:05d}"
        n_zones = int(rng.integers(cfg.zones_per_route[0], cfg.zones_per_route[1] + 1))
        chosen = sorted(rng.choice(len(grid_zones), size=n_zones, replace=False))
        stops = [Stop(f"{route_id}-depot", station[0], station[1], station_zone_id(cfg.station_id))]
        for zi in chosen:
            r, c = divmod(int(zi), cfg.grid)
            for _ in range(int(rng.integers(cfg.stops_per_zone[0], cfg.stops_per_zone[1] + 1))):
                lat = base_lat + (r + rng.random()) * cfg.cell_degrees
                lng = base_lng + (c + rng.random()) * cfg.cell_degrees
                stops.append(Stop(f"{route_id}-s{len(stops):03d}", lat, lng, grid_zones[zi]))
        xy = np.array([(s.lng, s.lat) for s in stops])
        travel = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2)) * cfg.seconds_per_degree
        travel = np.round(travel, 3)
        inst = RoutingInstance(route_id, cfg.station_id, tuple(stops), travel)
        _, order = plan_route(inst, pref_zones, pref, cfg)
        label = labels[k]
        swaps = {"high": 0, "medium": cfg.medium_swaps, "low": cfg.low_swaps}[label]
        order = _perturb_sequence(order, swaps, rng)
        instances.append(RoutingInstance(route_id, cfg.station_id, tuple(stops), travel, tuple(order), label))
    provenance = json.dumps({"generator": "synthetic", **asdict(cfg)}, sort_keys=True)
    return Corpus.from_instances(instances, provenance)
