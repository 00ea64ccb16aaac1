import itertools

import numpy as np
import pytest

from zoneroute.core import RoutingInstance, Stop


def brute_force_tsp(c):
    """Minimum circuit cost and all optimal orders by full enumeration."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    if n == 1:
        return 0.0, [(0,)]
    perms = np.array(list(itertools.permutations(range(1, n))))
    full = np.hstack([np.zeros((len(perms), 1), dtype=int), perms])
    costs = c[full, np.roll(full, -1, axis=1)].sum(axis=1)
    best = costs.min()
    hits = np.flatnonzero(np.isclose(costs, best, rtol=1e-12, atol=1e-12))
    return float(best), [tuple(int(v) for v in full[k]) for k in hits]


def all_circuits(n):
    for perm in itertools.permutations(range(1, n)):
        yield (0,) + perm


def make_instance(zones, coords=None, travel=None, sequence=None, quality="high", route_id="r1"):
    """Instance whose stop ``k`` (k >= 1) lies in ``zones[k - 1]``."""
    n = len(zones) + 1
    rng = np.random.default_rng(len(zones))
    if coords is None:
        coords = [(0.0, 0.0)] + [tuple(rng.random(2)) for _ in zones]
    stops = [Stop("depot", coords[0][1], coords[0][0], "ignored")]
    stops += [Stop(f"s{k}", coords[k][1], coords[k][0], z) for k, z in enumerate(zones, start=1)]
    if travel is None:
        xy = np.array(coords, dtype=float)
        travel = np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(axis=2)) * 100
    if sequence is None:
        sequence = tuple(range(n))
    return RoutingInstance(route_id, "S", tuple(stops), travel, sequence, quality)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
