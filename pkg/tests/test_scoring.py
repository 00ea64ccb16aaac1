import itertools
from functools import lru_cache

import numpy as np
import pytest

from zoneroute.core import Tour
from zoneroute.exceptions import InvalidInputError, MissingLabelError
from zoneroute.scoring import (
    ScoreReport,
    erp,
    score,
    score_sequences,
    sequence_deviation,
    zone_score,
)
from zoneroute.zones import ZoneOrdering

from .conftest import make_instance


def rank_walk(actual, predicted):
    """SD by walking the predicted sequence and looking up ranks one by one."""
    ranks = {}
    for pos, item in enumerate(actual):
        if pos > 0:
            ranks[item] = pos
    walk = [ranks[item] for item in predicted if item in ranks]
    c = len(walk)
    if c < 2:
        return 0.0
    total = 0
    for k in range(c - 1):
        total += abs(walk[k + 1] - walk[k]) - 1
    return 2 * total / (c * (c - 1))


def brute_erp(a, b, dist, gap=0):
    """Enumerate every monotone alignment of two sequences; keep (cost, edits) minimal."""
    a, b = tuple(a[1:]), tuple(b[1:])

    @lru_cache(maxsize=None)
    def alignments(i, j):
        if i == len(a) and j == len(b):
            return [(0.0, 0)]
        out = []
        if i < len(a) and j < len(b):
            out += [(c + dist[a[i], b[j]], e + (a[i] != b[j])) for c, e in alignments(i + 1, j + 1)]
        if i < len(a):
            out += [(c + dist[a[i], gap], e + 1) for c, e in alignments(i + 1, j)]
        if j < len(b):
            out += [(c + dist[b[j], gap], e + 1) for c, e in alignments(i, j + 1)]
        return out

    return min(alignments(0, 0))


def random_dist(rng, n):
    pts = rng.random((n, 2))
    d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    return d / d.max()


def test_sd_identity_is_zero():
    assert sequence_deviation([0, 1, 2, 3], [0, 1, 2, 3]) == 0


def test_sd_hand_value():
    assert sequence_deviation(["D", 1, 2, 3], ["D", 1, 3, 2]) == pytest.approx(1 / 3)
    assert rank_walk(["D", 1, 2, 3], ["D", 1, 3, 2]) == pytest.approx(1 / 3)


def test_sd_matches_rank_walk_exhaustively():
    for c in range(1, 7):
        actual = list(range(c + 1))
        for body in itertools.permutations(range(1, c + 1)):
            predicted = [0, *body]
            assert sequence_deviation(actual, predicted) == pytest.approx(rank_walk(actual, predicted), abs=1e-12)


def test_sd_extremes_for_small_routes():
    # adjacent-rank steps cost nothing, so the reversal scores 0 and the
    # maximum sits on zig-zag permutations
    for c, top in ((3, 1 / 3), (4, 2 / 3)):
        values = {p: rank_walk(range(c + 1), (0, *p)) for p in itertools.permutations(range(1, c + 1))}
        assert sequence_deviation(range(c + 1), (0, *range(c, 0, -1))) == 0
        assert max(values.values()) == pytest.approx(top)
        worst = [p for p, v in values.items() if v == pytest.approx(top)]
        assert all(sequence_deviation(range(c + 1), (0, *p)) == pytest.approx(top) for p in worst)
    assert sorted(p for p, v in values.items() if v == pytest.approx(2 / 3)) == [(2, 4, 1, 3), (3, 1, 4, 2)]


def test_sd_ignores_labels():
    a = ["d", "x", "y", "z", "w"]
    b = ["d", "z", "x", "w", "y"]
    relabel = {"d": 0, "x": 9, "y": 4, "z": 7, "w": 1}
    assert sequence_deviation(a, b) == sequence_deviation([relabel[s] for s in a], [relabel[s] for s in b])


def test_sd_rejects_mismatched_items():
    with pytest.raises(InvalidInputError):
        sequence_deviation([0, 1, 2], [0, 1, 3])
    with pytest.raises(InvalidInputError):
        sequence_deviation([0, 1, 2], [1, 0, 2])


def test_erp_identity():
    d = random_dist(np.random.default_rng(0), 5)
    assert erp([0, 1, 2, 3, 4], [0, 1, 2, 3, 4], d) == (0.0, 0)


def test_erp_adjacent_swap_three_stops():
    d = random_dist(np.random.default_rng(1), 4)
    got = erp([0, 1, 2, 3], [0, 1, 3, 2], d)
    want = brute_erp([0, 1, 2, 3], [0, 1, 3, 2], d)
    assert got[0] == pytest.approx(want[0], abs=1e-12) and got[1] == want[1]


def test_erp_matches_alignment_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = int(rng.integers(2, 8))
        d = random_dist(rng, n)
        a = [0, *rng.permutation(np.arange(1, n)).tolist()]
        b = [0, *rng.permutation(np.arange(1, n)).tolist()]
        got = erp(a, b, d)
        want = brute_erp(a, b, d)
        assert got[0] == pytest.approx(want[0], abs=1e-12)
        assert got[1] == want[1]


def test_score_formula_and_zero_edits():
    d = random_dist(np.random.default_rng(3), 5)
    row = score_sequences([0, 1, 2, 3, 4], [0, 2, 1, 4, 3], d)
    assert row.erp_edits > 0
    assert row.score == pytest.approx(row.sd * row.erp_norm / row.erp_edits)
    assert score_sequences([0, 1, 2, 3], [0, 1, 2, 3], d[:4, :4]).score == 0


def test_score_positive_for_generic_disorder():
    rng = np.random.default_rng(4)
    d = random_dist(rng, 6)
    for p in itertools.permutations(range(1, 6)):
        row = score_sequences([0, 1, 2, 3, 4, 5], [0, *p], d)
        assert row.score >= 0
        if row.sd > 0:
            assert row.score > 0


def test_score_on_instance_normalizes_travel_times():
    inst = make_instance(["A", "B", "C"])
    row = score(inst, Tour((0, 2, 1, 3)))
    t = inst.travel_times / inst.travel_times.max()
    assert row.erp_norm == pytest.approx(erp([0, 1, 2, 3], [0, 2, 1, 3], t)[0])
    assert score(inst, Tour(inst.actual_sequence)).score == 0


def test_score_needs_actual_route():
    inst = make_instance(["A"], sequence=None)
    from zoneroute.core import RoutingInstance
    bare = RoutingInstance(inst.route_id, inst.station_id, inst.stops, inst.travel_times)
    with pytest.raises(MissingLabelError):
        score(bare, Tour((0, 1)))


def test_zone_score_variants():
    inst = make_instance(["A", "B", "C"], coords=[(0, 0), (1, 0), (2, 0), (3, 0)])
    right = ZoneOrdering(("station:S", "A", "B", "C"))
    wrong = ZoneOrdering(("station:S", "B", "A", "C"))
    assert zone_score(inst, right).score == 0
    unit = zone_score(inst, wrong, unit_distances=True)
    assert unit.erp_norm == erp([0, 1, 2, 3], [0, 2, 1, 3], 1 - np.eye(4))[0]
    assert zone_score(inst, wrong).score > 0


def test_report_outputs():
    inst_h = make_instance(["A", "B"], quality="high", route_id="h")
    inst_m = make_instance(["A", "B"], quality="medium", route_id="m")
    rows = [score(inst_h, Tour((0, 1, 2))), score(inst_m, Tour((0, 2, 1)))]
    rep = ScoreReport(rows)
    assert rep.summary()["high"]["count"] == 1
    assert rep.to_csv().splitlines()[0] == "route_id,quality,sd,erp_norm,erp_edits,score"
    hist = rep.histogram_csv(bins=4).splitlines()
    assert hist[0] == "bin_start,bin_end,count" and len(hist) == 5
    assert sum(int(line.split(",")[2]) for line in hist[1:]) == 2
