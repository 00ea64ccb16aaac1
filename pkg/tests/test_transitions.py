import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from zoneroute.core import ZoneIndex
from zoneroute.exceptions import InvalidInputError, MissingLabelError
from zoneroute.transitions import (
    QualityWeights,
    TransitionEstimator,
    TransitionMatrix,
    count_transitions,
    neg_log,
    normalize_rows,
)
from zoneroute.tsp import solve_exact

from .conftest import all_circuits, make_instance

EPS = 1e-6
ZI = ZoneIndex(("station:S", "A", "B", "C"))


def route(zones, quality="high", rid="r"):
    return make_instance(zones, quality=quality, route_id=rid)


def test_single_route_counts_include_return_arc():
    freq = count_transitions([route(["A", "B", "C"])], QualityWeights(1, 0, 0), ZI)
    expected = np.zeros((4, 4))
    for i, j in [(0, 1), (1, 2), (2, 3), (3, 0)]:
        expected[i, j] = 1
    assert np.array_equal(freq, expected)


def test_return_arc_can_be_left_out():
    freq = count_transitions([route(["A", "B", "C"])], QualityWeights(), ZI, closing=False)
    assert freq[3, 0] == 0 and freq.sum() == 3


def test_two_symmetric_routes():
    freq = count_transitions([route(["A", "B"], rid="1"), route(["B", "A"], rid="2")], QualityWeights(), ZI)
    a = ZI.index_of["A"]
    assert freq[a, ZI.index_of["B"]] == 1
    assert freq[a, 0] == 1


def test_high_only_weights_match_high_only_data():
    routes = [route(["A", "B", "C"], "high", "1"), route(["C", "B"], "medium", "2"),
              route(["B", "A"], "low", "3"), route(["C", "A"], "high", "4")]
    only_high = count_transitions(routes, QualityWeights(1, 0, 0), ZI)
    subset = count_transitions([r for r in routes if r.quality == "high"], QualityWeights(), ZI)
    assert np.array_equal(only_high, subset)


def test_missing_label_only_matters_when_weights_differ():
    r = route(["A"], quality=None)
    count_transitions([r], QualityWeights(), ZI)
    with pytest.raises(MissingLabelError):
        count_transitions([r], QualityWeights(1, 0.5, 0), ZI)


def test_unknown_zone_is_an_error():
    with pytest.raises(InvalidInputError):
        count_transitions([route(["D"])], QualityWeights(), ZI)


def test_normalize_equal_split():
    p = normalize_rows(np.array([[0, 2, 2], [1, 0, 1], [1, 1, 0]]), EPS).p
    assert p[0].sum() == pytest.approx(1, abs=1e-12)
    assert p[0, 0] >= EPS and p[0, 0] < 2 * EPS
    assert p[0, 1] == pytest.approx(0.5, abs=2 * EPS) and p[0, 1] < 0.5
    assert p[0, 1] == p[0, 2]


def test_normalize_zero_row_is_uniform():
    freq = np.zeros((4, 4))
    freq[1, 2] = 1
    p = normalize_rows(freq, EPS).p
    assert p[0, 1:] == pytest.approx([1 / 3] * 3, abs=1e-5)
    assert p[0, 0] == pytest.approx(EPS)


def test_normalize_arithmetic():
    p = normalize_rows(np.array([[1.0, 3.0], [0.0, 1.0]]), EPS).p
    assert p[0] == pytest.approx([0.25, 0.75], abs=1e-5)


def test_normalize_needs_two_zones():
    with pytest.raises(InvalidInputError):
        normalize_rows(np.ones((1, 1)))


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 8)).map(lambda t: (t[0], t[0])),
              elements=st.floats(0, 1e6, allow_nan=False)))
def test_rows_stochastic_and_floored(freq):
    p = normalize_rows(freq, EPS).p
    assert np.allclose(p.sum(axis=1), 1, atol=1e-9)
    assert (p >= EPS * (1 - 1e-12)).all()


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_quality_weight_scaling_cancels(lam, seed):
    rng = np.random.default_rng(seed)
    zones = ["A", "B", "C"]
    routes = [route(list(rng.permutation(zones)[: rng.integers(1, 4)]), q, str(k))
              for k, q in enumerate(["high", "medium", "low", "high", "medium"])]
    base = QualityWeights(1.0, 0.6, 0.2)
    scaled = QualityWeights(lam, 0.6 * lam, 0.2 * lam)
    p1 = normalize_rows(count_transitions(routes, base, ZI), EPS).p
    p2 = normalize_rows(count_transitions(routes, scaled, ZI), EPS).p
    assert np.allclose(p1, p2, atol=1e-12)


def test_neg_log_values():
    assert neg_log(np.array([[0.5]]))[0, 0] == pytest.approx(0.6931471805599453)
    assert neg_log(np.array([[1.0]]))[0, 0] == 0.0


def test_neg_log_refuses_unsmoothed_zero():
    with pytest.raises(InvalidInputError):
        neg_log(np.array([[0.5, 0.0]]))


def test_min_neg_log_equals_max_likelihood():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(3, 9))
        p = normalize_rows(rng.random((m, m)) * (1 - np.eye(m)), EPS).p
        likelihood = {c: np.prod([p[c[k], c[(k + 1) % m]] for k in range(m)]) for c in all_circuits(m)}
        best = max(likelihood, key=likelihood.get)
        assert solve_exact(neg_log(p)).order == best


def test_weights_validation():
    with pytest.raises(InvalidInputError):
        QualityWeights(0, 0, 0)
    with pytest.raises(InvalidInputError):
        QualityWeights(-1, 1, 1)


def test_estimator_fit_and_artifact_roundtrip():
    routes = [route(["A", "B"], "high", "1"), route(["B", "C"], "medium", "2")]
    est = TransitionEstimator(v_high=1, v_medium=0.5, v_low=0).fit(routes)
    tm = est.transition_matrix_
    assert np.allclose(tm.p.sum(axis=1), 1)
    back = TransitionMatrix.from_dict(json.loads(tm.dumps(config={"x": 1})))
    assert back.zone_index.zones == tm.zone_index.zones
    assert np.array_equal(back.p, tm.p)
    assert est.get_params()["v_medium"] == 0.5
    subs = est.transform(routes)
    assert subs[0].shape == (3, 3)


def test_estimator_rejects_empty_corpus():
    with pytest.raises(InvalidInputError, match="no routes"):
        TransitionEstimator().fit([])


def test_unknown_zones_get_uniform_fallback():
    est = TransitionEstimator().fit([route(["A", "B"])])
    sub = est.transition_matrix_.submatrix(["station:S", "A", "Z"])
    m = len(est.zone_index_)
    assert sub[2, 0] == pytest.approx(1 / (m - 1))
    with pytest.raises(InvalidInputError):
        est.transition_matrix_.submatrix(["Z"], strict=True)


def test_sizes_enumerated_in_likelihood_check():
    # sanity check on the enumeration helper itself
    assert len(list(all_circuits(5))) == len(list(itertools.permutations(range(4))))
