import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repmkkm.metrics import accuracy, contingency_table, evaluate, nmi, purity

from oracles import brute_force_accuracy, direct_nmi, direct_purity

TRUTH = [0, 0, 1, 1]
PRED = [0, 1, 1, 1]

label_pairs = st.integers(1, 40).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 5), min_size=n, max_size=n),
                        st.lists(st.integers(0, 5), min_size=n, max_size=n)))


class TestAccuracy:
    def test_identity(self):
        assert accuracy([0, 1, 2, 2], [0, 1, 2, 2]) == 1.0

    def test_relabeled(self):
        truth = np.array([0, 0, 1, 2, 2, 1])
        assert accuracy(np.array([2, 0, 1])[truth], truth) == 1.0

    def test_hand_value(self):
        assert accuracy(PRED, TRUTH) == 0.75
        assert brute_force_accuracy(PRED, TRUTH) == 0.75

    def test_more_clusters_than_classes(self):
        assert accuracy([0, 1, 2, 3], [0, 0, 1, 1]) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            accuracy([0, 1], [0])

    @settings(max_examples=100, deadline=None)
    @given(label_pairs)
    def test_matches_exhaustive_permutations(self, pair):
        pred, truth = pair
        assert accuracy(pred, truth) == brute_force_accuracy(pred, truth)

    @settings(max_examples=40, deadline=None)
    @given(label_pairs, st.permutations(range(6)))
    def test_at_least_any_fixed_assignment(self, pair, perm):
        pred, truth = map(np.asarray, pair)
        fixed = np.mean(np.asarray(perm)[pred] == truth)
        assert accuracy(pred, truth) >= fixed


class TestNMI:
    def test_identity(self):
        assert nmi([0, 0, 1, 2], [0, 0, 1, 2]) == pytest.approx(1.0, abs=1e-15)

    def test_constant_prediction(self):
        assert nmi([0, 0, 0, 0], TRUTH) == 0.0

    def test_hand_value(self):
        assert nmi(PRED, TRUTH) == pytest.approx(direct_nmi(PRED, TRUTH), abs=1e-12)
        # joint cells 1/4, 1/4, 1/2; marginals (1/4, 3/4) and (1/2, 1/2)
        mi = 0.25 * np.log(2) + 0.25 * np.log(2 / 3) + 0.5 * np.log(4 / 3)
        hp = -(0.25 * np.log(0.25) + 0.75 * np.log(0.75))
        assert nmi(PRED, TRUTH) == pytest.approx(mi / np.sqrt(hp * np.log(2)), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(label_pairs)
    def test_matches_direct_formula(self, pair):
        pred, truth = pair
        assert nmi(pred, truth) == pytest.approx(direct_nmi(pred, truth), abs=1e-12)

    @pytest.mark.parametrize("average", ["geometric", "max", "arithmetic"])
    def test_matches_sklearn(self, average):
        sk = pytest.importorskip("sklearn.metrics")
        rng = np.random.default_rng(0)
        for _ in range(20):
            pred, truth = rng.integers(0, 4, 30), rng.integers(0, 3, 30)
            ref = sk.normalized_mutual_info_score(truth, pred, average_method=average)
            assert nmi(pred, truth, average) == pytest.approx(ref, abs=1e-12)

    def test_unknown_average(self):
        with pytest.raises(ValueError):
            nmi(PRED, TRUTH, "min")


class TestPurity:
    def test_identity(self):
        assert purity(TRUTH, TRUTH) == 1.0

    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_single_cluster(self, k):
        truth = np.repeat(np.arange(k), 4)
        assert purity(np.zeros_like(truth), truth) == pytest.approx(1 / k)

    def test_hand_value(self):
        assert purity(PRED, TRUTH) == 0.75

    @settings(max_examples=100, deadline=None)
    @given(label_pairs)
    def test_matches_direct_formula(self, pair):
        pred, truth = pair
        assert purity(pred, truth) == pytest.approx(direct_purity(pred, truth), abs=1e-12)

    def test_equals_accuracy_when_majority_map_injective(self):
        truth = np.repeat([0, 1, 2], 5)
        pred = truth.copy()
        pred[[0, 6, 11]] = [1, 2, 0]
        table = contingency_table(pred, truth)
        assert len(set(table.argmax(axis=1))) == table.shape[0]
        assert purity(pred, truth) == accuracy(pred, truth)


@settings(max_examples=50, deadline=None)
@given(label_pairs, st.permutations(range(6)), st.permutations(range(6)))
def test_relabeling_invariance(pair, perm_p, perm_t):
    pred, truth = map(np.asarray, pair)
    p2, t2 = np.asarray(perm_p)[pred] + 10, np.asarray(perm_t)[truth] * 3
    assert accuracy(p2, t2) == accuracy(pred, truth)
    assert purity(p2, t2) == purity(pred, truth)
    assert nmi(p2, t2) == pytest.approx(nmi(pred, truth), abs=1e-12)


def test_report_serialization():
    report = evaluate(PRED, TRUTH, nmi_average="max")
    data = json.loads(report.to_json())
    assert data["nmi_average"] == "max"
    assert data["contingency"] == [[1, 0], [1, 2]]
    assert report.percent()["acc"] == 75.0
    assert [float(v) for v in report.csv_row()] == [report.acc, report.nmi, report.purity]
