import json
import math

import numpy as np
import pytest

from ect.core import build_balanced_tree
from ect.learners import LearnerSpec
from ect.reductions import (
    ReductionModel,
    TrainingDataError,
    compute_reach_masks,
    train_all_pairs,
    train_apft,
    train_cs_filter_tree,
    train_filter_tree,
    train_tree,
)

ORACLE = LearnerSpec("bayes_oracle")


def enumerate_multiclass(context_probs, denom):
    """Exact sample: duplicate (context, label) pairs per rational probability.

    context_probs: list of per-context label distributions, each summing to 1
    with entries that are multiples of 1/denom. Contexts get one-hot features.
    """
    C = len(context_probs)
    X, y = [], []
    for c, probs in enumerate(context_probs):
        feat = [0.0] * C
        feat[c] = 1.0
        for label, p in enumerate(probs):
            count = round(p * denom)
            assert abs(count - p * denom) < 1e-9, "probabilities must be rational"
            X.extend([feat] * count)
            y.extend([label] * count)
    return np.array(X), np.array(y)


def model_error(model, context_probs):
    """Exact error of a decoded classifier under the generating distribution."""
    C = len(context_probs)
    err = 0.0
    for c, probs in enumerate(context_probs):
        feat = np.zeros(C)
        feat[c] = 1.0
        err += (1.0 - probs[model.decode(feat)]) / C
    return err


THREE_CLASS_NOISE = [(0.3, 0.3, 0.4)]  # two near-ties and a moderate favorite


class TestTrainTree:
    def test_three_class_noise_inconsistency(self):
        X, y = enumerate_multiclass(THREE_CLASS_NOISE, 20)
        tree = build_balanced_tree(3)
        model = train_tree(X, y, tree, ORACLE)
        # the root sees 0.6 mass on the {0,1} side and descends into it
        assert model.nodes.predict_bit(0, X[0]) == 1
        assert model.decode(X[0]) in (0, 1)
        assert model_error(model, THREE_CLASS_NOISE) == pytest.approx(0.70)

    def test_k2_equals_filter_tree(self):
        X, y = enumerate_multiclass([(0.25, 0.75)], 4)
        tree = build_balanced_tree(2)
        a = train_tree(X, y, tree, ORACLE)
        b = train_filter_tree(X, y, tree, ORACLE)
        assert a.decode(X[0]) == b.decode(X[0]) == 1

    def test_deterministic_labels_zero_error(self):
        probs = [(1.0, 0.0, 0.0, 0.0), (0.0, 0.0, 1.0, 0.0), (0.0, 0.0, 0.0, 1.0)]
        X, y = enumerate_multiclass(probs, 1)
        tree = build_balanced_tree(4)
        model = train_tree(X, y, tree, ORACLE)
        assert model_error(model, probs) == 0.0

    def test_empty_sample_rejected(self):
        with pytest.raises(TrainingDataError):
            train_tree(np.zeros((0, 1)), np.zeros(0, dtype=int), build_balanced_tree(2), ORACLE)


class TestFilterTree:
    def test_three_class_noise_consistent(self):
        X, y = enumerate_multiclass(THREE_CLASS_NOISE, 20)
        tree = build_balanced_tree(3)
        model = train_filter_tree(X, y, tree, ORACLE)
        # bottom node ties between 0 and 1 and keeps the left one; the root
        # then compares that winner (0.3) against label 2 (0.4) and picks 2
        assert model.decode(X[0]) == 2
        assert model_error(model, THREE_CLASS_NOISE) == pytest.approx(0.60)

    def test_oracle_decodes_argmax_everywhere(self):
        # exhaustive check over contexts: filtered training with exact Bayes
        # node decisions recovers the most likely label
        probs = [
            (0.50, 0.25, 0.1875, 0.0625),
            (0.0625, 0.50, 0.25, 0.1875),
            (0.1875, 0.0625, 0.25, 0.50),
            (0.25, 0.1875, 0.50, 0.0625),
            (0.125, 0.25, 0.0625, 0.5625),
        ]
        X, y = enumerate_multiclass(probs, 16)
        tree = build_balanced_tree(4)
        model = train_filter_tree(X, y, tree, ORACLE)
        for c, p in enumerate(probs):
            feat = np.zeros(len(probs))
            feat[c] = 1.0
            assert model.decode(feat) == int(np.argmax(p))

    def test_filtering_monotone(self):
        probs = [
            (0.50, 0.25, 0.1875, 0.0625),
            (0.0625, 0.50, 0.25, 0.1875),
            (0.25, 0.1875, 0.50, 0.0625),
        ]
        X, y = enumerate_multiclass(probs, 16)
        tree = build_balanced_tree(4)
        model = train_filter_tree(X, y, tree, ORACLE)
        reach = compute_reach_masks(model, X, y)
        for node in range(tree.n_internal):
            for child in tree.children[node]:
                if child >= 0:
                    # examples reaching node whose label sits under this child
                    # must have reached the child too
                    under = np.isin(y, tree.leafsets[child])
                    assert not np.any(reach[node] & under & ~reach[child])

    def test_per_level_touches_bounded(self):
        probs = [(0.5, 0.25, 0.125, 0.0625, 0.0625)]
        X, y = enumerate_multiclass(probs, 16)
        tree = build_balanced_tree(5)
        model = train_filter_tree(X, y, tree, ORACLE)
        for level, touched in model.counters.per_level_touches.items():
            assert touched <= len(y)

    def test_empty_filtered_node_constant_left(self):
        # context only ever emits label 3: the (0,1) node sees nothing
        X, y = enumerate_multiclass([(0.0, 0.0, 0.0, 1.0)], 4)
        tree = build_balanced_tree(4)
        with pytest.warns(UserWarning):
            model = train_filter_tree(X, y, tree, ORACLE)
        assert model.counters.empty_node_warnings
        assert model.decode(X[0]) == 3

    def test_shared_classifier_flag(self):
        probs = [(0.75, 0.25, 0.0), (0.0, 0.25, 0.75)]
        X, y = enumerate_multiclass(probs, 4)
        tree = build_balanced_tree(3)
        model = train_filter_tree(X, y, tree, LearnerSpec("logistic_sgd", epochs=30), shared=True)
        assert model.nodes.shared is not None
        assert model.decode(np.array([1.0, 0.0])) == 0
        assert model.decode(np.array([0.0, 1.0])) == 2


class TestCostSensitive:
    def test_single_node_weight(self):
        X = np.array([[1.0]])
        C = np.array([[0.2, 0.9]])
        tree = build_balanced_tree(2)
        model = train_cs_filter_tree(X, C, tree, ORACLE)
        # one example: cheaper side is the left label, importance 0.7
        assert model.counters.examples_per_node[0] == 1
        assert model.decode(X[0]) == 0

    def test_equal_costs_skipped(self):
        X = np.array([[1.0]])
        C = np.array([[0.4, 0.4]])
        tree = build_balanced_tree(2)
        with pytest.warns(UserWarning):
            model = train_cs_filter_tree(X, C, tree, ORACLE)
        assert model.counters.examples_per_node[0] == 0

    def test_decodes_argmin_cost_everywhere(self):
        costs = [
            (0.1, 0.5, 0.9, 0.3),
            (0.8, 0.2, 0.6, 0.4),
            (0.9, 0.7, 0.1, 0.5),
            (0.35, 0.6, 0.8, 0.05),
        ]
        C_ctx = len(costs)
        X = np.eye(C_ctx)
        C = np.array(costs)
        tree = build_balanced_tree(4)
        model = train_cs_filter_tree(X, C, tree, ORACLE)
        for c in range(C_ctx):
            assert model.decode(X[c]) == int(np.argmin(costs[c]))

    def test_cost_bounds_checked(self):
        tree = build_balanced_tree(2)
        with pytest.raises(TrainingDataError):
            train_cs_filter_tree(np.array([[1.0]]), np.array([[0.0, 1.2]]), tree, ORACLE)


class TestAllPairs:
    def test_pair_count_k3(self):
        X, y = enumerate_multiclass([(0.5, 0.25, 0.25)], 4)
        model = train_all_pairs(X, y, 3, ORACLE)
        assert len(model.pair_models) == 3

    def test_vote_ties_lowest_label(self):
        X, y = enumerate_multiclass([(0.5, 0.25, 0.25)], 4)
        model = train_all_pairs(X, y, 3, ORACLE)
        res = model.decode_verbose(X[0])
        assert res.total_evaluations == 3
        assert res.label == 0

    def test_apft_pair_placement_k4(self):
        X, y = enumerate_multiclass([(0.25, 0.25, 0.25, 0.25)], 4)
        tree = build_balanced_tree(4)
        model = train_apft(X, y, tree, ORACLE)
        assert set(model.pair_models) == {(0, 1), (2, 3), (0, 2), (0, 3), (1, 2), (1, 3)}
        # cross pairs live at the root, sibling pairs at the depth-1 nodes
        assert tree.lca(0, 1) != 0 and tree.lca(2, 3) != 0
        for pair in ((0, 2), (0, 3), (1, 2), (1, 3)):
            assert tree.lca(*pair) == 0

    def test_apft_matches_argmax_with_oracle(self):
        probs = [
            (0.50, 0.25, 0.1875, 0.0625),
            (0.0625, 0.50, 0.25, 0.1875),
            (0.1875, 0.0625, 0.25, 0.50),
        ]
        X, y = enumerate_multiclass(probs, 16)
        tree = build_balanced_tree(4)
        model = train_apft(X, y, tree, ORACLE)
        for c, p in enumerate(probs):
            feat = np.zeros(len(probs))
            feat[c] = 1.0
            assert model.decode(feat) == int(np.argmax(p))


class TestDecode:
    def test_constant_left_k2(self):
        X, y = enumerate_multiclass([(0.5, 0.5)], 2)
        model = train_filter_tree(X, y, build_balanced_tree(2), LearnerSpec("constant"))
        assert model.decode(X[0]) == 0

    def test_filter_tree_k8_exactly_three_evaluations(self):
        probs = [tuple([0.5] + [0.5 / 7] * 7)]
        X, y = enumerate_multiclass(probs, 112)
        model = train_filter_tree(X, y, build_balanced_tree(8), ORACLE)
        res = model.decode_verbose(X[0])
        assert res.evaluations == 3 == res.total_evaluations
        assert res.evaluations <= math.ceil(math.log2(8))

    def test_path_consistency_replay(self):
        probs = [
            (0.50, 0.25, 0.1875, 0.0625),
            (0.0625, 0.50, 0.25, 0.1875),
        ]
        X, y = enumerate_multiclass(probs, 16)
        tree = build_balanced_tree(4)
        model = train_filter_tree(X, y, tree, ORACLE)
        for c in range(2):
            feat = np.zeros(2)
            feat[c] = 1.0
            res = model.decode_verbose(feat)
            # every classifier on the returned path prefers the returned leaf
            for node in res.path:
                bit = model.nodes.predict_bit(node, feat)
                assert bit == tree.side_of(node, res.label)

    def test_decode_deterministic(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 4, size=60)
        tree = build_balanced_tree(4)
        model = train_filter_tree(X, y, tree, LearnerSpec("logistic_sgd", epochs=3))
        p1 = model.predict(X)
        p2 = model.predict(X)
        assert np.array_equal(p1, p2)

    def test_apft_path_evaluations_bounded(self):
        probs = [tuple([0.5] + [0.5 / 7] * 7)]
        X, y = enumerate_multiclass(probs, 112)
        tree = build_balanced_tree(8)
        model = train_apft(X, y, tree, ORACLE)
        res = model.decode_verbose(X[0])
        assert res.evaluations <= math.ceil(math.log2(8))
        assert res.total_evaluations <= 7


class TestSerialization:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(80, 3))
        y = rng.integers(0, 5, size=80)
        tree = build_balanced_tree(5)
        model = train_filter_tree(X, y, tree, LearnerSpec("logistic_sgd", epochs=2))
        path = tmp_path / "model.json"
        model.save(path)
        again = ReductionModel.load(path)
        assert np.array_equal(model.predict(X), again.predict(X))
        # byte-exact re-serialization
        again.save(tmp_path / "model2.json")
        assert (tmp_path / "model.json").read_bytes() == (tmp_path / "model2.json").read_bytes()

    def test_version_guard(self, tmp_path):
        d = {"format": "ect-model", "version": 99, "kind": "tree", "k": 2}
        with pytest.raises(ValueError):
            ReductionModel.from_dict(d)

    def test_all_pairs_round_trip(self, tmp_path):
        X, y = enumerate_multiclass([(0.5, 0.25, 0.25)], 4)
        model = train_all_pairs(X, y, 3, ORACLE)
        path = tmp_path / "ap.json"
        model.save(path)
        again = ReductionModel.load(path)
        assert np.array_equal(model.predict(X), again.predict(X))
