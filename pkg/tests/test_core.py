import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ect.core import (
    ConditionalDistribution,
    CostVector,
    Example,
    WeightedBinaryExample,
    build_balanced_tree,
    is_leaf,
    label_regrets,
    leaf_label,
)


def all_leaf_depths(tree):
    # independent walk: recompute depths without path_to
    depths = {}

    def walk(ref, d):
        if is_leaf(ref):
            depths[leaf_label(ref)] = d
        else:
            left, right = tree.children[ref]
            walk(left, d + 1)
            walk(right, d + 1)

    walk(0, 0)
    return depths


def test_smallest_tree():
    t = build_balanced_tree(2)
    assert t.n_internal == 1
    assert t.depth == 1
    assert t.leafsets[0] == (0, 1)


def test_complete_tree_k8():
    t = build_balanced_tree(8)
    assert t.depth == 3
    assert t.n_internal == 7
    t.validate()


def test_k5_shape():
    # enumerate the builder output: 4 internal nodes, depth 3, and at least
    # one leaf at depth 2 (right-most subtrees are the shallow ones)
    t = build_balanced_tree(5)
    t.validate()
    assert t.n_internal == 4
    depths = all_leaf_depths(t)
    assert max(depths.values()) == 3
    assert min(depths.values()) == 2
    # left-heavy split: labels 0,1 sit deepest, 3 and 4 at depth 2
    assert depths[0] == depths[1] == 3
    assert depths[3] == depths[4] == 2


def test_rejects_tiny_k():
    with pytest.raises(ValueError):
        build_balanced_tree(1)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=64))
def test_tree_invariants(k):
    t = build_balanced_tree(k)
    t.validate()
    assert t.depth == math.ceil(math.log2(k))
    # every label at exactly one leaf
    depths = all_leaf_depths(t)
    assert sorted(depths) == list(range(k))
    # path_to agrees with the recomputed depths
    for y in range(k):
        assert t.leaf_depth(y) == depths[y]


def test_lca_matches_bruteforce():
    t = build_balanced_tree(6)
    for a in range(6):
        for b in range(6):
            if a == b:
                continue
            # brute force: deepest node containing both
            best = max(
                (n for n in range(t.n_internal) if a in t.leafsets[n] and b in t.leafsets[n]),
                key=lambda n: t.depths[n],
            )
            assert t.lca(a, b) == best


def test_label_regrets_symmetric():
    assert np.allclose(label_regrets((0.5, 0.5)), (0.0, 0.0))


def test_label_regrets_three_class_noise():
    # the k=3 construction at eps = 0.05
    r = label_regrets((0.3, 0.3, 0.4))
    assert np.allclose(r, (0.1, 0.1, 0.0))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=2, max_size=6))
def test_regret_argmin_is_argmax(raw):
    p = tuple(v / math.fsum(raw) for v in raw)
    r = label_regrets(p)
    assert (r >= 0).all()
    assert int(np.argmin(r)) == int(np.argmax(p))
    assert r[int(np.argmax(p))] == 0.0


def test_distribution_validation():
    with pytest.raises(ValueError):
        ConditionalDistribution((0.5, 0.6))
    with pytest.raises(ValueError):
        ConditionalDistribution((-0.1, 1.1))
    d = ConditionalDistribution((0.25, 0.75))
    assert d.p_star == 0.75


def test_cost_vector_bounds():
    CostVector((0.0, 1.0, 0.5))
    with pytest.raises(ValueError):
        CostVector((0.0, 1.2))


def test_example_payload_exclusive():
    Example(features=(1.0,), label=2)
    Example(features=(1.0,), costs=CostVector((0.1, 0.2)))
    with pytest.raises(ValueError):
        Example(features=(1.0,))
    with pytest.raises(ValueError):
        Example(features=(1.0,), label=0, costs=CostVector((0.1, 0.2)))


def test_weighted_binary_example_guards():
    WeightedBinaryExample((0.0,), 1, 0.7)
    with pytest.raises(ValueError):
        WeightedBinaryExample((0.0,), 2, 0.7)
    with pytest.raises(ValueError):
        WeightedBinaryExample((0.0,), 0, float("inf"))
    with pytest.raises(ValueError):
        WeightedBinaryExample((0.0,), 0, -0.1)
