"""Core domain types: label trees, conditional distributions, cost vectors.

Everything here is immutable after construction and safe to share between
threads. Validation happens eagerly so downstream code can assume the
invariants hold.

Binary decisions throughout the package use the convention ``bit == 1``
means "the left input wins" and ``bit == 0`` means right. Ties are broken
toward the left (lower-index) side everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-9

LEFT_BIT = 1
RIGHT_BIT = 0


def leaf_ref(label: int) -> int:
    """Encode a leaf label as a negative child reference."""
    return -label - 1


def is_leaf(ref: int) -> bool:
    return ref < 0


def leaf_label(ref: int) -> int:
    if ref >= 0:
        raise ValueError(f"not a leaf reference: {ref}")
    return -ref - 1


@dataclass(frozen=True)
class LabelTree:
    """Binary tree over labels 0..k-1.

    Internal nodes are indexed 0..k-2 with node 0 the root. Child references
    encode internal nodes as their index and leaves via :func:`leaf_ref`.
    ``leafsets[n]`` is the sorted tuple of labels under node n.
    """

    k: int
    children: tuple[tuple[int, int], ...]
    parents: tuple[int, ...]  # parent index, -1 for the root
    leafsets: tuple[tuple[int, ...], ...]
    depths: tuple[int, ...]  # node depth, root at 0

    @property
    def n_internal(self) -> int:
        return len(self.children)

    @property
    def depth(self) -> int:
        """Maximum leaf depth."""
        return max(self.leaf_depth(y) for y in range(self.k))

    def bottom_up(self) -> list[int]:
        """Internal node indices ordered deepest level first."""
        return sorted(range(self.n_internal), key=lambda n: -self.depths[n])

    def leaves_under(self, ref: int) -> tuple[int, ...]:
        if is_leaf(ref):
            return (leaf_label(ref),)
        return self.leafsets[ref]

    def side_of(self, node: int, label: int) -> int:
        """LEFT_BIT if label sits under node's left child, RIGHT_BIT if right."""
        left, right = self.children[node]
        if label in self.leaves_under(left):
            return LEFT_BIT
        if label in self.leaves_under(right):
            return RIGHT_BIT
        raise ValueError(f"label {label} is not under node {node}")

    def path_to(self, label: int) -> list[tuple[int, int]]:
        """Root-to-leaf path as (node, side bit the label lies on)."""
        path = []
        ref = 0
        while not is_leaf(ref):
            bit = self.side_of(ref, label)
            path.append((ref, bit))
            left, right = self.children[ref]
            ref = left if bit == LEFT_BIT else right
        return path

    def leaf_depth(self, label: int) -> int:
        return len(self.path_to(label))

    def lca(self, a: int, b: int) -> int:
        """Deepest node whose leafset contains both labels."""
        if a == b:
            raise ValueError("lca needs two distinct labels")
        best = 0
        for n in range(self.n_internal):
            ls = self.leafsets[n]
            if a in ls and b in ls and self.depths[n] >= self.depths[best]:
                best = n
        return best

    def validate(self) -> None:
        """Check the leaf-set partition invariant on every internal node."""
        if self.n_internal != self.k - 1:
            raise AssertionError("expected k-1 internal nodes")
        if sorted(self.leafsets[0]) != list(range(self.k)):
            raise AssertionError("root leafset must cover all labels")
        for n, (left, right) in enumerate(self.children):
            ls = set(self.leaves_under(left))
            rs = set(self.leaves_under(right))
            if ls & rs:
                raise AssertionError(f"node {n}: child leafsets overlap")
            if ls | rs != set(self.leafsets[n]):
                raise AssertionError(f"node {n}: children do not partition leafset")


def build_balanced_tree(k: int) -> LabelTree:
    """Balanced label tree with leaves 0..k-1 laid out left to right.

    When a level holds an odd number of labels the right-most subtree is the
    shallow one, so the resulting depth is exactly ceil(log2 k).
    """
    if k < 2:
        raise ValueError(f"need at least 2 labels, got {k}")
    children: list[list[int]] = []
    leafsets: list[tuple[int, ...]] = []
    parents: list[int] = []
    depths: list[int] = []

    def build(labels: range, depth: int) -> int:
        if len(labels) == 1:
            return leaf_ref(labels[0])
        node = len(children)
        children.append([0, 0])
        leafsets.append(tuple(labels))
        parents.append(-1)
        depths.append(depth)
        split = math.ceil(len(labels) / 2)
        left = build(labels[:split], depth + 1)
        right = build(labels[split:], depth + 1)
        children[node] = [left, right]
        for ref in (left, right):
            if not is_leaf(ref):
                parents[ref] = node
        return node

    build(range(k), 0)
    return LabelTree(
        k=k,
        children=tuple((l, r) for l, r in children),
        parents=tuple(parents),
        leafsets=tuple(leafsets),
        depths=tuple(depths),
    )


@dataclass(frozen=True)
class ConditionalDistribution:
    """Distribution over k labels for one fixed context.

    Entries must be nonnegative and sum to one within PROB_TOL; out-of-tolerance
    input is rejected rather than renormalized.
    """

    p: tuple[float, ...]

    def __post_init__(self):
        if len(self.p) < 1:
            raise ValueError("empty distribution")
        if any(v < 0 for v in self.p):
            raise ValueError("negative probability")
        total = math.fsum(self.p)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    @property
    def k(self) -> int:
        return len(self.p)

    @property
    def p_star(self) -> float:
        return max(self.p)


def label_regrets(dist: ConditionalDistribution | tuple | list | np.ndarray) -> np.ndarray:
    """Per-label regret max(p) - p_y; zero exactly at the most likely label."""
    if not isinstance(dist, ConditionalDistribution):
        dist = ConditionalDistribution(tuple(float(v) for v in dist))
    p = np.asarray(dist.p, dtype=float)
    return p.max() - p


@dataclass(frozen=True)
class CostVector:
    """Costs for each of the k choices, all in [0, 1]."""

    c: tuple[float, ...]

    def __post_init__(self):
        if len(self.c) < 1:
            raise ValueError("empty cost vector")
        if any(not (0.0 <= v <= 1.0) for v in self.c):
            raise ValueError("costs must lie in [0, 1]")

    @property
    def k(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class Example:
    """One observation: a feature vector plus either a label or a cost vector."""

    features: tuple[float, ...]
    label: int | None = None
    costs: CostVector | None = None

    def __post_init__(self):
        if (self.label is None) == (self.costs is None):
            raise ValueError("exactly one of label / costs must be given")
        if self.label is not None and self.label < 0:
            raise ValueError("label must be nonnegative")


@dataclass(frozen=True)
class WeightedBinaryExample:
    """Importance-weighted binary example; bit 1 means the left side."""

    features: tuple[float, ...]
    y: int
    w: float

    def __post_init__(self):
        if self.y not in (0, 1):
            raise ValueError("binary label must be 0 or 1")
        if not math.isfinite(self.w) or self.w < 0:
            raise ValueError("weight must be finite and nonnegative")


@dataclass(frozen=True)
class AuditCounters:
    """Importance-weight audit of one tree evaluation on one cost vector.

    sum_importance is the importance mass over all nodes, mistake_importance
    the mass at nodes where the costlier input advanced, winner_cost the cost
    of the label the tree finally outputs.
    """

    sum_importance: float
    mistake_importance: float
    winner_cost: float

    def __post_init__(self):
        if not (-1e-12 <= self.mistake_importance <= self.sum_importance + 1e-12):
            raise ValueError("need 0 <= mistake_importance <= sum_importance")
        if not (0.0 <= self.winner_cost <= 1.0):
            raise ValueError("winner cost must lie in [0, 1]")
