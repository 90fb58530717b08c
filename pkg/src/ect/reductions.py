"""Multiclass-to-binary reductions over label trees.

Four reduction families share one model container:

* ``tree`` - every node trained on all examples under it, no filtering
* ``filter_tree`` - nodes trained leaves-to-root on the examples whose label
  survived all lower rounds, so each node learns "which input is better"
* ``cs_filter_tree`` - cost-sensitive variant; each node sees an importance
  weighted example whose label is the cheaper input and whose weight is the
  cost difference
* ``all_pairs`` / ``apft`` - one classifier for every unordered pair of
  labels; plain all-pairs decodes by vote count, the tree-located variant
  consults the single pair classifier per node for the pair that actually
  arrives there

Decoding the tree kinds walks root to leaf, evaluating exactly one classifier
per level. The pair-located variant needs every node's arriving pair, so its
decode resolves subtree winners bottom-up; its root-to-winner path still
touches at most ceil(log2 k) classifiers.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import LEFT_BIT, LabelTree, build_balanced_tree, is_leaf, leaf_label
from .learners import ConstantModel, LearnerSpec, learn, model_from_params

MODEL_FORMAT = "ect-model"
MODEL_VERSION = 1

REDUCTION_KINDS = ("tree", "filter_tree", "cs_filter_tree", "all_pairs", "apft")


class TrainingDataError(ValueError):
    pass


@dataclass
class TrainCounters:
    """Bookkeeping from one training run.

    examples_per_node counts binary examples actually handed to the learner;
    per_level_touches aggregates them by tree level, which for the filtered
    kinds can never exceed the multiclass sample size per level.
    """

    examples_per_node: dict = field(default_factory=dict)
    per_level_touches: dict = field(default_factory=dict)
    oracle_calls: int = 0
    empty_node_warnings: list = field(default_factory=list)

    def record(self, node: int, level: int, count: int):
        self.examples_per_node[node] = count
        self.per_level_touches[level] = self.per_level_touches.get(level, 0) + count
        self.oracle_calls += 1


class NodeClassifierSet:
    """One binary decision function per internal node.

    Either a separate model per node, or a single shared model consuming the
    node identity as a one-hot feature block appended to the input.
    """

    def __init__(self, n_nodes: int, models: dict | None = None, shared=None):
        if (models is None) == (shared is None):
            raise ValueError("exactly one of models / shared must be given")
        self.n_nodes = n_nodes
        self.models = models
        self.shared = shared

    def augment(self, x, node: int) -> np.ndarray:
        onehot = np.zeros(self.n_nodes)
        onehot[node] = 1.0
        return np.concatenate([np.asarray(x, dtype=float), onehot])

    def predict_bit(self, node: int, x) -> int:
        if self.shared is not None:
            return self.shared.predict_one(self.augment(x, node))
        return self.models[node].predict_one(np.asarray(x, dtype=float))

    def to_params(self) -> dict:
        if self.shared is not None:
            return {"mode": "shared", "n_nodes": self.n_nodes, "model": self.shared.params()}
        return {
            "mode": "per_node",
            "n_nodes": self.n_nodes,
            "models": {str(n): m.params() for n, m in sorted(self.models.items())},
        }

    @classmethod
    def from_params(cls, params: dict) -> "NodeClassifierSet":
        if params["mode"] == "shared":
            return cls(params["n_nodes"], shared=model_from_params(params["model"]))
        models = {int(n): model_from_params(p) for n, p in params["models"].items()}
        return cls(params["n_nodes"], models=models)


@dataclass
class DecodeResult:
    label: int
    path: list  # internal node indices from root toward the output leaf
    evaluations: int  # classifier consultations along that path
    total_evaluations: int  # all consultations (differs from path for apft/all_pairs)


@dataclass
class ReductionModel:
    kind: str
    k: int
    tree: LabelTree | None
    nodes: NodeClassifierSet | None
    pair_models: dict | None  # {(i, j) with i < j: model}, bit 1 means i wins
    counters: TrainCounters
    spec: LearnerSpec | None = None
    label_names: list | None = None

    def decode(self, x) -> int:
        return self.decode_verbose(x).label

    def decode_verbose(self, x) -> DecodeResult:
        x = np.asarray(x, dtype=float)
        if self.kind in ("tree", "filter_tree", "cs_filter_tree"):
            return self._decode_tree(x)
        if self.kind == "all_pairs":
            return self._decode_votes(x)
        return self._decode_paired_tree(x)

    def _decode_tree(self, x) -> DecodeResult:
        path = []
        ref = 0
        evals = 0
        while not is_leaf(ref):
            path.append(ref)
            bit = self.nodes.predict_bit(ref, x)
            evals += 1
            left, right = self.tree.children[ref]
            ref = left if bit == LEFT_BIT else right
        return DecodeResult(leaf_label(ref), path, evals, evals)

    def _decode_votes(self, x) -> DecodeResult:
        votes = np.zeros(self.k, dtype=int)
        evals = 0
        for (i, j), model in self.pair_models.items():
            votes[i if model.predict_one(x) == 1 else j] += 1
            evals += 1
        # ties broken toward the lowest label by argmax
        return DecodeResult(int(np.argmax(votes)), [], 0, evals)

    def _decode_paired_tree(self, x) -> DecodeResult:
        winner: dict[int, int] = {}
        consulted: dict[int, bool] = {}
        total = 0
        for node in self.tree.bottom_up():
            left, right = self.tree.children[node]
            a = leaf_label(left) if is_leaf(left) else winner[left]
            b = leaf_label(right) if is_leaf(right) else winner[right]
            if a == b:
                winner[node] = a
                consulted[node] = False
                continue
            key = (min(a, b), max(a, b))
            model = self.pair_models.get(key)
            bit = 1 if model is None else model.predict_one(x)
            winner[node] = key[0] if bit == 1 else key[1]
            consulted[node] = True
            total += 1
        label = winner[0]
        path = [n for (n, _) in self.tree.path_to(label)]
        path_evals = sum(1 for n in path if consulted[n])
        return DecodeResult(label, path, path_evals, total)

    def predict(self, X) -> np.ndarray:
        return np.array([self.decode(row) for row in np.asarray(X, dtype=float)], dtype=int)

    def to_dict(self) -> dict:
        d = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "k": self.k,
            "label_names": self.label_names,
        }
        if self.tree is not None:
            d["tree_children"] = [list(c) for c in self.tree.children]
        if self.nodes is not None:
            d["nodes"] = self.nodes.to_params()
        if self.pair_models is not None:
            d["pairs"] = {f"{i},{j}": m.params() for (i, j), m in sorted(self.pair_models.items())}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReductionModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError("not a model container")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        tree = build_balanced_tree(d["k"]) if "tree_children" in d else None
        if tree is not None and [list(c) for c in tree.children] != d["tree_children"]:
            raise ValueError("model tree does not match the balanced builder")
        nodes = NodeClassifierSet.from_params(d["nodes"]) if "nodes" in d else None
        pairs = None
        if "pairs" in d:
            pairs = {}
            for key, params in d["pairs"].items():
                i, j = (int(v) for v in key.split(","))
                pairs[(i, j)] = model_from_params(params)
        return cls(
            kind=d["kind"],
            k=d["k"],
            tree=tree,
            nodes=nodes,
            pair_models=pairs,
            counters=TrainCounters(),
            label_names=d.get("label_names"),
        )

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ReductionModel":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _check_multiclass(X, y, k):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=int)
    if len(y) == 0:
        raise TrainingDataError("no training examples")
    if y.min() < 0 or y.max() >= k:
        raise TrainingDataError(f"labels must lie in 0..{k - 1}")
    return X, y


def _learn_node(spec, X_n, y_n, w_n, node, level, counters):
    """Fit one node; empty filtered sets become a constant-left classifier."""
    counters.record(node, level, len(y_n))
    if len(y_n) == 0:
        counters.empty_node_warnings.append(node)
        warnings.warn(f"node {node}: empty filtered training set, using constant-left")
        return ConstantModel(LEFT_BIT)
    return learn(spec, X_n, y_n, w_n)


def train_tree(X, y, tree: LabelTree, spec: LearnerSpec, sample_weight=None) -> ReductionModel:
    """Unfiltered tree reduction: node n sees every example under its leafset."""
    X, y = _check_multiclass(X, y, tree.k)
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    counters = TrainCounters()
    models = {}
    for node in tree.bottom_up():
        mask = np.isin(y, tree.leafsets[node])
        bits = np.array([tree.side_of(node, yi) for yi in y[mask]], dtype=int)
        models[node] = _learn_node(
            spec, X[mask], bits, w[mask], node, tree.depths[node], counters
        )
    nodes = NodeClassifierSet(tree.n_internal, models=models)
    return ReductionModel("tree", tree.k, tree, nodes, None, counters, spec)


def _subtree_winners(tree, nodes_so_far, node, X, winner):
    """Current winners of both children of ``node`` for every row of X."""
    left, right = tree.children[node]
    n = len(X)
    a = np.full(n, leaf_label(left)) if is_leaf(left) else winner[left]
    b = np.full(n, leaf_label(right)) if is_leaf(right) else winner[right]
    return a, b


def _train_filtered(kind, X, y_or_costs, tree, spec, sample_weight, shared=False):
    n = len(X)
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    counters = TrainCounters()
    models = {}
    winner: dict[int, np.ndarray] = {}
    shared_rows = [] if shared else None  # (row index, node, bit, weight)

    cost_sensitive = kind == "cs_filter_tree"
    if cost_sensitive:
        C = y_or_costs
    else:
        y = y_or_costs

    for node in tree.bottom_up():
        a, b = _subtree_winners(tree, models, node, X, winner)
        if cost_sensitive:
            ca = C[np.arange(n), a]
            cb = C[np.arange(n), b]
            weights = np.abs(ca - cb) * w
            mask = weights > 0.0
            bits = (ca < cb).astype(int)  # cheaper side wins; bit 1 = left
        else:
            # an example reaches this node iff its label survived below
            in_scope = np.isin(y, tree.leafsets[node])
            mask = in_scope & ((y == a) | (y == b))
            bits = (y == a).astype(int)
            weights = w
        model = _learn_node(
            spec, X[mask], bits[mask], weights[mask], node, tree.depths[node], counters
        )
        models[node] = model
        if shared:
            for i in np.nonzero(mask)[0]:
                shared_rows.append((i, node, int(bits[i]), float(weights[i])))
        predicted = np.array([model.predict_one(row) for row in X], dtype=int)
        winner[node] = np.where(predicted == LEFT_BIT, a, b)

    if shared:
        # the per-node pass above supplies the filtering; one shared model
        # over (features, one-hot node id) then replaces the node models
        ncs = _fit_shared(tree, X, shared_rows, spec, counters)
        return ReductionModel(kind, tree.k, tree, ncs, None, counters, spec)

    nodes = NodeClassifierSet(tree.n_internal, models=models)
    return ReductionModel(kind, tree.k, tree, nodes, None, counters, spec)


def _fit_shared(tree, X, rows, spec, counters):
    if not rows:
        raise TrainingDataError("no binary examples were generated")
    n_nodes = tree.n_internal
    feats = np.zeros((len(rows), X.shape[1] + n_nodes))
    bits = np.zeros(len(rows), dtype=int)
    ws = np.zeros(len(rows))
    for r, (i, node, bit, weight) in enumerate(rows):
        feats[r, : X.shape[1]] = X[i]
        feats[r, X.shape[1] + node] = 1.0
        bits[r] = bit
        ws[r] = weight
    counters.oracle_calls += 1
    model = learn(spec, feats, bits, ws)
    return NodeClassifierSet(n_nodes, shared=model)


def train_filter_tree(
    X, y, tree: LabelTree, spec: LearnerSpec, sample_weight=None, shared=False
) -> ReductionModel:
    """Filtered tree reduction, trained leaves-to-root.

    An example reaches node n only while its label keeps winning: every node
    below n on the label's path must have predicted the label's side.
    """
    X, y = _check_multiclass(X, y, tree.k)
    return _train_filtered("filter_tree", X, y, tree, spec, sample_weight, shared)


def train_cs_filter_tree(
    X, C, tree: LabelTree, spec: LearnerSpec, sample_weight=None
) -> ReductionModel:
    """Cost-sensitive filtered tree.

    At node n with current inputs a, b the induced example prefers the cheaper
    input with importance |c_a - c_b|; zero-weight examples are skipped.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    C = np.asarray(C, dtype=float)
    if len(C) == 0:
        raise TrainingDataError("no training examples")
    if C.shape[1] != tree.k:
        raise TrainingDataError("cost rows must have k entries")
    if C.min() < 0 or C.max() > 1:
        raise TrainingDataError("costs must lie in [0, 1]")
    return _train_filtered("cs_filter_tree", X, C, tree, spec, sample_weight)


def train_all_pairs(X, y, k: int, spec: LearnerSpec, sample_weight=None) -> ReductionModel:
    """One classifier per unordered label pair; decode by vote count."""
    if k < 2:
        raise ValueError("need at least 2 classes")
    X, y = _check_multiclass(X, y, k)
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    counters = TrainCounters()
    pair_models = {}
    for i in range(k - 1):
        for j in range(i + 1, k):
            mask = (y == i) | (y == j)
            bits = (y[mask] == i).astype(int)
            pair_models[(i, j)] = _learn_node(
                spec, X[mask], bits, w[mask], len(pair_models), 0, counters
            )
    return ReductionModel("all_pairs", k, None, None, pair_models, counters, spec)


def train_apft(X, y, tree: LabelTree, spec: LearnerSpec, sample_weight=None) -> ReductionModel:
    """Pair classifiers located at the tree node where each pair can meet.

    Each unordered pair has exactly one home: the lowest common ancestor of
    its leaves. Training filters examples exactly like the filter tree, but
    groups them by the arriving pair instead of pooling the whole node.
    """
    X, y = _check_multiclass(X, y, tree.k)
    n = len(y)
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    counters = TrainCounters()
    pair_models: dict[tuple, object] = {}
    node_models: dict[int, dict] = {}
    winner: dict[int, np.ndarray] = {}

    for node in tree.bottom_up():
        a, b = _subtree_winners(tree, None, node, X, winner)
        in_scope = np.isin(y, tree.leafsets[node])
        reach = in_scope & ((y == a) | (y == b))
        # every pair that can meet here gets a classifier, trained on the
        # examples whose arriving pair matches
        left, right = tree.children[node]
        reachable_pairs = [
            (min(i, j), max(i, j))
            for i in tree.leaves_under(left)
            for j in tree.leaves_under(right)
        ]
        trained = {}
        for (i, j) in reachable_pairs:
            mask = reach & (np.minimum(a, b) == i) & (np.maximum(a, b) == j)
            bits = (y[mask] == i).astype(int)
            trained[(i, j)] = _learn_node(
                spec, X[mask], bits, w[mask], len(pair_models), tree.depths[node], counters
            )
            pair_models[(i, j)] = trained[(i, j)]
        node_models[node] = trained
        # resolve this node's winner per example for the filtering above
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        out = a.copy()
        differ = a != b
        for idx in np.nonzero(differ)[0]:
            m = trained.get((lo[idx], hi[idx]))
            bit = 1 if m is None else m.predict_one(X[idx])
            out[idx] = lo[idx] if bit == 1 else hi[idx]
        winner[node] = out

    return ReductionModel("apft", tree.k, tree, None, pair_models, counters, spec)


def compute_reach_masks(model: ReductionModel, X, y) -> dict[int, np.ndarray]:
    """Which examples reach each node under the trained decisions.

    For the filtered kinds an example reaches node n iff its label is under n
    and equals the current winner of its side, which makes the reach sets
    shrink monotonically toward the root.
    """
    tree = model.tree
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n = len(y)
    winner: dict[int, np.ndarray] = {}
    reach: dict[int, np.ndarray] = {}
    for node in tree.bottom_up():
        a, b = _subtree_winners(tree, None, node, X, winner)
        in_scope = np.isin(y, tree.leafsets[node])
        reach[node] = in_scope & ((y == a) | (y == b))
        if model.kind == "apft":
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            out = a.copy()
            for idx in np.nonzero(a != b)[0]:
                m = model.pair_models.get((lo[idx], hi[idx]))
                bit = 1 if m is None else m.predict_one(X[idx])
                out[idx] = lo[idx] if bit == 1 else hi[idx]
            winner[node] = out
        else:
            bits = np.array([model.nodes.predict_bit(node, row) for row in X], dtype=int)
            winner[node] = np.where(bits == LEFT_BIT, a, b)
    return reach
