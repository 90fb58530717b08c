"""Executable verification of the regret and depth guarantees.

Every inequality the package relies on is checked numerically here:

* the cost-sensitive regret of a decoded tree against the importance-weighted
  binary regret it induces (both the sum form and the k/2 form)
* the importance audit inequality S + winner_cost <= mistakes + k/2
* the alternating-cost construction that nearly saturates the k/2 bound
* the three-class noise distribution separating the unfiltered tree from the
  filtered one
* closed-form depth bounds against measured schedules and the pool-occupancy
  tracker
* measured adversarial regret ratios against the tournament bounds (reported,
  not asserted)

Cost distributions are finite atom lists [(probability, cost vector)] over a
single context, which keeps every check exact up to float arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import LEFT_BIT, AuditCounters, LabelTree, build_balanced_tree, is_leaf, leaf_label
from .learners import LearnerSpec
from .reductions import train_filter_tree, train_tree
from .tournaments import (
    BudgetFullLie,
    ParityAdversary,
    RateRandom,
    TrueOrderComparator,
    build_final_tree,
    build_schedule,
    measured_regret_ratio,
    run_tournament,
)

CHECK_TOL = 1e-9


class CounterexampleError(AssertionError):
    """A checked inequality failed; carries a replayable instance dump."""

    def __init__(self, message, dump):
        super().__init__(message)
        self.dump = dump


# ---------------------------------------------------------------------------
# cost distributions


def cost_atoms_from_labels(p) -> list:
    """Unit-loss cost atoms for a label distribution: cost 0 on the true label."""
    p = [float(v) for v in p]
    k = len(p)
    atoms = []
    for y, prob in enumerate(p):
        if prob > 0:
            c = np.ones(k)
            c[y] = 0.0
            atoms.append((prob, c))
    return atoms


def random_cost_atoms(k, rng, max_atoms=4) -> list:
    n = int(rng.integers(1, max_atoms + 1))
    probs = rng.dirichlet(np.ones(n))
    return [(float(p), rng.uniform(0.0, 1.0, size=k)) for p in probs]


# ---------------------------------------------------------------------------
# filter-tree regret checks


@dataclass
class NodeAudit:
    node: int
    left_input: int
    right_input: int
    chosen: int
    mean_weight: float  # expected importance |c_a - c_b| at this node
    regret_mass: float  # 0 when the cheaper input advanced, else the cost gap
    binary_regret: float  # regret_mass / mean_weight when defined


def padded_tree_size(k: int) -> int:
    """Size of the tree after splitting every odd subtree into even halves.

    The half-k comparison is provable per cost realization only for trees
    whose every split is even; odd subtrees must be padded with a zero-cost
    duplicate class first, which inflates the constant from k/2 to this
    value over 2.
    """
    if k <= 2:
        return 2
    return padded_tree_size(math.ceil(k / 2)) + padded_tree_size(k // 2)


@dataclass
class RegretReport:
    k: int
    assignment: tuple
    winner: int
    cost_regret: float
    nodes: list
    sum_weights: float
    average_binary_regret: float
    bound_sum: float  # average regret times total weight; holds always
    bound_half_k: float  # k/2 times average regret; realization-level only
    bound_padded: float  # padded-tree constant times average regret
    deterministic: bool  # single cost atom, i.e. costs are fixed given x
    slack_sum: float = field(init=False)
    slack_half_k: float = field(init=False)
    slack_padded: float = field(init=False)

    def __post_init__(self):
        self.slack_sum = self.bound_sum - self.cost_regret
        self.slack_half_k = self.bound_half_k - self.cost_regret
        self.slack_padded = self.bound_padded - self.cost_regret

    @property
    def holds(self) -> bool:
        """The guarantees this library asserts: the sum-form bound on every
        instance, plus the padded half-k form whenever costs are deterministic
        (where it is a statement about one realized evaluation)."""
        if self.slack_sum < -CHECK_TOL:
            return False
        if self.deterministic and self.slack_padded < -CHECK_TOL:
            return False
        return True

    @property
    def holds_literal_half_k(self) -> bool:
        return self.slack_half_k >= -CHECK_TOL


def check_regret_bounds(
    k, atoms, assignment, tree: LabelTree | None = None, strict: bool = False
) -> RegretReport:
    """Audit one (cost distribution, node decision assignment) instance.

    ``assignment`` holds one bit per internal node, 1 sending the left input
    up. The report carries the decoded winner's cost regret and the bounds
    derived from the per-node importance-weighted regrets. With ``strict`` a
    violated guarantee raises CounterexampleError whose dump replays the
    instance bit-exactly.
    """
    tree = tree or build_balanced_tree(k)
    if len(assignment) != tree.n_internal:
        raise ValueError("need one decision bit per internal node")
    probs = np.array([p for p, _ in atoms])
    costs = np.array([c for _, c in atoms])  # (atoms, k)
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("atom probabilities must sum to 1")
    exp_cost = probs @ costs

    winner_of: dict[int, int] = {}

    def input_label(ref):
        return leaf_label(ref) if is_leaf(ref) else winner_of[ref]

    audits = []
    sum_w = 0.0
    regret_mass_total = 0.0
    for node in tree.bottom_up():
        left, right = tree.children[node]
        a, b = input_label(left), input_label(right)
        chosen, other = (a, b) if assignment[node] == LEFT_BIT else (b, a)
        winner_of[node] = chosen
        mean_w = float(probs @ np.abs(costs[:, a] - costs[:, b]))
        mass = max(0.0, float(exp_cost[chosen] - exp_cost[other]))
        audits.append(
            NodeAudit(node, a, b, chosen, mean_w, mass, mass / mean_w if mean_w > 0 else 0.0)
        )
        sum_w += mean_w
        regret_mass_total += mass

    winner = winner_of[0]
    cost_regret = float(exp_cost[winner] - exp_cost.min())
    avg = regret_mass_total / sum_w if sum_w > 0 else 0.0
    report = RegretReport(
        k=k,
        assignment=tuple(int(v) for v in assignment),
        winner=winner,
        cost_regret=cost_regret,
        nodes=audits,
        sum_weights=sum_w,
        average_binary_regret=avg,
        bound_sum=avg * sum_w,
        bound_half_k=k * avg / 2.0,
        bound_padded=padded_tree_size(k) * avg / 2.0,
        deterministic=len(atoms) == 1,
    )
    if strict and not report.holds:
        dump = instance_dump(k, atoms, assignment)
        dump["cost_regret"] = report.cost_regret
        dump["bound_sum"] = report.bound_sum
        dump["bound_padded"] = report.bound_padded
        raise CounterexampleError(
            f"regret bound violated: cost_regret {report.cost_regret} vs "
            f"bound_sum {report.bound_sum}",
            dump,
        )
    return report


def instance_dump(k, atoms, assignment) -> dict:
    return {
        "k": k,
        "atoms": [[float(p), [float(v) for v in c]] for p, c in atoms],
        "assignment": [int(v) for v in assignment],
    }


def replay_instance(dump: dict) -> RegretReport:
    atoms = [(p, np.array(c)) for p, c in dump["atoms"]]
    return check_regret_bounds(dump["k"], atoms, dump["assignment"])


@dataclass
class SweepSummary:
    instances: int
    worst_slack_sum: float
    worst_slack_half_k: float
    worst_slack_padded: float
    counterexamples: list  # violations of the asserted guarantees
    literal_half_k_violations: list  # instances where plain k/2 fails (known gap)

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def regret_bound_sweep(ks=range(2, 7), n_dists=200, seed=0, multiclass_share=0.25) -> SweepSummary:
    """Random cost distributions times all decision assignments per k.

    A share of the distributions are unit-loss multiclass atoms, the rest
    general cost mixtures (including single-atom, i.e. deterministic, ones).
    Violations of the asserted guarantees become replayable counterexamples;
    instances where only the literal k/2 comparison fails are collected
    separately, since that form does not survive stochastic conditional costs
    (see the report fields on RegretReport).
    """
    rng = np.random.default_rng(seed)
    instances = 0
    worst_sum = math.inf
    worst_half = math.inf
    worst_padded = math.inf
    bad = []
    literal = []
    for k in ks:
        tree = build_balanced_tree(k)
        n_assign = 2 ** tree.n_internal
        for _ in range(n_dists):
            if rng.random() < multiclass_share:
                atoms = cost_atoms_from_labels(rng.dirichlet(np.ones(k)))
            else:
                atoms = random_cost_atoms(k, rng)
            for code in range(n_assign):
                assignment = [(code >> i) & 1 for i in range(tree.n_internal)]
                report = check_regret_bounds(k, atoms, assignment, tree)
                instances += 1
                worst_sum = min(worst_sum, report.slack_sum)
                worst_half = min(worst_half, report.slack_half_k)
                if report.deterministic:
                    worst_padded = min(worst_padded, report.slack_padded)
                if not report.holds:
                    bad.append(instance_dump(k, atoms, assignment))
                if not report.holds_literal_half_k:
                    literal.append(instance_dump(k, atoms, assignment))
    return SweepSummary(instances, worst_sum, worst_half, worst_padded, bad, literal)


# ---------------------------------------------------------------------------
# importance audit (single cost vector)


@dataclass
class AuditResult:
    counters: AuditCounters
    winner: int
    holds: bool


def importance_audit(costs, decisions, tree: LabelTree | None = None) -> AuditResult:
    """Evaluate one tree pass and check S + winner_cost <= mistakes + k/2."""
    costs = np.asarray(costs, dtype=float)
    k = len(costs)
    tree = tree or build_balanced_tree(k)
    winner_of: dict[int, int] = {}
    s_total = 0.0
    mistakes = 0.0
    for node in tree.bottom_up():
        left, right = tree.children[node]
        a = leaf_label(left) if is_leaf(left) else winner_of[left]
        b = leaf_label(right) if is_leaf(right) else winner_of[right]
        chosen, other = (a, b) if decisions[node] == LEFT_BIT else (b, a)
        winner_of[node] = chosen
        w = abs(float(costs[a] - costs[b]))
        s_total += w
        if costs[chosen] > costs[other]:
            mistakes += w
    winner = winner_of[0]
    counters = AuditCounters(s_total, mistakes, float(costs[winner]))
    holds = s_total + costs[winner] <= mistakes + k / 2.0 + CHECK_TOL
    return AuditResult(counters, winner, holds)


def audit_sweep(k_values=(2, 4, 8, 16), n_per_k=10_000, seed=0) -> dict:
    """Vectorized random sweep of the importance audit inequality."""
    rng = np.random.default_rng(seed)
    out = {"instances": 0, "violations": 0, "worst_slack": math.inf}
    for k in k_values:
        tree = build_balanced_tree(k)
        n = n_per_k
        costs = rng.uniform(0.0, 1.0, size=(n, k))
        bits = rng.integers(0, 2, size=(n, tree.n_internal))
        rows = np.arange(n)
        winner_of = {}
        s_total = np.zeros(n)
        mistakes = np.zeros(n)
        for node in tree.bottom_up():
            left, right = tree.children[node]
            a = np.full(n, leaf_label(left)) if is_leaf(left) else winner_of[left]
            b = np.full(n, leaf_label(right)) if is_leaf(right) else winner_of[right]
            ca, cb = costs[rows, a], costs[rows, b]
            w = np.abs(ca - cb)
            s_total += w
            chosen = np.where(bits[:, node] == LEFT_BIT, a, b)
            cc = costs[rows, chosen]
            mistakes += np.where(cc > np.minimum(ca, cb), w, 0.0)
            winner_of[node] = chosen
        slack = mistakes + k / 2.0 - s_total - costs[rows, winner_of[0]]
        out["instances"] += n
        out["violations"] += int((slack < -CHECK_TOL).sum())
        out["worst_slack"] = min(out["worst_slack"], float(slack.min()))
    return out


# ---------------------------------------------------------------------------
# the alternating-cost construction


@dataclass
class TightnessResult:
    regret: float
    sum_importance: float
    mistake_importance: float
    ratio: float


def tightness_example(k: int) -> TightnessResult:
    """Alternating 0/1 costs with the worst label winning every round.

    Even positions cost 0, odd cost 1, and the last label (odd position, cost
    1) is pushed through all of its log2(k) games. The audit then shows
    sum_importance = k/2 + log2(k) - 1 against only log2(k) of mistake mass.
    """
    if k < 4 or (k & (k - 1)) != 0:
        raise ValueError("need a power of two, at least 4")
    costs = np.array([i % 2 for i in range(k)], dtype=float)
    tree = build_balanced_tree(k)
    pushed = k - 1
    decisions = {}
    winner_of = {}
    for node in tree.bottom_up():
        left, right = tree.children[node]
        a = leaf_label(left) if is_leaf(left) else winner_of[left]
        b = leaf_label(right) if is_leaf(right) else winner_of[right]
        if pushed in (a, b):
            bit = LEFT_BIT if a == pushed else 1 - LEFT_BIT
        else:
            # otherwise the cheaper input advances, ties toward the left
            bit = LEFT_BIT if costs[a] <= costs[b] else 1 - LEFT_BIT
        decisions[node] = bit
        winner_of[node] = a if bit == LEFT_BIT else b
    bits = [decisions[n] for n in range(tree.n_internal)]
    audit = importance_audit(costs, bits, tree)
    assert audit.winner == pushed
    regret = float(costs[audit.winner] - costs.min())
    c = audit.counters
    return TightnessResult(
        regret, c.sum_importance, c.mistake_importance,
        regret * c.sum_importance / c.mistake_importance,
    )


# ---------------------------------------------------------------------------
# tree vs. filtered tree on the three-class noise distribution


def three_class_noise(eps: float) -> tuple:
    if not 0 < eps < 1 / 12:
        raise ValueError("eps must lie in (0, 1/12)")
    return (0.25 + eps, 0.25 + eps, 0.5 - 2 * eps)


@dataclass
class InconsistencyResult:
    tree_regret: float
    filter_tree_regret: float
    tree_label: int
    filter_tree_label: int


def inconsistency_demo(
    eps: float,
    n_samples: int | None = None,
    spec: LearnerSpec | None = None,
    seed: int = 0,
) -> InconsistencyResult:
    """Train both reductions on the two-near-ties noise distribution.

    Without ``n_samples`` the training set is the exact distribution (one
    context, probability weights) and a bayes_oracle spec, so the regrets are
    the analytic ones. With sampling the regrets are still computed exactly
    from the distribution for whatever labels the trained models decode.
    """
    p = three_class_noise(eps)
    tree = build_balanced_tree(3)
    if n_samples is None:
        spec = spec or LearnerSpec("bayes_oracle")
        X = np.ones((3, 1))
        y = np.arange(3)
        w = np.array(p)
        tree_model = train_tree(X, y, tree, spec, sample_weight=w)
        ft_model = train_filter_tree(X, y, tree, spec, sample_weight=w)
    else:
        spec = spec or LearnerSpec("logistic_sgd")
        rng = np.random.default_rng(seed)
        y = rng.choice(3, size=n_samples, p=p)
        X = np.ones((n_samples, 1))
        tree_model = train_tree(X, y, tree, spec)
        ft_model = train_filter_tree(X, y, tree, spec)
    x = np.ones(1)
    t_label = tree_model.decode(x)
    f_label = ft_model.decode(x)
    best = max(p)
    return InconsistencyResult(best - p[t_label], best - p[f_label], t_label, f_label)


# ---------------------------------------------------------------------------
# depth bounds


def next_pow2(m: int) -> int:
    return 1 if m <= 1 else 1 << math.ceil(math.log2(m))


def prev_pow2(m: int) -> int:
    return 1 if m <= 1 else 1 << int(math.log2(m))


def chernoff_depth(k: int, m: int) -> float:
    """Round estimate for the pool process: the point where the expected
    number of labels still alive in any pool drops to one."""
    lk = math.log(k)
    return 2 * (m - 1) + lk + math.sqrt(4 * (m - 1) * lk + lk * lk)


@dataclass
class DepthBounds:
    k: int
    m: int
    first_phase_cases: tuple  # four first-phase bounds; case 4 None out of domain
    importance_cases: tuple  # the four end-to-end bounds
    pow2_above: int
    pow2_below: int
    chernoff: float
    second_phase: int  # importance depth of the final tree

    def min_importance_bound(self) -> float:
        return min(v for v in self.importance_cases if v is not None)


def depth_bounds(k: int, m: int) -> DepthBounds:
    if k < 2 or m < 1:
        raise ValueError("need k >= 2 and m >= 1")
    L = math.ceil(math.log2(k))
    in_domain = m <= 4 * math.log2(k)
    lk = math.log(k)
    fp = (
        L + m * math.ceil(math.log2(L + 1)),
        1.5 * L + 3 * m + 1,
        math.ceil(k / 2) + 2 * m,
        chernoff_depth(k, m) if in_domain else None,
    )
    imp = (
        L + m * math.ceil(math.log2(L + 1)) + next_pow2(m),
        1.5 * L + 3 * m + next_pow2(m),
        math.ceil(k / 2) + 2 * m + next_pow2(m),
        (2 * m + next_pow2(m) + 2 * lk + 2 * math.sqrt(m * lk)) if in_domain else None,
    )
    return DepthBounds(
        k, m, fp, imp, next_pow2(m), prev_pow2(m), chernoff_depth(k, m),
        build_final_tree(m).max_path_importance(),
    )


@dataclass
class LevelTrackerResult:
    rounds: int
    occupancy: list  # per-round tuple of pool sizes, starting state included

    @property
    def final_occupancy(self) -> tuple:
        return self.occupancy[-1]


def level_tracker(k: int, m: int, max_rounds: int = 100_000) -> LevelTrackerResult:
    """Pure-count simulation of the loss-pool process.

    Each round every pool with n >= 2 members plays floor(n/2) games; winners
    stay (plus the bye), losers drop one pool. Stops once every pool holds at
    most one label.
    """
    if k < 2 or m < 1:
        raise ValueError("need k >= 2 and m >= 1")
    pools = [k] + [0] * (m - 1)
    occupancy = [tuple(pools)]
    rounds = 0
    while any(n > 1 for n in pools):
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("tracker failed to stabilize")
        losers = [n // 2 for n in pools]
        pools = [n - n // 2 for n in pools]
        for j in range(1, m):
            pools[j] += losers[j - 1]
        occupancy.append(tuple(pools))
    return LevelTrackerResult(rounds, occupancy)


def measured_importance_depth(k: int, m: int, semantics: str = "complete") -> int:
    """First-phase rounds of a truthful schedule plus the final-tree path mass."""
    schedule = build_schedule(k, m, semantics)
    return schedule.n_rounds + build_final_tree(m).max_path_importance()


# ---------------------------------------------------------------------------
# regret-ratio report


@dataclass
class RatioRow:
    adversary: str
    winner: int
    dethroned: bool
    ratio: float
    weighted_errors: float


@dataclass
class RatioReport:
    k: int
    m: int
    semantics: str
    rows: list
    worst_ratio: float
    bound_large_m: float | None  # 2 + pow2(m)/m + k/(2m), for m >= 2, k > 2
    bound_log: float | None  # 4 + 2 ln(k)/m + 2 sqrt(ln(k)/m) in its domain
    single_elim_depth_bound: int | None  # tree depth, the m = 1 comparison


def ratio_report(k, m, semantics="complete", adversaries=None, seed=0) -> RatioReport:
    """Measured regret ratios from an adversary sweep, next to the bounds.

    The ratios are observations, not assertions: the bounds hold for the
    construction's guarantees and the sweep simply records how close the
    stock adversaries come.
    """
    comparator = TrueOrderComparator(k)
    if adversaries is None:
        delay = max(0, math.ceil(math.log2(k)) - 1)
        adversaries = [BudgetFullLie(b) for b in range(1, m + 1)]
        adversaries.append(BudgetFullLie(float("inf")))
        adversaries.append(BudgetFullLie(float("inf"), delay_wins=delay))
        adversaries.append(ParityAdversary(0, k - 1))
        adversaries.append(RateRandom(0.25, seed))
    rows = []
    worst = 0.0
    for adv in adversaries:
        winner, transcript = run_tournament((k, m, semantics), None, comparator, adv)
        ratio = measured_regret_ratio(transcript, comparator.best)
        name = getattr(adv, "kind", type(adv).__name__)
        if isinstance(adv, BudgetFullLie):
            name = f"{name}(b={adv.budget})"
            if adv.delay_wins:
                name = f"{name[:-1]}, patient={adv.delay_wins})"
        rows.append(
            RatioRow(name, winner, winner != comparator.best, ratio,
                     transcript.weighted_error_total)
        )
        if ratio != math.inf:
            worst = max(worst, ratio)
    lnk = math.log(k)
    return RatioReport(
        k=k,
        m=m,
        semantics=semantics,
        rows=rows,
        worst_ratio=worst,
        bound_large_m=(2 + next_pow2(m) / m + k / (2 * m)) if (m >= 2 and k > 2) else None,
        bound_log=(4 + 2 * lnk / m + 2 * math.sqrt(lnk / m)) if m <= 4 * math.log2(k) else None,
        single_elim_depth_bound=math.ceil(math.log2(k)) if m == 1 else None,
    )
