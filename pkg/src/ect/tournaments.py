"""Multi-elimination tournaments with adversarial comparators.

A run has two phases. The first pairs the k labels inside m single-elimination
brackets; a label enters bracket i+1 the round after its bracket-i
participation ends, and within a bracket all waiting labels are paired
greedily each round (lowest-index label sits out when the count is odd). Two
first-phase semantics are supported:

* ``complete`` - every bracket is a full single elimination over all k
  labels, staggered so nobody plays twice in one round
* ``pool`` - labels live in loss-count pools that play round-synchronously;
  a label is eliminated outright at m losses

The second phase selects among the first-phase winners with a balanced tree
whose subtrees carry a charge equal to their leaf count. Advancing out of a
node is worth the opposite subtree's charge: that is the importance weight of
the decision, the number of repeated games the winner must take in the
repeated-match variant, and the price an adversary pays for corrupting it.
Comparing a label against itself carries weight zero.

Adversary models range from budgeted outcome flipping to the pair-parity and
staged strategies used for lower-bound experiments. ``min_dethroning_cost``
searches outcome space exhaustively (branch and bound on accumulated weighted
error) for the cheapest way to stop the true best label from winning.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .core import LabelTree, build_balanced_tree, is_leaf, leaf_label

SEMANTICS = ("complete", "pool")

VOID = "void"  # half-lie outcome: the game produced no winner


class ResourceRefusal(RuntimeError):
    """Raised when an exhaustive search would exceed its declared node cap."""


class AdversaryFault(RuntimeError):
    """Raised when an adversary exceeds its declared budget."""


def pair_up(labels):
    """Pair the given labels for one round; lowest index sits out when odd."""
    ls = sorted(labels)
    byes = [ls.pop(0)] if len(ls) % 2 else []
    return [(ls[i], ls[i + 1]) for i in range(0, len(ls), 2)], byes


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Match:
    round: int
    tournament: int  # bracket index (complete) or pool index (pool)
    a: int
    b: int
    winner: int


@dataclass
class TournamentSchedule:
    """Realized first-phase plan: per-round matches, losses, bracket winners."""

    k: int
    m: int
    semantics: str
    rounds: list  # list per round of Match
    losses: dict  # label -> loss count
    winners: list  # first-phase winners in tournament order
    eliminated: list  # pool semantics: labels that reached m losses
    occupancy: list | None = None  # pool semantics: per-round pool sizes

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def validate_legality(self):
        """No label may play twice in the same round; pool losses cap at m."""
        for matches in self.rounds:
            seen = set()
            for mt in matches:
                for lab in (mt.a, mt.b):
                    if lab in seen:
                        raise AssertionError(f"label {lab} plays twice in round {mt.round}")
                    seen.add(lab)
        if self.semantics == "pool":
            for lab, cnt in self.losses.items():
                if cnt > self.m:
                    raise AssertionError(f"label {lab} kept playing after {self.m} losses")
            for lab in self.eliminated:
                if self.losses[lab] != self.m:
                    raise AssertionError("eliminated label without exactly m losses")


class _CompleteState:
    """Mutable first-phase state for the complete semantics."""

    def __init__(self, k, m):
        self.k = k
        self.m = m
        self.available = [sorted(range(k))] + [[] for _ in range(m - 1)]
        self.entered = [k] + [0] * (m - 1)
        self.winners: list[int | None] = [None] * m
        self.round = 0

    def clone(self):
        st = object.__new__(_CompleteState)
        st.k, st.m = self.k, self.m
        st.available = [list(a) for a in self.available]
        st.entered = list(self.entered)
        st.winners = list(self.winners)
        st.round = self.round
        return st

    def done(self) -> bool:
        return all(w is not None for w in self.winners)

    def round_matches(self):
        out = []
        for i in range(self.m):
            if self.winners[i] is not None:
                continue
            matches, _ = pair_up(self.available[i])
            out.extend((i, a, b) for a, b in matches)
        return out

    def apply(self, outcomes):
        """Advance one round given {(bracket, a, b): winner-or-VOID}."""
        self.round += 1
        arrivals = [[] for _ in range(self.m + 1)]
        for i in range(self.m):
            if self.winners[i] is not None:
                continue
            matches, byes = pair_up(self.available[i])
            alive = list(byes)
            for a, b in matches:
                res = outcomes[(i, a, b)]
                if res == VOID:
                    alive.extend((a, b))  # replayed next round
                    continue
                loser = b if res == a else a
                alive.append(res)
                arrivals[i + 1].append(loser)
            self.available[i] = sorted(alive)
        for i in range(self.m):
            if self.winners[i] is not None:
                continue
            self.available[i] = sorted(self.available[i] + arrivals[i])
            self.entered[i] += len(arrivals[i])
            if self.entered[i] == self.k and len(self.available[i]) == 1:
                # bracket complete; its winner joins the next bracket next round
                self.winners[i] = self.available[i][0]
                if i + 1 < self.m:
                    arrivals[i + 1].append(self.winners[i])


class _PoolState:
    """Mutable first-phase state for the pool semantics."""

    def __init__(self, k, m):
        self.k = k
        self.m = m
        self.pools = [sorted(range(k))] + [[] for _ in range(m - 1)]
        self.losses = {lab: 0 for lab in range(k)}
        self.eliminated: list[int] = []
        self.round = 0

    def clone(self):
        st = object.__new__(_PoolState)
        st.k, st.m = self.k, self.m
        st.pools = [list(p) for p in self.pools]
        st.losses = dict(self.losses)
        st.eliminated = list(self.eliminated)
        st.round = self.round
        return st

    def done(self) -> bool:
        return all(len(p) <= 1 for p in self.pools)

    def round_matches(self):
        out = []
        for j, pool in enumerate(self.pools):
            matches, _ = pair_up(pool)
            out.extend((j, a, b) for a, b in matches)
        return out

    def apply(self, outcomes):
        self.round += 1
        arrivals = [[] for _ in range(self.m)]
        for j in range(self.m):
            matches, byes = pair_up(self.pools[j])
            alive = list(byes)
            for a, b in matches:
                res = outcomes[(j, a, b)]
                if res == VOID:
                    alive.extend((a, b))
                    continue
                loser = b if res == a else a
                alive.append(res)
                self.losses[loser] += 1
                if j + 1 < self.m:
                    arrivals[j + 1].append(loser)
                else:
                    self.eliminated.append(loser)
            self.pools[j] = sorted(alive)
        for j in range(self.m):
            self.pools[j] = sorted(self.pools[j] + arrivals[j])

    def winners(self):
        return [p[0] for p in self.pools if p]


def _first_phase_state(k, m, semantics):
    if k < 2 or m < 1:
        raise ValueError("need k >= 2 and m >= 1")
    if semantics not in SEMANTICS:
        raise ValueError(f"unknown semantics {semantics!r}")
    return _CompleteState(k, m) if semantics == "complete" else _PoolState(k, m)


def build_schedule(k, m, semantics="complete", decide=None) -> TournamentSchedule:
    """Play the first phase and record it.

    Pairings depend on outcomes, so the schedule is realized under ``decide``
    (a callable (round, tournament, a, b) -> winner); by default the
    lower-index label wins, which equals the true order of the identity
    comparator.
    """
    decide = decide or (lambda r, t, a, b: min(a, b))
    state = _first_phase_state(k, m, semantics)
    rounds = []
    losses = {lab: 0 for lab in range(k)}
    occupancy = [tuple(len(p) for p in state.pools)] if semantics == "pool" else None
    while not state.done():
        todo = state.round_matches()
        outcomes = {}
        recs = []
        for t, a, b in todo:
            wnr = decide(state.round + 1, t, a, b)
            if wnr not in (a, b):
                raise ValueError("decide() must return one of the participants")
            outcomes[(t, a, b)] = wnr
            losses[b if wnr == a else a] += 1
            recs.append(Match(state.round + 1, t, a, b, wnr))
        state.apply(outcomes)
        rounds.append(recs)
        if semantics == "pool":
            occupancy.append(tuple(len(p) for p in state.pools))
    if semantics == "pool":
        return TournamentSchedule(
            k, m, semantics, rounds, dict(state.losses), state.winners(),
            list(state.eliminated), occupancy,
        )
    return TournamentSchedule(k, m, semantics, rounds, losses, list(state.winners), [])


# ---------------------------------------------------------------------------
# final phase


@dataclass(frozen=True)
class ChargedFinalTree:
    """Balanced selection tree over the first-phase winner slots.

    Every subtree carries a charge equal to its leaf count; the weight of a
    node decision equals the charge of the subtree the winner did NOT come
    from. For one slot the phase degenerates to a passthrough.
    """

    m: int
    tree: LabelTree | None

    def charges(self, node):
        left, right = self.tree.children[node]
        return len(self.tree.leaves_under(left)), len(self.tree.leaves_under(right))

    def weight_for_winner(self, node, winner_from_left: bool) -> int:
        c_left, c_right = self.charges(node)
        return c_right if winner_from_left else c_left

    def max_path_importance(self) -> int:
        """Worst root-reaching sum of advancement weights over leaf slots."""
        if self.m == 1:
            return 0
        best = 0
        for slot in range(self.m):
            total = 0
            for node, side in self.tree.path_to(slot):
                c_left, c_right = self.charges(node)
                total += c_right if side == 1 else c_left
            best = max(best, total)
        return best


def build_final_tree(m: int) -> ChargedFinalTree:
    if m < 1:
        raise ValueError("need m >= 1")
    if m == 1:
        return ChargedFinalTree(1, None)
    return ChargedFinalTree(m, build_balanced_tree(m))


# ---------------------------------------------------------------------------
# comparators and adversaries


class TrueOrderComparator:
    """Ground-truth order over labels: lower rank beats higher rank."""

    def __init__(self, k, order=None):
        self.k = k
        self.order = list(order) if order is not None else list(range(k))
        self.rank = {lab: i for i, lab in enumerate(self.order)}

    @property
    def best(self):
        return self.order[0]

    def winner(self, a, b):
        return a if self.rank[a] <= self.rank[b] else b


@dataclass
class MatchContext:
    phase: int
    round: int
    tournament: int | None
    node: int | None
    a: int
    b: int
    truthful: int
    flip_weight: float


class Adversary:
    """Base adversary: never intervenes."""

    kind = "none"

    def reset(self, comparator):
        self.comparator = comparator

    def decide(self, ctx: MatchContext):
        """Return a winner label, VOID, or None to accept the truthful result."""
        return None

    def observe(self, ctx: MatchContext, outcome):
        pass


class BudgetFullLie(Adversary):
    """Flips outcomes against the best label until the budget runs out.

    The budget is weighted by default: corrupting a decision costs its
    importance weight. With ``weighted=False`` every flip costs one unit.
    ``delay_wins`` makes the adversary patient: it lets the best label bank
    that many consecutive wins before striking, which drives up the regret
    ratio it achieves per corrupted match.
    """

    kind = "budget_full_lie"

    def __init__(self, budget, weighted=True, delay_wins=0):
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        self.budget = budget
        self.weighted = weighted
        self.delay_wins = delay_wins

    def reset(self, comparator):
        super().reset(comparator)
        self.remaining = self.budget
        self.streak = 0

    def observe(self, ctx, outcome):
        target = self.comparator.best
        if target not in (ctx.a, ctx.b) or outcome == VOID or ctx.a == ctx.b:
            return
        self.streak = self.streak + 1 if outcome == target else 0

    def decide(self, ctx):
        target = self.comparator.best
        if ctx.truthful != target or ctx.a == ctx.b:
            return None
        if ctx.phase == 1 and self.streak < self.delay_wins:
            return None
        cost = ctx.flip_weight if self.weighted else 1
        if cost <= self.remaining:
            self.remaining -= cost
            if self.remaining < -1e-9:
                raise AdversaryFault("budget exceeded")
            return ctx.b if ctx.truthful == ctx.a else ctx.a
        return None


class BudgetHalfLie(Adversary):
    """Withholds wins from the best label but never awards them to the worse.

    A corrupted game is void: nobody advances and the match replays, so this
    adversary can only delay the best label, never dethrone it.
    """

    kind = "budget_half_lie"

    def __init__(self, budget):
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        self.budget = int(budget)

    def reset(self, comparator):
        super().reset(comparator)
        self.remaining = self.budget

    def decide(self, ctx):
        if ctx.truthful == self.comparator.best and ctx.a != ctx.b and self.remaining > 0:
            self.remaining -= 1
            return VOID
        return None


class RateRandom(Adversary):
    """Flips each decision independently with a fixed probability."""

    kind = "rate_random"

    def __init__(self, rate, seed=0):
        if not 0 <= rate <= 1:
            raise ValueError("rate must lie in [0, 1]")
        self.rate = rate
        self.seed = seed

    def reset(self, comparator):
        super().reset(comparator)
        import numpy as np

        self.rng = np.random.default_rng(self.seed)

    def decide(self, ctx):
        if ctx.a != ctx.b and self.rng.random() < self.rate:
            return ctx.b if ctx.truthful == ctx.a else ctx.a
        return None


class ParityAdversary(Adversary):
    """Favors a chosen pair against everyone; their direct meetings alternate.

    The first meeting of the pair goes to the first element, the second to the
    other, and so on, so the pair member winning the last meeting survives.
    """

    kind = "parity"

    def __init__(self, i, j):
        if i == j:
            raise ValueError("parity pair must be distinct")
        self.i, self.j = i, j

    def reset(self, comparator):
        super().reset(comparator)
        self.meetings = 0

    def decide(self, ctx):
        labs = {ctx.a, ctx.b}
        if labs == {self.i, self.j}:
            self.meetings += 1
            return self.i if self.meetings % 2 == 1 else self.j
        if self.i in labs:
            return self.i
        if self.j in labs:
            return self.j
        return None


class StagedAdversary(Adversary):
    """Two-stage strategy for round-count-oblivious algorithms.

    For the first ~2(k-1)r/k of the declared q rounds every match involving
    the front-runner goes to it; afterwards the adversary switches allegiance
    to a low-loss alternative and rides it home. r = qk/(3k-2).
    """

    kind = "staged"

    def __init__(self, k, declared_rounds):
        self.k = k
        self.q = declared_rounds
        self.r = self.q * k / (3 * k - 2)
        self.switch_round = math.ceil(2 * (k - 1) * self.r / k)

    def reset(self, comparator):
        super().reset(comparator)
        self.front = comparator.order[0]
        self.pick = None
        self.loss_count = {lab: 0 for lab in range(self.k)}

    def observe(self, ctx, outcome):
        if outcome in (VOID, None):
            return
        loser = ctx.b if outcome == ctx.a else ctx.a
        self.loss_count[loser] += 1

    def decide(self, ctx):
        labs = {ctx.a, ctx.b}
        if ctx.round <= self.switch_round:
            if self.front in labs:
                return self.front
            return None
        if self.pick is None:
            candidates = [
                lab
                for lab in range(self.k)
                if lab not in (self.front, self.k - 1) and self.loss_count[lab] <= self.r
            ]
            self.pick = min(candidates) if candidates else (self.front + 1) % self.k
        if self.pick in labs:
            return self.pick
        return None


def make_adversary(kind, k=None, budget=0, rate=0.25, pair=None, seed=0, declared_rounds=None):
    """Build an adversary by name; the CLI and reports funnel through here."""
    if kind == "none":
        return Adversary()
    if kind == "budget_full_lie":
        return BudgetFullLie(budget)
    if kind == "budget_half_lie":
        return BudgetHalfLie(budget)
    if kind == "rate_random":
        return RateRandom(rate, seed)
    if kind == "parity":
        i, j = pair if pair is not None else (0, k - 1)
        return ParityAdversary(i, j)
    if kind == "staged":
        return StagedAdversary(k, declared_rounds if declared_rounds is not None else 2 * k)
    raise ValueError(f"unknown adversary kind {kind!r}")


# ---------------------------------------------------------------------------
# running a tournament


@dataclass
class MatchRecord:
    phase: int
    round: int
    tournament: int | None
    node: int | None
    a: int
    b: int
    weight: float
    outcome: int | None  # None for voided games
    contradicted: bool
    charge_a: int = 1
    charge_b: int = 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "phase": self.phase,
                "round": self.round,
                "tournament": self.tournament,
                "node": self.node,
                "participants": [self.a, self.b],
                "weight": self.weight,
                "outcome": self.outcome,
                "contradicted": self.contradicted,
            },
            sort_keys=True,
        )


@dataclass
class Transcript:
    k: int
    m: int
    semantics: str
    matches: list
    first_phase_winners: list
    winner: int
    rounds_first_phase: int
    rounds_total: int
    importance_depth: int  # structural: first-phase rounds + final path weight

    @property
    def weighted_error_total(self) -> float:
        return sum(r.weight for r in self.matches if r.contradicted)

    @property
    def contradictions(self) -> int:
        return sum(1 for r in self.matches if r.contradicted)

    def write_jsonl(self, path):
        with open(path, "w") as f:
            for rec in self.matches:
                f.write(rec.to_json() + "\n")


def run_tournament(
    schedule_or_args,
    final_tree: ChargedFinalTree | None = None,
    comparator: TrueOrderComparator | None = None,
    adversary: Adversary | None = None,
    repeated_finals: bool = False,
) -> tuple[int, Transcript]:
    """Play a full tournament and return (winner, transcript).

    Pairings react to outcomes, so the run re-simulates the first phase with
    the given comparator and adversary; the schedule argument supplies
    (k, m, semantics). Pass ``repeated_finals=True`` to expand a final match
    of weight w into unit-weight games where the holder of charge c must be
    beaten c times.
    """
    if isinstance(schedule_or_args, TournamentSchedule):
        k, m, semantics = schedule_or_args.k, schedule_or_args.m, schedule_or_args.semantics
    else:
        k, m, semantics = schedule_or_args
    comparator = comparator or TrueOrderComparator(k)
    adversary = adversary or Adversary()
    adversary.reset(comparator)
    records: list[MatchRecord] = []

    def resolve(ctx: MatchContext):
        truthful = ctx.truthful
        out = adversary.decide(ctx)
        outcome = truthful if out is None else out
        adversary.observe(ctx, outcome)
        contradicted = outcome != truthful if outcome != VOID else True
        return outcome, contradicted

    state = _first_phase_state(k, m, semantics)
    guard = 64 * (k + m) + 64  # voids can stall rounds; cap defensively
    while not state.done():
        if state.round > guard:
            raise RuntimeError("first phase failed to terminate (unbounded voiding?)")
        todo = state.round_matches()
        outcomes = {}
        for t, a, b in todo:
            ctx = MatchContext(1, state.round + 1, t, None, a, b, comparator.winner(a, b), 1.0)
            outcome, contradicted = resolve(ctx)
            outcomes[(t, a, b)] = outcome
            records.append(
                MatchRecord(
                    1, state.round + 1, t, None, a, b, 1.0,
                    None if outcome == VOID else outcome, contradicted,
                )
            )
        state.apply(outcomes)
    rounds_fp = state.round
    winners = list(state.winners) if semantics == "complete" else state.winners()

    ftree = final_tree if final_tree is not None else build_final_tree(len(winners))
    winner, final_rounds = _play_final(
        winners, ftree, comparator, resolve, records, rounds_fp, repeated_finals
    )
    transcript = Transcript(
        k=k,
        m=m,
        semantics=semantics,
        matches=records,
        first_phase_winners=winners,
        winner=winner,
        rounds_first_phase=rounds_fp,
        rounds_total=rounds_fp + final_rounds,
        importance_depth=rounds_fp + ftree.max_path_importance(),
    )
    return winner, transcript


def _play_final(winners, ftree, comparator, resolve, records, round_base, repeated):
    if ftree.m == 1 or len(winners) == 1:
        return winners[0], 0
    if len(winners) != ftree.m:
        ftree = build_final_tree(len(winners))
    tree = ftree.tree
    value: dict[int, int] = {}
    rounds_used = 0
    # nodes at one depth play simultaneously; deeper levels go first
    by_depth: dict[int, list[int]] = {}
    for node in tree.bottom_up():
        by_depth.setdefault(tree.depths[node], []).append(node)
    for depth in sorted(by_depth, reverse=True):
        level_round = round_base + rounds_used + 1
        level_games = 1
        for node in by_depth[depth]:
            left, right = tree.children[node]
            a = winners[leaf_label(left)] if is_leaf(left) else value[left]
            b = winners[leaf_label(right)] if is_leaf(right) else value[right]
            c_left, c_right = ftree.charges(node)
            if a == b:
                value[node] = a
                records.append(
                    MatchRecord(2, level_round, None, node, a, b, 0.0, a, False, c_left, c_right)
                )
                continue
            truthful = comparator.winner(a, b)
            if not repeated:
                ctx = MatchContext(
                    2, level_round, None, node, a, b, truthful,
                    flip_weight=(c_left if truthful == a else c_right),
                )
                outcome, contradicted = resolve(ctx)
                if outcome == VOID:
                    outcome, contradicted = truthful, False  # no winner means truth stands
                weight = ftree.weight_for_winner(node, outcome == a)
                records.append(
                    MatchRecord(2, level_round, None, node, a, b, weight, outcome, contradicted,
                                c_left, c_right)
                )
                value[node] = outcome
            else:
                # left advances after c_right game wins, right after c_left
                need_a, need_b = c_right, c_left
                wins_a = wins_b = 0
                games = 0
                while wins_a < need_a and wins_b < need_b:
                    games += 1
                    if games > 4 * (need_a + need_b):
                        raise RuntimeError("final series failed to terminate")
                    ctx = MatchContext(2, level_round + games - 1, None, node, a, b, truthful, 1.0)
                    outcome, contradicted = resolve(ctx)
                    records.append(
                        MatchRecord(
                            2, level_round + games - 1, None, node, a, b, 1.0,
                            None if outcome == VOID else outcome, contradicted, c_left, c_right,
                        )
                    )
                    if outcome == a:
                        wins_a += 1
                    elif outcome == b:
                        wins_b += 1
                value[node] = a if wins_a >= need_a else b
                level_games = max(level_games, games)
        rounds_used += level_games if repeated else 1
    return value[0], rounds_used


# ---------------------------------------------------------------------------
# adversary search


@dataclass
class DethroneResult:
    cost: float
    exact: bool
    nodes_explored: int


def _final_levels(ftree: ChargedFinalTree):
    """Final-phase nodes bottom-up with their child refs and charges."""
    tree = ftree.tree
    return [(node, tree.children[node], ftree.charges(node)) for node in tree.bottom_up()]


def min_dethroning_cost(
    k,
    m,
    semantics="complete",
    final_tree: ChargedFinalTree | None = None,
    mode="exhaustive",
    node_cap=1 << 24,
    samples=2000,
    seed=0,
) -> DethroneResult:
    """Cheapest total weighted error that makes a non-best label win.

    Exhaustive mode runs branch-and-bound over all outcome assignments
    (truthful branch first, pruning once the accumulated weighted error
    reaches the best known dethroning cost) and is exact. Stochastic mode
    samples random strategies and reports an upper bound flagged as inexact.
    """
    comparator = TrueOrderComparator(k)
    best_label = comparator.best

    if mode == "stochastic":
        return _stochastic_dethrone(k, m, semantics, final_tree, samples, seed, comparator)
    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")

    # constructive upper bound: flip every match the best label would win
    _, transcript = run_tournament(
        (k, m, semantics), final_tree, comparator, BudgetFullLie(float("inf"))
    )
    upper = (
        transcript.weighted_error_total if transcript.winner != best_label else float("inf")
    )

    counter = {"nodes": 0}
    best = {"cost": upper}

    def search_first_phase(state, cost):
        if cost >= best["cost"]:
            return
        if state.done():
            winners = list(state.winners) if semantics == "complete" else state.winners()
            ft = final_tree if final_tree is not None else build_final_tree(len(winners))
            search_final(winners, ft, cost)
            return
        todo = state.round_matches()
        assign(state, todo, 0, {}, cost)

    def assign(state, todo, idx, outcomes, cost):
        counter["nodes"] += 1
        if counter["nodes"] > node_cap:
            raise ResourceRefusal(
                f"exhaustive dethroning search exceeded {node_cap} nodes; "
                "rerun in stochastic mode"
            )
        if cost >= best["cost"]:
            return
        if idx == len(todo):
            nxt = state.clone()
            nxt.apply(outcomes)
            search_first_phase(nxt, cost)
            return
        t, a, b = todo[idx]
        truthful = comparator.winner(a, b)
        other = b if truthful == a else a
        outcomes[(t, a, b)] = truthful
        assign(state, todo, idx + 1, outcomes, cost)
        outcomes[(t, a, b)] = other
        assign(state, todo, idx + 1, outcomes, cost + 1.0)
        del outcomes[(t, a, b)]

    def search_final(winners, ft, cost):
        if len(winners) == 1 or ft.m == 1:
            final = winners[0]
            if final != best_label and cost < best["cost"]:
                best["cost"] = cost
            return
        if len(winners) != ft.m:
            ft = build_final_tree(len(winners))
        levels = _final_levels(ft)
        tree = ft.tree

        def rec(i, value, cost):
            counter["nodes"] += 1
            if counter["nodes"] > node_cap:
                raise ResourceRefusal("exhaustive dethroning search exceeded node cap")
            if cost >= best["cost"]:
                return
            if i == len(levels):
                if value[0] != best_label:
                    best["cost"] = min(best["cost"], cost)
                return
            node, (left, right), (c_left, c_right) = levels[i]
            a = winners[leaf_label(left)] if is_leaf(left) else value[left]
            b = winners[leaf_label(right)] if is_leaf(right) else value[right]
            if a == b:
                value[node] = a
                rec(i + 1, value, cost)
                del value[node]
                return
            truthful = comparator.winner(a, b)
            for choice in (truthful, a if truthful == b else b):
                extra = 0.0
                if choice != truthful:
                    extra = float(c_right if choice == a else c_left)
                value[node] = choice
                rec(i + 1, value, cost + extra)
                del value[node]

        rec(0, {}, cost)

    search_first_phase(_first_phase_state(k, m, semantics), 0.0)
    if math.isinf(best["cost"]):
        raise RuntimeError("search found no dethroning strategy")
    return DethroneResult(best["cost"], True, counter["nodes"])


def _stochastic_dethrone(k, m, semantics, final_tree, samples, seed, comparator):
    import numpy as np

    rng = np.random.default_rng(seed)
    best_label = comparator.best
    best_cost = float("inf")
    for _ in range(samples):
        adv = RateRandom(float(rng.uniform(0.05, 0.5)), int(rng.integers(0, 2**31)))
        winner, transcript = run_tournament((k, m, semantics), final_tree, comparator, adv)
        if winner != best_label:
            best_cost = min(best_cost, transcript.weighted_error_total)
    # the targeted constructive strategy is also a valid sample
    winner, transcript = run_tournament(
        (k, m, semantics), final_tree, comparator, BudgetFullLie(float("inf"))
    )
    if winner != best_label:
        best_cost = min(best_cost, transcript.weighted_error_total)
    return DethroneResult(best_cost, False, samples)


# ---------------------------------------------------------------------------
# lower-bound runs


@dataclass
class ParityRunResult:
    pair: tuple
    winner: int
    ratio: float  # math.inf when the run escapes the pair
    multiclass_regret: float
    average_binary_regret: float
    total_comparisons: int
    adversary_errors: int


def parity_ratio_from_matches(matches, pair, winner) -> ParityRunResult:
    """Account a finished run against the parity adversary's final distribution.

    The adversary concentrates all label mass on the pair member that did not
    win, making the multiclass regret 1; its own cost is the fraction of
    comparisons (all unit weight in this setting) that the mass-carrying label
    lost.
    """
    i, j = pair
    if winner not in pair:
        return ParityRunResult(pair, winner, math.inf, 1.0, 0.0, len(matches), 0)
    loser = j if winner == i else i
    total = len(matches)
    errors = sum(
        1
        for r in matches
        if loser in (r.a, r.b) and r.outcome is not None and r.outcome != loser
    )
    if errors == 0:
        return ParityRunResult(pair, winner, math.inf, 1.0, 0.0, total, 0)
    abr = errors / total
    return ParityRunResult(pair, winner, 1.0 / abr, 1.0, abr, total, errors)


def parity_adversary_run(k, m=1, semantics="complete", pair=None) -> ParityRunResult:
    """Run the pair-parity strategy and report the regret ratio it achieves.

    Runs with repeated finals so every comparison carries unit weight, the
    setting the parity strategy is built for.
    """
    if k < 3:
        raise ValueError("need k >= 3")
    pair = tuple(pair) if pair is not None else (0, k - 1)
    adversary = ParityAdversary(*pair)
    winner, transcript = run_tournament(
        (k, m, semantics), None, TrueOrderComparator(k), adversary, repeated_finals=True
    )
    return parity_ratio_from_matches(transcript.matches, pair, winner)


def measured_regret_ratio(transcript: Transcript, best: int) -> float:
    """Regret ratio of a finished run under mass concentrated on ``best``.

    Zero when the best label won. Otherwise the multiclass regret is 1 and
    the binary side averages the corrupted weight over the weight of every
    match the best label reached: wins count the advancement weight, losses
    the charge an adversary had to overcome.
    """
    if transcript.winner == best:
        return 0.0
    total = 0.0
    errors = 0.0
    for r in transcript.matches:
        if best not in (r.a, r.b):
            continue
        if r.phase == 1:
            w_win = w_loss = 1.0
        else:
            best_is_a = r.a == best
            w_loss = float(r.charge_a if best_is_a else r.charge_b)
            w_win = float(r.charge_b if best_is_a else r.charge_a)
        if r.outcome == best:
            total += w_win
        elif r.outcome is not None:
            total += w_loss
            errors += w_loss
    if errors == 0:
        return math.inf
    return total / errors
