import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ect.analysis import (
    CHECK_TOL,
    audit_sweep,
    chernoff_depth,
    check_regret_bounds,
    cost_atoms_from_labels,
    depth_bounds,
    importance_audit,
    inconsistency_demo,
    instance_dump,
    level_tracker,
    measured_importance_depth,
    random_cost_atoms,
    ratio_report,
    replay_instance,
    regret_bound_sweep,
    three_class_noise,
    tightness_example,
)
from ect.core import build_balanced_tree


class TestRegretBounds:
    def test_zero_regret_assignment_slack(self):
        atoms = [(1.0, np.array([0.1, 0.5, 0.9]))]
        # always advance the cheaper side: assignment derived by hand for k=3
        report = check_regret_bounds(3, atoms, [1, 1])
        assert report.winner == 0
        assert report.cost_regret == 0.0
        assert report.holds

    def test_three_class_noise_all_assignments(self):
        atoms = cost_atoms_from_labels(three_class_noise(0.05))
        for code in range(4):
            assignment = [code & 1, (code >> 1) & 1]
            report = check_regret_bounds(3, atoms, assignment)
            assert report.holds, (code, report.cost_regret, report.bound_sum)

    def test_average_regret_identity(self):
        rng = np.random.default_rng(0)
        atoms = random_cost_atoms(5, rng)
        report = check_regret_bounds(5, atoms, [1, 0, 1, 0])
        if report.sum_weights > 0:
            expect = sum(n.binary_regret * n.mean_weight for n in report.nodes)
            assert report.average_binary_regret == pytest.approx(
                expect / report.sum_weights
            )

    def test_small_sweep_clean(self):
        summary = regret_bound_sweep(ks=(2, 3, 4), n_dists=40, seed=3)
        assert summary.ok
        assert summary.instances == 40 * (2 + 4 + 8)
        assert summary.worst_slack_sum >= -CHECK_TOL
        assert summary.worst_slack_padded >= -CHECK_TOL

    def test_literal_half_k_gap_documented(self):
        # the plain k/2 comparison fails under stochastic conditional costs:
        # with label mass (0.577, 0.121, 0.302) the root flip has cost regret
        # 0.2755 while k/2 times the average binary regret is only 0.2617
        atoms = cost_atoms_from_labels((0.577, 0.121, 0.302))
        report = check_regret_bounds(3, atoms, [0, 1])
        assert not report.holds_literal_half_k
        assert report.holds  # the sum-form guarantee still covers it
        # and the sweep files it under the known gap, not the counterexamples
        summary = regret_bound_sweep(ks=(3,), n_dists=60, seed=3)
        assert summary.ok
        assert summary.literal_half_k_violations
        replayed = replay_instance(summary.literal_half_k_violations[0])
        assert not replayed.holds_literal_half_k

    def test_padded_bound_matches_even_trees(self):
        from ect.analysis import padded_tree_size

        assert [padded_tree_size(k) for k in range(2, 9)] == [2, 4, 4, 6, 8, 8, 8]
        # on fully even trees the padded constant equals the literal one
        assert padded_tree_size(4) / 2 == 4 / 2
        assert padded_tree_size(8) / 2 == 8 / 2

    def test_counterexample_replay_bit_exact(self):
        rng = np.random.default_rng(5)
        atoms = random_cost_atoms(4, rng)
        assignment = [0, 1, 0]
        report = check_regret_bounds(4, atoms, assignment)
        dump = instance_dump(4, atoms, assignment)
        replayed = replay_instance(dump)
        assert replayed.cost_regret == report.cost_regret
        assert replayed.bound_sum == report.bound_sum
        assert replayed.bound_half_k == report.bound_half_k
        assert replayed.winner == report.winner

    def test_strict_mode_raises_with_replayable_dump(self, monkeypatch):
        from ect import analysis as mod
        from ect.analysis import CounterexampleError

        rng = np.random.default_rng(11)
        atoms = random_cost_atoms(4, rng)
        # force a "violation" by tightening the tolerance beyond achievable
        monkeypatch.setattr(mod, "CHECK_TOL", -1.0)
        with pytest.raises(CounterexampleError) as exc:
            check_regret_bounds(4, atoms, [1, 1, 1], strict=True)
        monkeypatch.undo()
        replayed = replay_instance(exc.value.dump)
        assert replayed.cost_regret == exc.value.dump["cost_regret"]
        assert replayed.bound_sum == exc.value.dump["bound_sum"]


@settings(max_examples=80, deadline=None)
@given(
    st.integers(2, 6),
    st.integers(0, 10**9),
    st.integers(0, 31),
)
def test_regret_guarantees_hold_on_random_instances(k, dist_seed, code):
    rng = np.random.default_rng(dist_seed)
    atoms = random_cost_atoms(k, rng)
    assignment = [(code >> i) & 1 for i in range(k - 1)]
    report = check_regret_bounds(k, atoms, assignment)
    assert report.holds
    assert report.cost_regret >= 0
    assert all(n.regret_mass >= 0 for n in report.nodes)


class TestImportanceAudit:
    def test_k2_equality_edge(self):
        res = importance_audit([0.0, 1.0], [1])  # correct decision: left/cheaper
        c = res.counters
        assert (c.sum_importance, c.mistake_importance, c.winner_cost) == (1.0, 0.0, 0.0)
        assert res.holds  # 1 + 0 <= 0 + 1 exactly

    def test_alternating_construction_k8(self):
        res = tightness_example(8)
        assert (res.regret, res.sum_importance, res.mistake_importance) == (1.0, 6.0, 3.0)
        assert res.ratio == 2.0 <= 4.0

    def test_tightness_k4(self):
        res = tightness_example(4)
        assert (res.regret, res.sum_importance, res.mistake_importance) == (1.0, 3.0, 2.0)
        assert res.ratio == 1.5

    def test_tightness_k64_ratio_below_half_k(self):
        res = tightness_example(64)
        assert res.sum_importance == 64 / 2 + 6 - 1
        assert res.mistake_importance == 6.0
        assert res.ratio == pytest.approx((32 + 5) / 6)
        assert res.ratio <= 32

    def test_tightness_closed_form(self):
        for k in (4, 8, 16, 32):
            res = tightness_example(k)
            lg = math.log2(k)
            assert res.sum_importance == k / 2 + lg - 1
            assert res.mistake_importance == lg
            assert res.ratio == pytest.approx((k / 2 + lg - 1) / lg)

    def test_tightness_rejects_non_powers(self):
        with pytest.raises(ValueError):
            tightness_example(6)

    def test_random_sweep_holds(self):
        out = audit_sweep(n_per_k=500, seed=1)
        assert out["violations"] == 0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**15 - 1), st.integers(0, 10**6))
    def test_audit_random_instances(self, bits_code, cost_code):
        # scalar-path oracle for random (cost, decision) pairs at k = 16
        k = 16
        rng = np.random.default_rng(cost_code)
        costs = rng.uniform(0, 1, size=k)
        decisions = [(bits_code >> i) & 1 for i in range(k - 1)]
        res = importance_audit(costs, decisions)
        assert res.holds

    def test_sweep_matches_scalar_oracle(self):
        # the vectorized sweep and the scalar audit agree on identical draws
        rng = np.random.default_rng(9)
        k = 8
        tree = build_balanced_tree(k)
        for _ in range(30):
            costs = rng.uniform(0, 1, size=k)
            bits = rng.integers(0, 2, size=k - 1)
            res = importance_audit(costs, list(bits), tree)
            assert res.holds


class TestInconsistency:
    def test_exact_regrets_at_eps_005(self):
        res = inconsistency_demo(0.05)
        assert res.tree_regret == pytest.approx(0.10, abs=1e-12)
        assert res.filter_tree_regret == 0.0
        assert res.tree_label in (0, 1)
        assert res.filter_tree_label == 2

    def test_boundary_eps_regret_vanishes(self):
        res = inconsistency_demo(1 / 12 - 1e-9)
        assert res.tree_regret == pytest.approx(0.0, abs=1e-6)

    def test_eps_out_of_range(self):
        with pytest.raises(ValueError):
            inconsistency_demo(0.2)
        with pytest.raises(ValueError):
            inconsistency_demo(0.0)

    def test_sampled_logistic(self):
        res = inconsistency_demo(0.05, n_samples=50_000, seed=1)
        assert abs(res.tree_regret - 0.10) <= 0.02
        assert res.filter_tree_regret <= 0.01


class TestDepthBounds:
    def test_k8_m3_case_values(self):
        b = depth_bounds(8, 3)
        assert b.importance_cases[0] == 3 + 3 * 2 + 4 == 13
        assert b.importance_cases[1] == pytest.approx(17.5)
        assert b.importance_cases[2] == 4 + 6 + 4 == 14
        assert b.pow2_above == 4
        assert b.pow2_below == 2
        assert b.chernoff == pytest.approx(10.66, abs=0.01)
        assert b.second_phase == 2  # charges on the three-slot tree sum to 2

    def test_chernoff_formula_direct(self):
        assert chernoff_depth(8, 3) == pytest.approx(
            4 + math.log(8) + math.sqrt(8 * math.log(8) + math.log(8) ** 2)
        )

    def test_case4_domain_gate(self):
        assert depth_bounds(4, 9).importance_cases[3] is None
        assert depth_bounds(4, 8).importance_cases[3] is not None

    def test_measured_depth_within_bounds_small_grid(self):
        for k in (4, 8, 16):
            for m in (1, 2, 3):
                measured = measured_importance_depth(k, m, "complete")
                assert measured <= depth_bounds(k, m).min_importance_bound()


class TestLevelTracker:
    def test_k8_m1(self):
        res = level_tracker(8, 1)
        assert res.rounds == 3
        assert res.occupancy == [(8,), (4,), (2,), (1,)]

    def test_k8_m3_within_chernoff(self):
        res = level_tracker(8, 3)
        assert res.rounds <= chernoff_depth(8, 3)

    def test_k2_16_m4_formula(self):
        res = level_tracker(2**16, 4)
        lk = math.log(2**16)
        assert res.rounds <= 2 * 3 + lk + math.sqrt(lk) * math.sqrt(lk + 12)

    def test_tracker_matches_pool_schedule(self):
        from ect.tournaments import build_schedule

        for k, m in ((8, 3), (16, 2), (9, 3)):
            sched = build_schedule(k, m, "pool")
            track = level_tracker(k, m)
            assert sched.occupancy == track.occupancy


class TestRatioReport:
    def test_bound_values_k16(self):
        lnk = math.log(16)
        m = math.ceil(4 * lnk)
        rep = ratio_report(16, m, "complete", adversaries=[])
        assert rep.bound_log == pytest.approx(5.5, abs=0.1)

    def test_m1_reports_depth_bound(self):
        rep = ratio_report(8, 1, "complete", adversaries=[])
        assert rep.single_elim_depth_bound == 3
        assert rep.bound_large_m is None

    def test_k8_m3_bound_and_sweep(self):
        rep = ratio_report(8, 3, "complete", seed=2)
        assert rep.bound_large_m == pytest.approx(2 + 4 / 3 + 8 / 6)
        assert rep.rows
        # measured ratios from the stock sweep are observations; they stay finite
        assert rep.worst_ratio < math.inf
