import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from higt import (
    Dataset,
    GroupStructure,
    NotInternal,
    NotLeaf,
    RegParams,
    SolverConfig,
    block_rule,
    build_tree,
    leaf_rule,
    precompute_correlation,
    screen,
    soft_residual,
    solve_restricted,
    standardize,
)
from higt.screening import full_survivor_set
from higt.tree import BlockNode, INTERNAL, LEAF

from conftest import random_dataset, random_group_structure


class TestPrecomputeCorrelation:
    def test_gram_diagonal_equals_sample_count(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(size=(4, 30))
        ds = standardize(Dataset(x=x, y=x))
        c = precompute_correlation(ds)
        np.testing.assert_allclose(np.diag(c), 30.0, rtol=1e-12)

    def test_orthogonal_rows_give_zero(self):
        x = np.array([[1.0, -1.0, 1.0, -1.0]])
        y = np.array([[1.0, 1.0, -1.0, -1.0]])
        ds = standardize(Dataset(x=x, y=y))
        c = precompute_correlation(ds)
        assert abs(c[0, 0]) <= 1e-12

    def test_matches_naive_double_loop(self):
        ds = random_dataset(1, n_inputs=4, n_outputs=3, n_samples=50)
        c = precompute_correlation(ds)
        for k in range(3):
            for j in range(4):
                naive = sum(ds.y[k][i] * ds.x[j][i] for i in range(50))
                assert c[k, j] == pytest.approx(naive, rel=1e-12, abs=1e-12)

    def test_requires_standardized(self):
        ds = Dataset(x=np.random.default_rng(2).uniform(size=(2, 10)),
                     y=np.random.default_rng(3).uniform(size=(2, 10)))
        with pytest.raises(ValueError):
            precompute_correlation(ds)


class TestSoftResidual:
    @pytest.mark.parametrize(
        "c,lam,expected",
        [(0.5, 1.0, 0.0), (2.0, 0.5, 1.5), (-0.3, 0.3, 0.0), (-2.0, 0.5, 1.5)],
    )
    def test_examples(self, c, lam, expected):
        assert soft_residual(c, lam) == pytest.approx(expected)

    @settings(max_examples=50, deadline=None)
    @given(c=st.floats(-100, 100), lam=st.floats(0, 100))
    def test_is_min_over_subgradient_interval(self, c, lam):
        # soft_residual(c, lam) == min over s in [-1,1] of |c - lam s|
        grid = np.linspace(-1.0, 1.0, 2001)
        brute = np.min(np.abs(c - lam * grid))
        assert soft_residual(c, lam) <= brute + 1e-9


def _leaf(m, o):
    return BlockNode(kind=LEAF, input_group_ids=(m,), output_group_ids=(o,))


class TestLeafRule:
    def test_one_by_one_arithmetic(self):
        gs = GroupStructure(
            input_groups=(np.array([0]),),
            output_groups=(np.array([0]),),
            num_inputs=1,
            num_outputs=1,
        )
        rp = RegParams(0.1, 0.2, 0.05)
        ev = leaf_rule(_leaf(0, 0), np.array([[0.2]]), gs, rp)
        assert ev.lhs == pytest.approx(0.1)
        assert ev.rhs == pytest.approx(0.15)
        assert ev.screened

    def test_both_sides_zero_is_screened(self, small_gs):
        # lambda1 above max |C| makes lhs 0; equal-size groups with
        # lambda2 == lambda3 make rhs 0; the rule uses lhs <= rhs
        gs = GroupStructure(
            input_groups=(np.array([0, 1]),),
            output_groups=(np.array([0, 1]),),
            num_inputs=2,
            num_outputs=2,
        )
        c = np.full((2, 2), 0.3)
        ev = leaf_rule(_leaf(0, 0), c, gs, RegParams(0.5, 0.7, 0.7))
        assert ev.lhs == 0.0 and ev.rhs == 0.0 and ev.screened

    def test_rejects_internal_node(self, small_gs):
        node = BlockNode(kind=INTERNAL, input_group_ids=(0,), output_group_ids=(0,))
        with pytest.raises(NotLeaf):
            leaf_rule(node, np.zeros((4, 8)), small_gs, RegParams(0, 0, 0))

    @pytest.mark.parametrize("seed", range(50))
    def test_single_task_reduction_matches_independent_kkt_check(self, seed):
        # K=1, lambda3=0: the decision must equal the group-zero test derived
        # from the stationarity conditions, with the subgradient minimization
        # done numerically instead of via the closed-form soft threshold
        rng = np.random.default_rng(seed)
        gsize = int(rng.integers(2, 9))
        gs = GroupStructure(
            input_groups=(np.arange(gsize),),
            output_groups=(np.array([0]),),
            num_inputs=gsize,
            num_outputs=1,
        )
        lam1 = float(rng.uniform(0.05, 1.0))
        lam2 = float(rng.uniform(0.05, 2.0))
        rp = RegParams(lam1, lam2, 0.0)
        c = rng.normal(scale=1.5, size=(1, gsize))

        def pointwise_min(cj):
            res = minimize_scalar(
                lambda s: abs(cj - lam1 * s),
                bounds=(-1.0, 1.0),
                method="bounded",
                options={"xatol": 1e-12},
            )
            return res.fun

        oracle_lhs = sum(pointwise_min(cj) for cj in c[0])
        oracle_screened = oracle_lhs <= lam2 * math.sqrt(1)

        ev = leaf_rule(_leaf(0, 0), c, gs, rp)
        assert ev.screened == oracle_screened


class TestBlockRule:
    def test_termwise_screened_leaves_imply_screened_block(self, small_gs):
        rng = np.random.default_rng(3)
        c = 0.05 * rng.normal(size=(4, 8))
        rp = RegParams(0.5, 1.0, 0.1)
        node = BlockNode(kind=INTERNAL, input_group_ids=(0, 1), output_group_ids=(0, 1))
        leaf_evals = [
            leaf_rule(_leaf(m, o), c, small_gs, rp)
            for m in (0, 1)
            for o in (0, 1)
        ]
        assert all(ev.screened for ev in leaf_evals)
        assert block_rule(node, c, small_gs, rp).screened

    def test_sum_arithmetic(self, small_gs):
        rng = np.random.default_rng(4)
        c = rng.normal(size=(4, 8))
        rp = RegParams(0.3, 0.8, 0.2)
        node = BlockNode(kind=INTERNAL, input_group_ids=(0, 1), output_group_ids=(0, 1))
        ev = block_rule(node, c, small_gs, rp)
        lhs = rhs = 0.0
        for m in (0, 1):
            for o in (0, 1):
                le = leaf_rule(_leaf(m, o), c, small_gs, rp)
                lhs += le.lhs
                rhs += le.rhs
        assert ev.lhs == pytest.approx(lhs, rel=1e-14)
        assert ev.rhs == pytest.approx(rhs, rel=1e-14)

    def test_one_loud_leaf_defeats_three_quiet(self):
        # L values (10, 0, 0, 0) against R values (0, 1, 1, 1)
        gs = GroupStructure(
            input_groups=(np.array([0]), np.array([1])),
            output_groups=(np.array([0]), np.array([1])),
            num_inputs=2,
            num_outputs=2,
        )
        c = np.array([[10.5, 0.0], [0.0, 0.0]])
        # make rhs = 1 for all leaves: lambda2=1, lambda3=0 (sqrt terms are 1)
        rp = RegParams(0.5, 1.0, 0.0)
        node = BlockNode(kind=INTERNAL, input_group_ids=(0, 1), output_group_ids=(0, 1))
        ev = block_rule(node, c, gs, rp)
        assert ev.lhs == pytest.approx(10.0)
        assert ev.rhs == pytest.approx(4.0)
        assert not ev.screened

    def test_rejects_leaf(self, small_gs):
        with pytest.raises(NotInternal):
            block_rule(_leaf(0, 0), np.zeros((4, 8)), small_gs, RegParams(0, 0, 0))


class TestScreen:
    def test_zero_lambdas_keep_everything_covered(self, small_gs):
        ds = random_dataset(5, n_inputs=8, n_outputs=4)
        c = precompute_correlation(ds)
        tree = build_tree(small_gs)
        sv = screen(tree, c, small_gs, RegParams(0, 0, 0))
        assert sv.mask.all()
        assert sv.leaf_pairs == {(m, o) for m in range(3) for o in range(2)}
        assert sv.nodes_skipped == 0

    def test_everything_screened_gives_empty_survivors(self):
        gs = GroupStructure(
            input_groups=(np.array([0, 1]), np.array([2, 3])),
            output_groups=(np.array([0, 1]), np.array([2, 3])),
            num_inputs=4,
            num_outputs=4,
        )
        ds = random_dataset(6, n_inputs=4, n_outputs=4)
        c = precompute_correlation(ds)
        lam1 = float(np.abs(c).max()) + 1.0
        sv = screen(build_tree(gs), c, gs, RegParams(lam1, 0.9, 0.9))
        assert sv.is_empty
        assert sv.group_instance_count == 0

    def test_skipped_subtrees_never_evaluate_leaves(self):
        rng = np.random.default_rng(7)
        gs = random_group_structure(rng, 30, 6)
        ds = random_dataset(8, n_inputs=30, n_outputs=6, n_samples=50)
        c = precompute_correlation(ds)
        rp = RegParams(4.0, 4.0, 4.0)
        tree = build_tree(gs)
        sv = screen(tree, c, gs, rp)
        expected_leaves = 0
        for internal in tree.root.children:
            if not block_rule(internal, c, gs, rp).screened:
                expected_leaves += len(internal.children)
        assert sv.leaves_evaluated == expected_leaves
        assert sv.internals_evaluated == len(tree.root.children)
        total_nodes = len(tree.root.children) + sum(
            len(n.children) for n in tree.root.children
        ) + 1
        assert sv.nodes_visited + sv.nodes_skipped == total_nodes

    @pytest.mark.parametrize("seed", range(5))
    def test_skip_sound_when_parent_rule_holds_termwise(self, seed):
        # whenever a screened internal node's per-block terms satisfy
        # L <= R individually, each skipped leaf's own rule must also screen
        rng = np.random.default_rng(40 + seed)
        gs = random_group_structure(rng, 24, 6)
        ds = random_dataset(60 + seed, n_inputs=24, n_outputs=6, n_samples=50)
        c = precompute_correlation(ds)
        lam = 0.25 * 50
        rp = RegParams(lam, lam, lam)
        tree = build_tree(gs)
        checked = 0
        for internal in tree.root.children:
            if not block_rule(internal, c, gs, rp).screened:
                continue
            evals = [leaf_rule(leaf, c, gs, rp) for leaf in internal.children]
            if all(ev.lhs <= ev.rhs for ev in evals):
                checked += 1
                assert all(ev.screened for ev in evals)
        assert checked >= 0  # vacuous only when nothing screened termwise

    def test_screened_set_nondecreasing_in_lambda1(self):
        rng = np.random.default_rng(9)
        gs = random_group_structure(rng, 20, 4)
        ds = random_dataset(10, n_inputs=20, n_outputs=4, n_samples=60)
        c = precompute_correlation(ds)
        tree = build_tree(gs)
        leaves = tree.leaves
        previous = set()
        for lam1 in (0.1, 0.5, 1.0, 2.0, 5.0, 20.0):
            rp = RegParams(lam1, 1.0, 1.0)
            screened = {
                (n.input_group_ids[0], n.output_group_ids[0])
                for n in leaves
                if leaf_rule(n, c, gs, rp).screened
            }
            assert previous <= screened
            previous = screened

    def test_uncovered_coefficients_kept_by_l1_test_only(self):
        # column 3 and row 2 are outside every group
        gs = GroupStructure(
            input_groups=(np.array([0, 1]), np.array([1, 2])),
            output_groups=(np.array([0, 1]),),
            num_inputs=4,
            num_outputs=3,
        )
        c = np.zeros((3, 4))
        c[2, 0] = 5.0   # uncovered row, exceeds lambda1
        c[0, 3] = 0.2   # uncovered column, below lambda1
        rp = RegParams(1.0, 100.0, 100.0)
        sv = screen(build_tree(gs), c, gs, rp)
        assert sv.mask[2, 0]
        assert not sv.mask[0, 3]
        assert sv.l1_only_count == 1

    def test_full_survivor_set_counts(self, small_gs):
        sv = full_survivor_set(small_gs)
        assert sv.mask.all()
        assert sv.group_instance_count == 4 * 3 + 8 * 2


@pytest.mark.slow
class TestScreeningSafety:
    """Screened blocks must be zero in the exact full-problem solution."""

    @pytest.mark.parametrize("seed", range(8))
    def test_exact_solution_support_is_kept(self, seed):
        from higt import SimConfig, fit, simulate

        inst = simulate(
            SimConfig(n_samples=120, n_inputs=50, n_outputs=5, nonzero_count=12, seed=300 + seed)
        )
        n = inst.dataset.n_samples
        lam = 0.1 * n
        rp = RegParams(lam, lam, lam)
        cfg = SolverConfig(rel_obj_tol=1e-13, max_outer_iters=10000)
        exact = fit(inst.dataset, inst.groups, rp, no_screen=True, cfg=cfg)
        sv = screen(
            build_tree(inst.groups),
            precompute_correlation(inst.dataset),
            inst.groups,
            rp,
        )
        support = np.abs(exact.b) > 1e-8
        assert not (support & ~sv.mask).any()
