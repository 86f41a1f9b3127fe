"""Screening pass: certify blocks of coefficients zero before solving.

The screening rules compare, for each candidate block, the total
soft-thresholded correlation mass inside the block (lhs) against the penalty
budget the group norms provide (rhs).  The tree is traversed depth first;
when an internal node is certified zero its entire subtree is skipped.

All rules are evaluated at the starting point ``B = 0``, so the correlation
matrix ``C = Y X^T`` of the standardized data is the only data-dependent
quantity they need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, GroupStructure, RegParams
from .errors import DimensionMismatch, NotInternal, NotLeaf
from .tree import DUMMY_ROOT, INTERNAL, LEAF, BlockNode, ScreeningTree

__all__ = [
    "RuleEvaluation",
    "SurvivorSet",
    "precompute_correlation",
    "soft_residual",
    "leaf_rule",
    "block_rule",
    "screen",
    "audit_screened_blocks",
]


def precompute_correlation(ds: Dataset) -> np.ndarray:
    """Correlation matrix ``C = Y X^T`` with ``C[k, j] = y_k . x_j``.

    Requires standardized data; with the population variance convention the
    diagonal of ``X X^T`` equals ``n_samples`` exactly.
    """
    if not ds.is_standardized:
        raise ValueError("precompute_correlation requires a standardized Dataset")
    return ds.y @ ds.x.T


def soft_residual(c: float, lambda1: float) -> float:
    """Residual magnitude after soft-thresholding: ``max(|c| - lambda1, 0)``.

    This is ``min over s in [-1, 1] of |c - lambda1 * s|``, the part of a
    correlation that the element-wise penalty cannot absorb.
    """
    return max(abs(c) - lambda1, 0.0)


def _soft_matrix(c: np.ndarray, gs: GroupStructure, rp: RegParams) -> np.ndarray:
    thr = rp.lambda1
    if gs.element_weights is not None:
        thr = thr * gs.element_weights
    return np.maximum(np.abs(c) - thr, 0.0)


@dataclass(frozen=True)
class RuleEvaluation:
    """Outcome of one screening test: ``screened`` iff ``lhs <= rhs``."""

    lhs: float
    rhs: float

    @property
    def screened(self) -> bool:
        return self.lhs <= self.rhs


def _check_c(c: np.ndarray, gs: GroupStructure) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (gs.num_outputs, gs.num_inputs):
        raise DimensionMismatch(
            f"correlation matrix has shape {c.shape}, expected "
            f"({gs.num_outputs}, {gs.num_inputs})"
        )
    return c


def _leaf_terms(m: int, o: int, c, gs, rp) -> tuple:
    g = gs.input_groups[m]
    h = gs.output_groups[o]
    block = np.ix_(h, g)
    thr = rp.lambda1
    if gs.element_weights is not None:
        thr = thr * gs.element_weights[block]
    lhs = float(np.maximum(np.abs(c[block]) - thr, 0.0).sum())
    rhs = abs(
        rp.lambda2 * gs.input_weights[m] * math.sqrt(len(h))
        - rp.lambda3 * gs.output_weights[o] * math.sqrt(len(g))
    )
    return lhs, rhs


def leaf_rule(node: BlockNode, c: np.ndarray, gs: GroupStructure, rp: RegParams) -> RuleEvaluation:
    """Zero test for a single block ``B[h_o, g_m]``.

    lhs is the sum of soft-thresholded absolute correlations over the block;
    rhs is ``|lambda2 * rho_m * sqrt(|h_o|) - lambda3 * nu_o * sqrt(|g_m|)|``.
    """
    if node.kind != LEAF:
        raise NotLeaf(f"leaf_rule applied to {node.kind} node")
    c = _check_c(c, gs)
    lhs, rhs = _leaf_terms(node.input_group_ids[0], node.output_group_ids[0], c, gs, rp)
    return RuleEvaluation(lhs=lhs, rhs=rhs)


def block_rule(node: BlockNode, c: np.ndarray, gs: GroupStructure, rp: RegParams) -> RuleEvaluation:
    """Zero test for a multi-block node: sums the per-block lhs and rhs terms
    over every (input group, output group) pair the node covers."""
    if node.kind != INTERNAL:
        raise NotInternal(f"block_rule applied to {node.kind} node")
    c = _check_c(c, gs)
    lhs = rhs = 0.0
    for m in node.input_group_ids:
        for o in node.output_group_ids:
            l, r = _leaf_terms(m, o, c, gs, rp)
            lhs += l
            rhs += r
    return RuleEvaluation(lhs=lhs, rhs=rhs)


@dataclass
class SurvivorSet:
    """Coefficients and groups that screening could not certify zero.

    ``mask`` is True at coefficients passed to the restricted solve: the
    union of the blocks of surviving leaves, plus any coefficient outside
    every block whose soft-thresholded correlation is positive (those carry
    only the element-wise penalty, and ``soft > 0`` is exactly its nonzero
    test at B = 0).
    """

    mask: np.ndarray
    input_group_ids: tuple = ()
    output_group_ids: tuple = ()
    leaf_pairs: frozenset = frozenset()
    input_instances: int = 0
    output_instances: int = 0
    l1_only_count: int = 0
    nodes_visited: int = 0
    nodes_skipped: int = 0
    leaves_evaluated: int = 0
    internals_evaluated: int = 0
    internals_screened: int = 0

    @property
    def coefficient_count(self) -> int:
        return int(self.mask.sum())

    @property
    def group_instance_count(self) -> int:
        """Surviving penalty-term count: (row, input-group) plus
        (output-group, column) instances, the unit reported by sweeps."""
        return self.input_instances + self.output_instances

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()

    def group_counts(self) -> dict:
        return {
            "input_groups": len(self.input_group_ids),
            "output_groups": len(self.output_group_ids),
            "input_instances": self.input_instances,
            "output_instances": self.output_instances,
            "total_instances": self.group_instance_count,
        }


def full_survivor_set(gs: GroupStructure) -> SurvivorSet:
    """Survivor set for the unscreened (baseline) solve: everything survives."""
    mask = np.ones((gs.num_outputs, gs.num_inputs), dtype=bool)
    pairs = frozenset(
        (m, o) for m in range(gs.n_input_groups) for o in range(gs.n_output_groups)
    )
    in_inst = sum(gs.num_outputs for _ in gs.input_groups)
    out_inst = sum(gs.num_inputs for _ in gs.output_groups)
    return SurvivorSet(
        mask=mask,
        input_group_ids=tuple(range(gs.n_input_groups)),
        output_group_ids=tuple(range(gs.n_output_groups)),
        leaf_pairs=pairs,
        input_instances=in_inst,
        output_instances=out_inst,
    )


def screen(tree: ScreeningTree, c: np.ndarray, gs: GroupStructure, rp: RegParams) -> SurvivorSet:
    """Depth-first screening pass over the tree.

    The dummy root is always descended.  A screened internal node prunes its
    whole subtree; a surviving leaf contributes its block of coefficients and
    its group ids to the survivor set.  Coefficients outside every block are
    kept iff their soft-thresholded correlation is positive.
    """
    c = _check_c(c, gs)
    soft = _soft_matrix(c, gs, rp)
    # row-group partial sums: rowsum[k, m] = sum_{j in g_m} soft[k, j]
    rowsum = np.empty((gs.num_outputs, gs.n_input_groups))
    for m, g in enumerate(gs.input_groups):
        rowsum[:, m] = soft[:, g].sum(axis=1)
    sqrt_g = np.array([math.sqrt(len(g)) for g in gs.input_groups])
    sqrt_h = np.array([math.sqrt(len(h)) for h in gs.output_groups])

    def leaf_terms_fast(m: int, o: int) -> tuple:
        h = gs.output_groups[o]
        lhs = float(rowsum[h, m].sum())
        rhs = abs(
            rp.lambda2 * gs.input_weights[m] * sqrt_h[o]
            - rp.lambda3 * gs.output_weights[o] * sqrt_g[m]
        )
        return lhs, rhs

    mask = np.zeros((gs.num_outputs, gs.num_inputs), dtype=bool)
    surviving_pairs = set()
    input_inst = set()
    output_inst = set()
    stats = dict(visited=0, skipped=0, leaves=0, internals=0, internals_screened=0)

    def subtree_size(node: BlockNode) -> int:
        return 1 + sum(subtree_size(ch) for ch in node.children)

    stack = [tree.root]
    while stack:
        node = stack.pop()
        stats["visited"] += 1
        if node.kind == DUMMY_ROOT:
            stack.extend(reversed(node.children))
            continue
        if node.kind == INTERNAL:
            stats["internals"] += 1
            lhs = rhs = 0.0
            for m in node.input_group_ids:
                for o in node.output_group_ids:
                    l, r = leaf_terms_fast(m, o)
                    lhs += l
                    rhs += r
            if lhs <= rhs:
                stats["internals_screened"] += 1
                stats["skipped"] += subtree_size(node) - 1
            else:
                stack.extend(reversed(node.children))
            continue
        # leaf
        stats["leaves"] += 1
        m, o = node.input_group_ids[0], node.output_group_ids[0]
        lhs, rhs = leaf_terms_fast(m, o)
        if lhs <= rhs:
            continue
        g = gs.input_groups[m]
        h = gs.output_groups[o]
        mask[np.ix_(h, g)] = True
        surviving_pairs.add((m, o))
        input_inst.update((int(k), m) for k in h)
        output_inst.update((o, int(j)) for j in g)

    # coefficients outside every block carry only the element-wise penalty
    rows = gs.output_union()
    cols = gs.input_union()
    covered = np.zeros_like(mask)
    if rows.size and cols.size:
        covered[np.ix_(rows, cols)] = True
    l1_only = (~covered) & (soft > 0)
    mask |= l1_only

    return SurvivorSet(
        mask=mask,
        input_group_ids=tuple(sorted({m for m, _ in surviving_pairs})),
        output_group_ids=tuple(sorted({o for _, o in surviving_pairs})),
        leaf_pairs=frozenset(surviving_pairs),
        input_instances=len(input_inst),
        output_instances=len(output_inst),
        l1_only_count=int(l1_only.sum()),
        nodes_visited=stats["visited"],
        nodes_skipped=stats["skipped"],
        leaves_evaluated=stats["leaves"],
        internals_evaluated=stats["internals"],
        internals_screened=stats["internals_screened"],
    )


def audit_screened_blocks(
    tree: ScreeningTree,
    survivor: SurvivorSet,
    ds: Dataset,
    b: np.ndarray,
    gs: GroupStructure,
    rp: RegParams,
) -> list:
    """Re-test every screened block against the converged residual.

    After the restricted solve, the block tests are repeated with the
    correlations of the actual residual ``(Y - B X) X^T`` instead of the
    starting-point correlations.  Returns the list of ``(input_group_id,
    output_group_id, lhs, rhs)`` tuples for blocks whose test now fails;
    violations are reported, never repaired.
    """
    resid_corr = (ds.y - b @ ds.x) @ ds.x.T
    violations = []
    for m in range(gs.n_input_groups):
        for o in range(gs.n_output_groups):
            if (m, o) in survivor.leaf_pairs:
                continue
            lhs, rhs = _leaf_terms(m, o, resid_corr, gs, rp)
            if lhs > rhs:
                violations.append((m, o, lhs, rhs))
    return violations
