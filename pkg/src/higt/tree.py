"""Two-level screening tree over (input group, output group) blocks.

Leaves are single blocks ``B[h_o, g_m]``; internal nodes are unions of the
blocks formed by a run of consecutive input groups crossed with a run of
consecutive output groups; a dummy root spans everything.  Consecutive
tiling is deterministic and keeps correlated neighbouring groups together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import GroupStructure
from .errors import EmptyGroups

__all__ = ["BlockNode", "ScreeningTree", "build_tree", "dfs_order", "format_tree"]

DUMMY_ROOT = "dummy_root"
INTERNAL = "internal"
LEAF = "leaf"


@dataclass
class BlockNode:
    """A candidate zero pattern: the union of blocks ``B[h_o, g_m]`` over
    ``m in input_group_ids`` and ``o in output_group_ids``."""

    kind: str
    input_group_ids: tuple
    output_group_ids: tuple
    children: list = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return self.kind == LEAF

    def covered_rows(self, gs: GroupStructure) -> np.ndarray:
        """Sorted union of output-row indices covered by this node."""
        hs = [gs.output_groups[o] for o in self.output_group_ids]
        return np.unique(np.concatenate(hs)) if hs else np.empty(0, dtype=np.intp)

    def covered_cols(self, gs: GroupStructure) -> np.ndarray:
        """Sorted union of input-column indices covered by this node."""
        gcols = [gs.input_groups[m] for m in self.input_group_ids]
        return np.unique(np.concatenate(gcols)) if gcols else np.empty(0, dtype=np.intp)

    def covered_cell_count(self, gs: GroupStructure) -> int:
        # every (g, h) pair in the node is present, so the covered set is the
        # full rectangle (union of rows) x (union of cols)
        return int(self.covered_rows(gs).size * self.covered_cols(gs).size)

    def covered_mask(self, gs: GroupStructure) -> np.ndarray:
        """Boolean (n_outputs, n_inputs) mask of the covered coefficients."""
        mask = np.zeros((gs.num_outputs, gs.num_inputs), dtype=bool)
        rows, cols = self.covered_rows(gs), self.covered_cols(gs)
        if rows.size and cols.size:
            mask[np.ix_(rows, cols)] = True
        return mask


@dataclass
class ScreeningTree:
    root: BlockNode
    gs: GroupStructure

    @property
    def n_nodes(self) -> int:
        return len(dfs_order(self))

    @property
    def leaves(self) -> list:
        return [n for n in dfs_order(self) if n.is_leaf]


def _runs(n: int, size: int) -> list:
    """Tile 0..n-1 into consecutive runs of the given size (last may be short)."""
    return [tuple(range(s, min(s + size, n))) for s in range(0, n, size)]


def build_tree(gs: GroupStructure, block_inputs: int = 2, block_outputs: int = 2) -> ScreeningTree:
    """Build the two-level screening tree by consecutive tiling.

    Input groups are tiled into runs of ``block_inputs`` consecutive groups,
    output groups into runs of ``block_outputs``; every (input run, output
    run) pair becomes an internal node whose leaves are all (group, group)
    pairs of the run product.  Internal nodes hang off a dummy root.

    Raises
    ------
    EmptyGroups
        If the structure has no input or no output groups.
    """
    if gs.n_input_groups == 0 or gs.n_output_groups == 0:
        raise EmptyGroups("tree construction needs at least one input and one output group")
    if block_inputs < 1 or block_outputs < 1:
        raise ValueError("block sizes must be >= 1")
    root = BlockNode(
        kind=DUMMY_ROOT,
        input_group_ids=tuple(range(gs.n_input_groups)),
        output_group_ids=tuple(range(gs.n_output_groups)),
    )
    for grun in _runs(gs.n_input_groups, block_inputs):
        for hrun in _runs(gs.n_output_groups, block_outputs):
            node = BlockNode(kind=INTERNAL, input_group_ids=grun, output_group_ids=hrun)
            for m in grun:
                for o in hrun:
                    node.children.append(
                        BlockNode(kind=LEAF, input_group_ids=(m,), output_group_ids=(o,))
                    )
            root.children.append(node)
    return ScreeningTree(root=root, gs=gs)


def dfs_order(tree: ScreeningTree) -> list:
    """Preorder depth-first node sequence (each node once, parents first)."""
    order = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(reversed(node.children))
    return order


def format_tree(tree: ScreeningTree) -> str:
    """Indented text rendering (kind, group ids, covered coefficient count)."""
    lines = []

    def visit(node: BlockNode, depth: int):
        gids = ",".join(str(m) for m in node.input_group_ids)
        hids = ",".join(str(o) for o in node.output_group_ids)
        lines.append(
            "  " * depth
            + f"{node.kind} inputs=[{gids}] outputs=[{hids}] "
            + f"cells={node.covered_cell_count(tree.gs)}"
        )
        for c in node.children:
            visit(c, depth + 1)

    visit(tree.root, 0)
    return "\n".join(lines)
