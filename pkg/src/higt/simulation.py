"""Seeded simulation of chained overlapping groups and planted coefficients.

Inputs are i.i.d. Uniform[0,1]; input groups are built left to right with
sizes drawn from U[5,10] and overlaps with the previous group from U[1,4]
(outputs: sizes U[3,5], overlaps U[1,2]); the true coefficient matrix plants
a fixed number of equal-valued nonzeros block-aligned with the groups; noise
is i.i.d. Gaussian.  Each matrix draws from its own RNG stream split off the
instance seed, so instances are bit-reproducible regardless of generation
order refactors.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import Dataset, GroupStructure, standardize
from .errors import InfeasibleConfig

__all__ = ["SimConfig", "SimInstance", "simulate", "plant_support"]


@dataclass(frozen=True)
class SimConfig:
    n_samples: int = 200
    n_inputs: int = 500
    n_outputs: int = 5
    input_group_size_range: tuple = (5, 10)
    input_overlap_range: tuple = (1, 4)
    output_group_size_range: tuple = (3, 5)
    output_overlap_range: tuple = (1, 2)
    nonzero_count: int = 52
    nonzero_value: float = 3.0
    noise_std: float = 1.0
    seed: int = 0
    # when set, this many input groups are generated and n_inputs is derived
    # from where the chain ends (used by group-count benchmark axes)
    input_group_count: int | None = None

    def __post_init__(self):
        if min(self.n_samples, self.n_inputs, self.n_outputs) < 1:
            raise InfeasibleConfig("dimensions must be positive")
        for sizes, overlaps, what in (
            (self.input_group_size_range, self.input_overlap_range, "input"),
            (self.output_group_size_range, self.output_overlap_range, "output"),
        ):
            lo, hi = sizes
            olo, ohi = overlaps
            if not (1 <= lo <= hi and 1 <= olo <= ohi):
                raise InfeasibleConfig(f"bad {what} group size/overlap ranges")
            if ohi >= lo:
                raise InfeasibleConfig(
                    f"{what} overlap upper bound must be below the size lower "
                    "bound so consecutive groups advance"
                )
        if self.nonzero_count < 0:
            raise InfeasibleConfig("nonzero_count must be nonnegative")
        if self.noise_std < 0:
            raise InfeasibleConfig("noise_std must be nonnegative")
        if not 0 <= int(self.seed) < 2**64:
            raise InfeasibleConfig("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class SimInstance:
    dataset: Dataset
    groups: GroupStructure
    b_true: np.ndarray
    seed: int
    x_raw: np.ndarray
    y_raw: np.ndarray
    noise: np.ndarray


def _chain(total: int, size_range, overlap_range, rng) -> list:
    """Chained overlapping groups covering 0..total-1 (last one truncated)."""
    groups = []
    start = 0
    while start < total:
        size = int(rng.integers(size_range[0], size_range[1] + 1))
        end = min(start + size, total)
        groups.append(np.arange(start, end, dtype=np.intp))
        if end >= total:
            break
        overlap = int(rng.integers(overlap_range[0], overlap_range[1] + 1))
        start = end - overlap
    return groups


def _chain_count(count: int, size_range, overlap_range, rng) -> tuple:
    """Exactly ``count`` chained groups; returns (groups, total_extent)."""
    groups = []
    start = 0
    end = 0
    for i in range(count):
        size = int(rng.integers(size_range[0], size_range[1] + 1))
        end = start + size
        groups.append(np.arange(start, end, dtype=np.intp))
        if i + 1 < count:
            overlap = int(rng.integers(overlap_range[0], overlap_range[1] + 1))
            start = end - overlap
    return groups, end


def plant_support(groups: GroupStructure, nonzero_count: int, rng) -> set:
    """Choose planted coefficient positions aligned with whole blocks.

    Blocks (input group x output group) are visited in random order; each is
    filled row by row until the requested count is reached, so true supports
    are expressible by the group structure.
    """
    if nonzero_count == 0:
        return set()
    if nonzero_count > groups.num_inputs * groups.num_outputs:
        raise InfeasibleConfig(
            f"cannot plant {nonzero_count} nonzeros in a "
            f"{groups.num_outputs}x{groups.num_inputs} matrix"
        )
    pairs = [
        (m, o)
        for m in range(groups.n_input_groups)
        for o in range(groups.n_output_groups)
    ]
    order = rng.permutation(len(pairs))
    chosen: set = set()
    for idx in order:
        m, o = pairs[idx]
        for k in groups.output_groups[o]:
            for j in groups.input_groups[m]:
                cell = (int(k), int(j))
                if cell not in chosen:
                    chosen.add(cell)
                    if len(chosen) == nonzero_count:
                        return chosen
    raise InfeasibleConfig(
        f"group blocks cover only {len(chosen)} cells, cannot plant "
        f"{nonzero_count} nonzeros"
    )


def simulate(cfg: SimConfig) -> SimInstance:
    """Generate one seeded instance; identical seeds give bit-identical data."""
    ss = np.random.SeedSequence(cfg.seed)
    rng_groups, rng_x, rng_support, rng_noise = (
        np.random.default_rng(s) for s in ss.spawn(4)
    )

    if cfg.input_group_count is not None:
        input_groups, n_inputs = _chain_count(
            cfg.input_group_count,
            cfg.input_group_size_range,
            cfg.input_overlap_range,
            rng_groups,
        )
        cfg = replace(cfg, n_inputs=n_inputs, input_group_count=None)
    else:
        input_groups = _chain(
            cfg.n_inputs, cfg.input_group_size_range, cfg.input_overlap_range, rng_groups
        )
    output_groups = _chain(
        cfg.n_outputs, cfg.output_group_size_range, cfg.output_overlap_range, rng_groups
    )
    gs = GroupStructure(
        input_groups=tuple(input_groups),
        output_groups=tuple(output_groups),
        num_inputs=cfg.n_inputs,
        num_outputs=cfg.n_outputs,
    )

    support = plant_support(gs, cfg.nonzero_count, rng_support)
    b_true = np.zeros((cfg.n_outputs, cfg.n_inputs))
    if support:
        rows, cols = zip(*sorted(support))
        b_true[list(rows), list(cols)] = cfg.nonzero_value

    x_raw = rng_x.uniform(0.0, 1.0, size=(cfg.n_inputs, cfg.n_samples))
    noise = cfg.noise_std * rng_noise.standard_normal((cfg.n_outputs, cfg.n_samples))
    y_raw = b_true @ x_raw + noise

    ds = standardize(Dataset(x=x_raw, y=y_raw))
    return SimInstance(
        dataset=ds,
        groups=gs,
        b_true=b_true,
        seed=cfg.seed,
        x_raw=x_raw,
        y_raw=y_raw,
        noise=noise,
    )
