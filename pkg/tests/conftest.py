import numpy as np
import pytest

from higt import Dataset, GroupStructure, RegParams, standardize


@pytest.fixture
def tiny_gs():
    """2x2 coefficient matrix, one input group {0,1}, one output group {0,1}."""
    return GroupStructure(
        input_groups=(np.array([0, 1]),),
        output_groups=(np.array([0, 1]),),
        num_inputs=2,
        num_outputs=2,
    )


@pytest.fixture
def small_gs():
    """4x8 matrix with overlapping input and output groups."""
    return GroupStructure(
        input_groups=(np.array([0, 1, 2, 3]), np.array([2, 3, 4, 5]), np.array([5, 6, 7])),
        output_groups=(np.array([0, 1]), np.array([1, 2, 3])),
        num_inputs=8,
        num_outputs=4,
    )


def random_dataset(seed, n_inputs=6, n_outputs=3, n_samples=40):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n_inputs, n_samples))
    y = rng.normal(size=(n_outputs, n_samples))
    return standardize(Dataset(x=x, y=y))


def random_group_structure(rng, n_inputs, n_outputs):
    """Chained overlapping groups covering all indices."""
    def chain(total, lo, hi, olo, ohi):
        groups, start = [], 0
        while start < total:
            size = int(rng.integers(lo, hi + 1))
            end = min(start + size, total)
            groups.append(np.arange(start, end))
            if end >= total:
                break
            start = end - int(rng.integers(olo, ohi + 1))
        return tuple(groups)

    return GroupStructure(
        input_groups=chain(n_inputs, 3, 5, 1, 2),
        output_groups=chain(n_outputs, 2, 3, 1, 1),
        num_inputs=n_inputs,
        num_outputs=n_outputs,
    )


@pytest.fixture
def rp_unit():
    return RegParams(1.0, 1.0, 1.0)
