"""Data model and objective for multi-task regression with structured sparsity.

The model is ``Y = B X + E`` with inputs ``X`` of shape (n_inputs, n_samples),
outputs ``Y`` of shape (n_outputs, n_samples) and coefficients ``B`` of shape
(n_outputs, n_inputs).  The fitted objective is

    0.5 * ||Y - B X||_F^2
      + lambda1 * sum_{k,j} w[k,j] * |B[k,j]|
      + lambda2 * sum_k sum_m rho[m] * ||B[k, g_m]||_2
      + lambda3 * sum_j sum_o nu[o]  * ||B[h_o, j]||_2

where ``g_m`` are (possibly overlapping) groups of input columns and ``h_o``
are (possibly overlapping) groups of output rows.  Coefficient matrices and
correlation matrices are plain float64 ``numpy`` arrays throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantRow, DimensionMismatch

__all__ = [
    "Dataset",
    "GroupStructure",
    "RegParams",
    "standardize",
    "penalty",
    "objective",
    "smooth_gradient",
]

# Rows with population variance below this are rejected at standardization.
_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Input/output data, rows are variables and columns are samples.

    Parameters
    ----------
    x : ndarray, shape (n_inputs, n_samples)
    y : ndarray, shape (n_outputs, n_samples)
    x_center, x_scale, y_center, y_scale : ndarray or None
        Per-row standardization factors recorded by :func:`standardize`;
        ``None`` on raw data.
    """

    x: np.ndarray
    y: np.ndarray
    x_center: np.ndarray | None = None
    x_scale: np.ndarray | None = None
    y_center: np.ndarray | None = None
    y_scale: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 2 or y.ndim != 2:
            raise DimensionMismatch("x and y must be 2-D arrays")
        if x.shape[1] != y.shape[1]:
            raise DimensionMismatch(
                f"x has {x.shape[1]} samples but y has {y.shape[1]}"
            )
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise DimensionMismatch("x and y must be finite")

    @property
    def n_samples(self) -> int:
        return self.x.shape[1]

    @property
    def n_inputs(self) -> int:
        return self.x.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.y.shape[0]

    @property
    def is_standardized(self) -> bool:
        return self.x_scale is not None


@dataclass(frozen=True)
class RegParams:
    """The three regularization strengths (element, input-group, output-group)."""

    lambda1: float
    lambda2: float
    lambda3: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a nonnegative real, got {v}")
            object.__setattr__(self, name, v)


def _as_group(indices, bound: int, what: str, i: int) -> np.ndarray:
    g = np.unique(np.asarray(indices, dtype=np.intp))
    if g.size == 0:
        raise DimensionMismatch(f"{what} group {i} is empty")
    if g.min() < 0 or g.max() >= bound:
        raise DimensionMismatch(
            f"{what} group {i} has indices outside [0, {bound})"
        )
    return g


@dataclass(frozen=True)
class GroupStructure:
    """Overlapping input groups (column index sets) and output groups (row
    index sets), with per-group and per-element penalty weights.

    Group indices are 0-based internally; the text file format uses 1-based
    indices (see :mod:`higt.io`).  Groups may overlap and need not cover all
    indices.  All weights default to 1.
    """

    input_groups: tuple
    output_groups: tuple
    num_inputs: int
    num_outputs: int
    input_weights: np.ndarray | None = None
    output_weights: np.ndarray | None = None
    element_weights: np.ndarray | None = None

    def __post_init__(self):
        ig = tuple(
            _as_group(g, self.num_inputs, "input", i)
            for i, g in enumerate(self.input_groups)
        )
        og = tuple(
            _as_group(h, self.num_outputs, "output", i)
            for i, h in enumerate(self.output_groups)
        )
        object.__setattr__(self, "input_groups", ig)
        object.__setattr__(self, "output_groups", og)
        rho = (
            np.ones(len(ig))
            if self.input_weights is None
            else np.asarray(self.input_weights, dtype=np.float64)
        )
        nu = (
            np.ones(len(og))
            if self.output_weights is None
            else np.asarray(self.output_weights, dtype=np.float64)
        )
        if rho.shape != (len(ig),):
            raise DimensionMismatch("input_weights length must match input group count")
        if nu.shape != (len(og),):
            raise DimensionMismatch("output_weights length must match output group count")
        if len(ig) and rho.min() <= 0 or len(og) and nu.min() <= 0:
            raise ValueError("group weights must be positive")
        object.__setattr__(self, "input_weights", rho)
        object.__setattr__(self, "output_weights", nu)
        if self.element_weights is not None:
            w = np.asarray(self.element_weights, dtype=np.float64)
            if w.shape != (self.num_outputs, self.num_inputs):
                raise DimensionMismatch(
                    "element_weights must have shape (num_outputs, num_inputs)"
                )
            if w.min() <= 0:
                raise ValueError("element weights must be positive")
            object.__setattr__(self, "element_weights", w)

    @property
    def n_input_groups(self) -> int:
        return len(self.input_groups)

    @property
    def n_output_groups(self) -> int:
        return len(self.output_groups)

    def input_union(self) -> np.ndarray:
        """Sorted union of all input-group column indices."""
        if not self.input_groups:
            return np.empty(0, dtype=np.intp)
        return np.unique(np.concatenate(self.input_groups))

    def output_union(self) -> np.ndarray:
        """Sorted union of all output-group row indices."""
        if not self.output_groups:
            return np.empty(0, dtype=np.intp)
        return np.unique(np.concatenate(self.output_groups))


def standardize(raw: Dataset) -> Dataset:
    """Center each row of x and y and scale it to unit population variance.

    The population (1/N) variance convention is used, so each standardized
    row satisfies ``||row||^2 == n_samples`` exactly; this makes Lipschitz
    estimates of the squared loss depend only on sample counts.  The input
    dataset is not modified.

    Raises
    ------
    ConstantRow
        If any row has variance below 1e-12.
    """
    out = {}
    for name in ("x", "y"):
        a = getattr(raw, name)
        center = a.mean(axis=1)
        var = a.var(axis=1)  # population convention
        bad = np.flatnonzero(var < _VARIANCE_FLOOR)
        if bad.size:
            raise ConstantRow(name, int(bad[0]), float(var[bad[0]]))
        scale = np.sqrt(var)
        out[name] = (a - center[:, None]) / scale[:, None]
        out[name + "_center"] = center
        out[name + "_scale"] = scale
    return Dataset(**out)


def _check_b(b: np.ndarray, n_outputs: int, n_inputs: int) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (n_outputs, n_inputs):
        raise DimensionMismatch(
            f"coefficient matrix has shape {b.shape}, expected "
            f"({n_outputs}, {n_inputs})"
        )
    return b


def penalty(b: np.ndarray, gs: GroupStructure, rp: RegParams) -> float:
    """Evaluate the three-part sparsity penalty at coefficient matrix ``b``.

    Returns ``lambda1 * sum w |b|  +  lambda2 * sum_k sum_m rho_m ||b[k, g_m]||
    + lambda3 * sum_j sum_o nu_o ||b[h_o, j]||``.
    """
    b = _check_b(b, gs.num_outputs, gs.num_inputs)
    total = 0.0
    if rp.lambda1 > 0:
        absb = np.abs(b)
        if gs.element_weights is not None:
            absb = absb * gs.element_weights
        total += rp.lambda1 * absb.sum()
    if rp.lambda2 > 0:
        for rho, g in zip(gs.input_weights, gs.input_groups):
            # one ell-2 norm per output row k
            total += rp.lambda2 * rho * np.linalg.norm(b[:, g], axis=1).sum()
    if rp.lambda3 > 0:
        for nu, h in zip(gs.output_weights, gs.output_groups):
            # one ell-2 norm per input column j
            total += rp.lambda3 * nu * np.linalg.norm(b[h, :], axis=0).sum()
    return float(total)


def objective(b: np.ndarray, ds: Dataset, gs: GroupStructure, rp: RegParams) -> float:
    """Full objective: half squared Frobenius residual plus :func:`penalty`."""
    b = _check_b(b, ds.n_outputs, ds.n_inputs)
    if gs.num_inputs != ds.n_inputs or gs.num_outputs != ds.n_outputs:
        raise DimensionMismatch("group structure dimensions do not match dataset")
    resid = ds.y - b @ ds.x
    return 0.5 * float(np.vdot(resid, resid)) + penalty(b, gs, rp)


def smooth_gradient(b: np.ndarray, ds: Dataset) -> np.ndarray:
    """Gradient of the smooth loss ``0.5 ||Y - B X||_F^2``, i.e. ``(B X - Y) X^T``."""
    b = _check_b(b, ds.n_outputs, ds.n_inputs)
    return (b @ ds.x - ds.y) @ ds.x.T
