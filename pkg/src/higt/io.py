"""File formats: headered CSV matrices and group definition files.

Matrix format: a single header line ``# rows=<r> cols=<c>`` followed by one
CSV row of decimal floats per matrix row.  Group format: one group per line,
``g <id> : <comma-separated 1-based indices>`` for input groups and
``h <id> : ...`` for output groups; blank lines and ``#`` comments ignored.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .core import Dataset, GroupStructure
from .errors import DimensionMismatch

__all__ = [
    "save_matrix",
    "load_matrix",
    "save_groups",
    "load_groups",
    "load_dataset",
]

_HEADER_RE = re.compile(r"^#\s*rows=(\d+)\s+cols=(\d+)\s*$")
_GROUP_RE = re.compile(r"^([gh])\s+(\d+)\s*:\s*(.+)$")


def save_matrix(path, a: np.ndarray) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    with open(path, "w") as fh:
        fh.write(f"# rows={a.shape[0]} cols={a.shape[1]}\n")
        for row in a:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_matrix(path) -> np.ndarray:
    """Load a headered CSV matrix, validating the declared dimensions."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline()
        m = _HEADER_RE.match(header.strip())
        if m is None:
            raise ValueError(
                f"{path}: expected header '# rows=<r> cols=<c>', got {header!r}"
            )
        rows, cols = int(m.group(1)), int(m.group(2))
        a = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=np.float64)
    if a.size == 0:
        a = a.reshape(0, cols)
    if a.shape != (rows, cols):
        raise DimensionMismatch(
            f"{path}: header declares {rows}x{cols} but data is "
            f"{a.shape[0]}x{a.shape[1]}"
        )
    return a


def save_groups(path, gs: GroupStructure) -> None:
    """Write a group structure with 1-based indices, ids numbered from 1."""
    with open(path, "w") as fh:
        for i, g in enumerate(gs.input_groups):
            fh.write(f"g {i + 1} : {','.join(str(j + 1) for j in g)}\n")
        for i, h in enumerate(gs.output_groups):
            fh.write(f"h {i + 1} : {','.join(str(k + 1) for k in h)}\n")


def load_groups(path, num_inputs: int, num_outputs: int) -> GroupStructure:
    """Parse a group file; groups are ordered by their declared ids."""
    path = Path(path)
    parsed: dict[str, dict[int, list[int]]] = {"g": {}, "h": {}}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            m = _GROUP_RE.match(line)
            if m is None:
                raise ValueError(f"{path}:{lineno}: cannot parse group line {line!r}")
            kind, gid, body = m.group(1), int(m.group(2)), m.group(3)
            if gid in parsed[kind]:
                raise ValueError(f"{path}:{lineno}: duplicate {kind} group id {gid}")
            try:
                idx = [int(tok) for tok in body.split(",")]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad index list {body!r}") from exc
            if any(i < 1 for i in idx):
                raise ValueError(f"{path}:{lineno}: indices are 1-based, got {idx}")
            parsed[kind][gid] = [i - 1 for i in idx]
    input_groups = [parsed["g"][k] for k in sorted(parsed["g"])]
    output_groups = [parsed["h"][k] for k in sorted(parsed["h"])]
    return GroupStructure(
        input_groups=tuple(input_groups),
        output_groups=tuple(output_groups),
        num_inputs=num_inputs,
        num_outputs=num_outputs,
    )


def load_dataset(x_path, y_path) -> Dataset:
    """Load raw (unstandardized) x and y matrices as a Dataset."""
    x = load_matrix(x_path)
    y = load_matrix(y_path)
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(
            f"x has {x.shape[1]} samples but y has {y.shape[1]}"
        )
    return Dataset(x=x, y=y)
