"""Generate frozen reference minima for the proximal-operator tests.

Runs the projected-subgradient oracle (restarted Polyak levels, >= 1e6
iterations) on each seeded 4x6 prox instance, cross-checks the value against
an interior-point solve (cvxpy, generation-time only), and freezes the
results into tests/data/prox_oracle.json.

Usage: python3 tests/oracles/gen_prox_oracle.py
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from oracle_instances import (
    build_prox_instance,
    penalty_subgradient,
    polyak_polish,
    polyak_subgradient,
)

from higt import penalty


def prox_value_fn(v, gs, rp, step):
    def value(z):
        d = z - v
        return 0.5 * float(np.vdot(d, d)) + step * penalty(z, gs, rp)

    def subgrad(z):
        return (z - v) + step * penalty_subgradient(z, gs, rp)

    return value, subgrad


def cvxpy_reference(v, gs, rp, step):
    import cvxpy as cp

    z = cp.Variable(v.shape)
    pen = rp.lambda1 * cp.sum(cp.abs(z))
    for g in gs.input_groups:
        pen += rp.lambda2 * cp.sum(cp.norm(z[:, list(g)], axis=1))
    for h in gs.output_groups:
        pen += rp.lambda3 * cp.sum(cp.norm(z[list(h), :], axis=0))
    prob = cp.Problem(cp.Minimize(0.5 * cp.sum_squares(z - v) + step * pen))
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def main():
    records = []
    for seed in range(3):
        v, gs, rp, step = build_prox_instance(seed)
        value, subgrad = prox_value_fn(v, gs, rp, step)
        f_cvx = cvxpy_reference(v, gs, rp, step)
        f_best, z_best, iters = polyak_subgradient(
            value, subgrad, np.zeros_like(v), max_iters=1_000_000,
        )
        target = min(f_best, f_cvx) - 1e-11
        while iters < 6_000_000:
            if abs(f_best - f_cvx) <= 2e-9:
                break
            f_best, z_best, used = polyak_polish(
                value, subgrad, z_best, f_best, target, 400_000
            )
            iters += used
        gap = abs(f_best - f_cvx)
        print(f"seed={seed}: oracle={f_best:.12f} cvxpy={f_cvx:.12f} "
              f"gap={gap:.2e} iters={iters}")
        assert gap <= 2e-8, "subgradient oracle did not reach reference precision"
        records.append(
            {"seed": seed, "oracle_objective": f_best, "iterations": iters,
             "crosscheck_gap": gap}
        )
    out = Path(__file__).resolve().parents[1] / "data" / "prox_oracle.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(records, indent=2) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
