#!/usr/bin/env python3
"""Time-step refinement study for both integrators.

Marches a fixed one-dimensional semilinear problem at a ladder of step
sizes, measures the sup-norm error against a much finer reference run,
and prints the observed order between consecutive rungs.

Usage: python3 scripts/convergence_study.py [--theta 3] [--t-final 1.0]
"""

import argparse

import numpy as np

from dissipwave import SolverConfig, gaussian_bump, make_grid, solve
from dissipwave.grid import Field
from dissipwave.solver import u_field


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--theta", type=int, default=3)
    parser.add_argument("--t-final", type=float, default=1.0)
    parser.add_argument("--points", type=int, default=128)
    parser.add_argument("--half-width", type=float, default=16.0)
    args = parser.parse_args()

    grid = make_grid(1, args.points, args.half_width)
    u0 = gaussian_bump(grid, 1.0, 1.0)
    u1 = Field(grid, np.zeros(grid.shape))
    dts = [args.t_final / k for k in (10, 20, 40, 80)]
    ref_dt = args.t_final / 1280

    for integrator in ("exponential_duhamel", "reference_rk4"):
        def run(dt: float) -> np.ndarray:
            cfg = SolverConfig(theta=args.theta, dt=dt,
                               t_final=args.t_final, integrator=integrator)
            return u_field(solve(u0, u1, cfg)).values

        ref = run(ref_dt)
        print(f"\n{integrator} (reference dt = {ref_dt:g}):")
        print(f"  {'dt':>10s} {'sup error':>12s} {'order':>7s}")
        prev = None
        for dt in dts:
            err = float(np.max(np.abs(run(dt) - ref)))
            order = f"{np.log2(prev / err):7.3f}" if prev else "      -"
            print(f"  {dt:10.5f} {err:12.4e} {order}")
            prev = err


if __name__ == "__main__":
    main()
