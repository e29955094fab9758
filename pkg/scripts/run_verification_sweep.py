#!/usr/bin/env python3
"""Sweep piston speeds and print the background verification summary.

Solves the self-similar profile at each requested speed, reports the
asymptotic deviation slopes, and runs the ellipticity / boundary-sign /
local-stability checks of the straightened formulation.
"""

import argparse
import json

import numpy as np

from conicshock import (
    GasParams,
    asymptotic_report,
    boundary_signs,
    check_ellipticity,
    local_stability,
    solve_background,
)
from conicshock.background import ode_residual


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b0", type=float, nargs="+",
                    default=[10.0, 20.0, 40.0, 80.0])
    ap.add_argument("--gamma", type=float, default=1.4)
    ap.add_argument("--n", type=int, default=3, choices=(2, 3))
    ap.add_argument("--grid-size", type=int, default=2048)
    ap.add_argument("--json", type=str, default=None,
                    help="also dump the raw numbers to this file")
    args = ap.parse_args()

    gas = GasParams(A=1.0, gamma=args.gamma, rho0=1.0)
    raw = {"gamma": args.gamma, "n": args.n, "per_b0": {}}

    print(f"gamma = {args.gamma}, n = {args.n}")
    print(f"{'b0':>6} {'delta':>12} {'ode_res':>10} {'ellipt':>7} "
          f"{'signs':>6} {'transv':>7} {'quad_form':>11}")
    for b0 in args.b0:
        sol = solve_background(b0, gas, n=args.n, grid_size=args.grid_size)
        er = check_ellipticity(sol)
        bs = boundary_signs(sol)
        st = local_stability(sol)
        res = ode_residual(sol)
        print(f"{b0:>6g} {sol.delta:>12.4e} {res:>10.2e} "
              f"{str(er.passed):>7} {str(not bs.degenerate):>6} "
              f"{str(st.transversal):>7} {st.quad_form:>11.3e}")
        raw["per_b0"][f"{b0:g}"] = {
            "delta": float(sol.delta),
            "ode_residual": float(res),
            "ellipticity": er.passed,
            "quad_form": float(st.quad_form),
            "delta0": float(st.delta0),
            "D22": {str(k): float(v) for k, v in bs.D22.items()},
        }

    rep = asymptotic_report(args.b0, gas, n=args.n, grid_size=args.grid_size)
    print(f"\nasymptotic slopes (expected near {rep.expected_slope:g} for "
          f"the ratio items):")
    for k, v in sorted(rep.slopes.items()):
        devs = " ".join(f"{x:.2e}" for x in rep.deviations[k])
        print(f"  {k:<16} slope {v:>7.3f}   deviations {devs}")
    raw["slopes"] = rep.slopes
    raw["denominator_negative"] = rep.denominator_negative

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(raw, fh, indent=2, sort_keys=True)
        print(f"\nwrote {args.json}")


if __name__ == "__main__":
    main()
