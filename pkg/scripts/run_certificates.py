#!/usr/bin/env python3
"""Scan the multiplier exponent across its admissible window.

For a given dimension, adiabatic exponent, and piston speed, evaluates the
energy-multiplier certificate on a grid of time exponents mu spanning a
neighbourhood of the admissible window and prints which conditions hold.
"""

import argparse

import numpy as np

from conicshock import (
    GasParams,
    admissible_mu,
    certify,
    decay_exponent,
    solve_background,
    K_coeffs,
    MultiplierChoice,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3, choices=(2, 3))
    ap.add_argument("--gamma", type=float, default=1.4)
    ap.add_argument("--b0", type=float, default=80.0)
    ap.add_argument("--points", type=int, default=9,
                    help="mu samples inside the window")
    ap.add_argument("--margin", type=float, default=0.1,
                    help="extra mu range probed beyond each endpoint")
    args = ap.parse_args()

    win = admissible_mu(args.n, args.gamma)
    print(f"n = {args.n}, gamma = {args.gamma}, b0 = {args.b0}")
    print(f"admissible mu window: ({win.lo!r}, {float(win.hi)!r})")
    print(f"decay exponent bound: {float(decay_exponent(args.n, args.gamma))!r}")

    gas = GasParams(A=1.0, gamma=args.gamma, rho0=1.0)
    sol = solve_background(args.b0, gas, n=args.n)

    inside = np.linspace(win.lo, win.hi, args.points + 2)[1:-1]
    outside = [win.lo - args.margin, float(win.hi) + args.margin]
    print(f"\n{'mu':>10} {'in_window':>9} {'symbolic':>8} {'K00>0':>6} "
          f"{'disc<0':>7} {'Knn>0':>6} {'bndry':>6} {'status':>8}")
    for mu in sorted([*inside, *outside]):
        choice = MultiplierChoice.standard(args.n, args.gamma, args.b0,
                                           mu=float(mu))
        cert = K_coeffs(sol, choice)
        print(f"{mu:>10.4f} {str(cert.mu_in_window):>9} "
              f"{str(cert.symbolic_pass):>8} {str(cert.k00_positive):>6} "
              f"{str(cert.disc_negative):>7} {str(cert.knn_positive):>6} "
              f"{str(cert.boundary_pass):>6} {cert.status:>8}")

    mid = float(win.midpoint)
    cert = certify(args.n, args.gamma, args.b0, mid, gas=gas)
    print(f"\nmidpoint mu = {mid!r}: status {cert.status}")
    for name, value in cert.conditions.items():
        print(f"  {name:<14} {float(value):+.6e}")


if __name__ == "__main__":
    main()
