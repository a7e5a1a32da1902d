"""Top Lyapunov exponent on a z1 x z2 grid (z3 fixed), written as CSV."""

import argparse
import math

import numpy as np

from tilecocycle.cli import load_model
from tilecocycle.cocycle import lyapunov_batch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("model", nargs="+", help="kenyon P Q R | square")
    ap.add_argument("--grid", type=int, default=32)
    ap.add_argument("--z3", type=float, default=0.0)
    ap.add_argument("--N", type=int, default=1000)
    args = ap.parse_args()
    system = load_model(args.model, "tiling")[0]
    g = np.arange(args.grid) / args.grid
    Z = np.zeros((args.grid * args.grid, system.s))
    Z[:, 0] = np.repeat(g, args.grid)
    Z[:, 1] = np.tile(g, args.grid)
    if system.s > 2:
        Z[:, 2] = args.z3
    chi = lyapunov_batch(system, Z, args.N)
    bound = system.d * math.log(system.theta)
    print("z1,z2,chi_plus,ratio_to_d_log_theta")
    for z, c in zip(Z, chi):
        print(f"{z[0]:.6g},{z[1]:.6g},{c:.10g},{c / bound:.6f}")


if __name__ == "__main__":
    main()
