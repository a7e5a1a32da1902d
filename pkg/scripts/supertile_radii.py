"""Normalized inradius and circumradius r_n / theta^n, R_n / theta^n per prototile."""

import argparse

from tilecocycle.cli import load_model
from tilecocycle.geometry import supertile_radii


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("model", nargs="+", help="kenyon P Q R | square")
    ap.add_argument("--max-level", type=int, default=8)
    args = ap.parse_args()
    system = load_model(args.model, "tiling")[0]
    print("type,n,inradius_norm,circumradius_norm")
    for j in range(system.m):
        for n in range(args.max_level + 1):
            r, R = supertile_radii(system, None, j, n)
            print(f"{system.labels[j]},{n},{r / system.theta ** n:.6f},{R / system.theta ** n:.6f}")


if __name__ == "__main__":
    main()
