"""Collared prototile counts for the three named Kenyon models, 1- and 2-corona."""

import argparse
import time

from tilecocycle.algebra import CubicParams
from tilecocycle.geometry import collared_prototiles
from tilecocycle.models import kenyon_system

START = {(1, 1, 1): 10, (1, 1, 4): 5, (1, 2, 5): 4}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--convention", default="tiling", choices=["tiling", "offset"])
    args = ap.parse_args()
    print("params,depth,count,saturation_level,seconds,history")
    for params, level in START.items():
        system = kenyon_system(CubicParams(*params), args.convention).system
        for depth in args.depth:
            t0 = time.perf_counter()
            atlas = collared_prototiles(system, level=level, max_level=level + 6, depth=depth)
            hist = " ".join(f"{k}:{v}" for k, v in sorted(atlas.history.items()))
            print(f"\"{params}\",{depth},{atlas.count},{atlas.level},{time.perf_counter() - t0:.1f},{hist}")


if __name__ == "__main__":
    main()
