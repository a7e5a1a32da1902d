"""Weak-mixing scan over random deformations; prints verdict counts and escape statistics."""

import argparse
import collections
import time

import numpy as np

from tilecocycle.cli import load_model
from tilecocycle.deformation import ScanConfig, weak_mixing_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("model", nargs="+", help="kenyon P Q R | square")
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--lams", type=int, default=20)
    ap.add_argument("--radius", type=float, default=0.05)
    ap.add_argument("--N", type=int, default=300)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    system = load_model(args.model, "tiling")[0]
    cfg = ScanConfig(samples=args.samples, lams_per_sample=args.lams, radius=args.radius, N=args.N, seed=args.seed)
    t0 = time.perf_counter()
    rows = weak_mixing_scan(system, None, cfg, jobs=args.jobs)
    verdicts = collections.Counter("CandidateEigenvalue" if r[3] == "CandidateEigenvalue" else "Rejected" for r in rows)
    esc = np.array([r[4] for r in rows])
    print(f"rows {len(rows)} in {time.perf_counter() - t0:.1f}s")
    for k, v in sorted(verdicts.items()):
        print(f"{k}: {v}")
    print(f"escape fraction: min {esc.min():.3f}, median {np.median(esc):.3f}, max {esc.max():.3f}")


if __name__ == "__main__":
    main()
