#!/usr/bin/env python3
"""Run every scattering preset (exact and 20% noise) and summarize the maxima."""

import argparse
import time

import numpy as np

from emdsm import harness

EXAMPLES = ("example1", "example2a", "example2b", "example3", "example4", "example3d")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/examples", help="output root directory")
    parser.add_argument("--noise", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--skip-3d", action="store_true", help="skip the (slow) 3D preset")
    parser.add_argument("--names", nargs="*", default=None, help="subset of presets to run")
    args = parser.parse_args()

    names = args.names or EXAMPLES
    for name in names:
        if args.skip_3d and name == "example3d":
            continue
        for tag, eps in (("exact", None), (f"eps{args.noise:g}", args.noise)):
            config = harness.preset(
                name, noise=eps, seed=args.seed if eps else None,
                out=f"{args.out}/{name}_{tag}",
            )
            start = time.time()
            report = harness.run_experiment(config)
            combined = report.indices[-1]
            loc = np.array(combined["argmax"]["location"])
            print(f"{name} [{tag}] in {time.time() - start:.1f} s: "
                  f"argmax {np.round(loc, 3).tolist()}, "
                  f"{len(combined['maxima'])} maxima above half peak")


if __name__ == "__main__":
    main()
