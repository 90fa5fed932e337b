"""Consistency and sqrt(N)-stability Monte Carlo for the quantile estimator.

    python scripts/run_montecarlo.py                      # N = 50, 200, 800; 50 reps
    python scripts/run_montecarlo.py --sizes 200,800,3200 --reps 200
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hyperquantile import io  # noqa: E402
from hyperquantile.experiments import MonteCarloConfig, montecarlo  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--generator", default="dispersion:2")
    ap.add_argument("--sizes", default="50,200,800")
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--xi-angle", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    ns = ap.parse_args()
    mc = MonteCarloConfig(ns.generator, tuple(int(s) for s in ns.sizes.split(",")), ns.reps, ns.beta,
                          ns.xi_angle, ns.seed)
    rep = montecarlo(mc)
    for n, med, sd in zip(mc.sizes, rep.median_error, rep.scaled_sd):
        print(f"N={n:6d}  median error {med:.5f}  sqrt(N) sd {sd[0]:.4f}, {sd[1]:.4f}")
    print(f"decreasing: {rep.decreasing}   sd ratio: {rep.sd_ratio:.3f}   failures: {rep.failures}"
          f"   ({rep.seconds:.0f}s)")
    if ns.out:
        Path(ns.out).parent.mkdir(parents=True, exist_ok=True)
        io.write_json(ns.out, rep.to_dict())


if __name__ == "__main__":
    main()
