"""Yield of one optimized design under both tolerance models, surrogate vs direct Monte Carlo.

With --marginal the goal level is set just above the design's own in-band
maximum so the yields are not trivially one.
"""
import argparse

import numpy as np

from topoforge.geometry import DesignVector
from topoforge.pipeline import RunConfig, RunReport, run_full
from topoforge.simbackend import Fidelity, MockBackend, evaluate
from topoforge.yieldmc import PerturbationSpec, estimate_yield_direct, estimate_yield_surrogate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--report", help="saved run report; a fresh run is made when omitted")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--n-direct", type=int, default=2000)
    ap.add_argument("--marginal", type=float, default=None, metavar="DB", help="goal = nominal max + DB")
    args = ap.parse_args()

    rep = RunReport.load(args.report) if args.report else run_full(RunConfig(seed=args.seed, output="runs/yield"))
    cfg = RunConfig.from_dict(rep.config)
    x = DesignVector.from_array(np.array(rep.x_f_star))
    be = MockBackend()
    band = (cfg.f_L, cfg.f_H)
    nominal = evaluate(be, x, cfg.grid, Fidelity.FINE).band_max(*band)
    goal = cfg.R_goal if args.marginal is None else nominal + args.marginal
    print(f"nominal in-band max {nominal:.3f} dB, goal {goal:.3f} dB")
    print("distribution\tY_surrogate\tY_direct\tsims_surrogate\tsims_direct")
    for spec in (PerturbationSpec.uniform(0.05), PerturbationSpec.gaussian(0.03), PerturbationSpec.gaussian(0.01),
                 PerturbationSpec.gaussian(0.05)):
        s = estimate_yield_surrogate(be, x, PerturbationSpec(spec.distribution, spec.magnitude, n_samples=args.n),
                                     band, goal, grid=cfg.grid)
        d = estimate_yield_direct(be, x, PerturbationSpec(spec.distribution, spec.magnitude, n_samples=args.n_direct),
                                  band, goal, grid=cfg.grid)
        print(f"{spec.distribution}:{spec.magnitude:g}\t{s.Y:.4f}\t{d.Y:.4f}\t{s.n_sims}\t{d.n_sims}")


if __name__ == "__main__":
    main()
