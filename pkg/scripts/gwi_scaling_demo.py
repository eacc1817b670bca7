"""Scaling ladder for the branching chain with heavy-tailed immigration.

Runs the discrete chain at increasing population scale N with steps ~ N**alpha,
fits a Linnik Laplace transform to the empirical one, and prints how the
fitted curve approaches the continuum limit as N grows.

Usage: python3 scripts/gwi_scaling_demo.py --scales 100,1000,10000 --replicas 100000
"""

import argparse

import numpy as np

from fvbeta.mbi import GWIConfig, fit_linnik_laplace, gwi_chain, gwi_limit_parameters
from fvbeta.samplers import RngStream


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--c", type=float, default=0.5)
    ap.add_argument("--d", type=float, default=0.5)
    ap.add_argument("--scales", type=str, default="100,1000,10000")
    ap.add_argument("--replicas", type=int, default=100_000)
    ap.add_argument("--lams", type=str, default="0.5,1,2")
    ap.add_argument("--seed", type=int, default=31)
    args = ap.parse_args()

    lams = np.array([float(s) for s in args.lams.split(",")])
    scales = [int(s) for s in args.scales.split(",")]
    root = RngStream(args.seed)

    print(f"alpha={args.alpha} c={args.c} d={args.d}  lams={args.lams}  replicas={args.replicas}")
    print("     N  steps    kappa_fit  gamma_fit   max|fit-emp|   max|fit-limit|")
    for i, capacity in enumerate(scales):
        cfg = GWIConfig(c=args.c, d=args.d, N=capacity, steps=round(capacity**args.alpha))
        lap = gwi_chain(cfg, args.alpha, root.child(i), n_replicas=args.replicas)
        emp = np.array([lap(l) for l in lams])
        kappa, gamma = fit_linnik_laplace(lams, emp, args.alpha)
        fitted = (1.0 + (kappa * lams) ** args.alpha) ** (-gamma)
        kap_th, gam_th = gwi_limit_parameters(cfg, args.alpha)
        limit = (1.0 + (kap_th * lams) ** args.alpha) ** (-gam_th)
        print(
            f"{capacity:>6}  {cfg.steps:>5}   {kappa:9.5f}  {gamma:9.5f}"
            f"   {np.max(np.abs(fitted - emp)):11.2e}   {np.max(np.abs(fitted - limit)):12.2e}"
        )
    print(f"limit parameters at the last scale: kappa={kap_th:.5f} gamma={gam_th:.5f}")


if __name__ == "__main__":
    main()
