"""Sample remainders R_r(t) of the cosine-potential kernel and fit the factorial bound K r! |t|^r / kappa^r."""
from __future__ import annotations

import argparse
import warnings

import numpy as np

from heatborel.borel import halfdisk_samples, nevanlinna_samples, verify_watson
from heatborel.measures import cosine_measure
from heatborel.series import DeformationConfig, remainder_table

QUAD = (12, 10, 8, 6, 5, 4, 3, 3)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega", type=float, default=0.0, help="0 for the free case, otherwise harmonic")
    ap.add_argument("--beta", type=float, default=0.1)
    ap.add_argument("--samples", type=int, default=80)
    ap.add_argument("--r-max", type=int, default=10)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--kappa", type=float, default=None, help="fixed kappa; fitted when omitted")
    args = ap.parse_args()

    meas = cosine_measure(args.beta)
    if args.omega == 0:
        cfg = DeformationConfig(meas, 0.0, n_max=8, quad_order=QUAD)
        T, domain = 0.5, "nevanlinna"
        ts = nevanlinna_samples(T, args.samples, args.seed)
    else:
        cfg = DeformationConfig(meas, args.omega, n_max=6, quad_order=QUAD[:6])
        T, domain = cfg.t_domain_radius, "halfdisk"
        ts = halfdisk_samples(T, args.samples, args.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = remainder_table(args.r_max, ts, np.zeros(1), np.zeros(1), cfg)
    rep = verify_watson(ts, T, args.kappa, remainders=table[1:], domain=domain,
                        samples_meta={"seed": args.seed, "count": args.samples})
    print(f"domain {domain}, T = {T:.4f}, kappa = {rep.kappa:.4f} (fitted {rep.kappa_fit:.4f})")
    print(f"K = {rep.K:.4f}, max growth factor {rep.max_growth:.4f}, diverging: {rep.diverging}")
    print(f"{'r':>3} {'rho_r':>12} {'kappa^r rho_r':>14}")
    for r, rho, ratio in zip(rep.r_values, rep.rho, rep.ratios):
        print(f"{r:3d} {rho:12.4e} {ratio:14.4e}")


if __name__ == "__main__":
    main()
