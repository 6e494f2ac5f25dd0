"""Sampled radius of the half-disk on which the deformation form keeps a non-negative real part."""
from __future__ import annotations

import argparse

from heatborel.defmatrix import draw_td_samples, estimate_Td, half_disk_violations, td_ceiling


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega", type=complex, nargs="+", default=[1.0, 2j, 0.5j, 3.0])
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--check-seed", type=int, default=1, help="independent batch used to re-check the estimate")
    args = ap.parse_args()

    check = draw_td_samples(args.n_max, args.samples, args.check_seed)
    print(f"{'omega':>10} {'T_d':>10} {'ceiling':>10} {'violations (independent batch)':>32}")
    for omega in args.omega:
        T = estimate_Td(omega, args.n_max, args.samples, args.seed)
        viol = half_disk_violations(omega, T, check) if T > 0 else (0, 0)
        print(f"{omega!s:>10} {T:10.5f} {td_ceiling(omega):10.5f} {viol!s:>32}")


if __name__ == "__main__":
    main()
