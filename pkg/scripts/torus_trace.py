"""Compare the lattice (Poisson) trace with the Galerkin eigenvalue trace for a cosine potential."""
from __future__ import annotations

import argparse
import time

import numpy as np

from heatborel.measures import cosine_torus
from heatborel.torus import direct_error_bound, galerkin_spectrum, poisson_terms, torus_config, trace_direct


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=0.1, help="c(x) = 2 beta cos(2 pi x)")
    ap.add_argument("--cutoff", type=int, default=32, help="plane-wave cutoff of the Galerkin solver")
    ap.add_argument("--n-max", type=int, default=4)
    ap.add_argument("--quad-order", type=int, default=10)
    ap.add_argument("--t", type=complex, nargs="+", default=[0.1, 0.2, 0.2 * np.exp(1j * np.pi / 6), 0.5])
    args = ap.parse_args()

    p = cosine_torus(args.beta)
    cfg = torus_config(p, n_max=args.n_max, quad_order=args.quad_order)
    spec = galerkin_spectrum(p, args.cutoff)
    print(f"{'t':>22} {'|poisson - direct|':>20} {'direct bound':>14} {'Q_max':>6} {'seconds':>8}")
    for t in args.t:
        start = time.perf_counter()
        res = poisson_terms(t, cfg)
        elapsed = time.perf_counter() - start
        direct = trace_direct(spec, t)
        print(f"{t!s:>22} {abs(res.value - direct):20.3e} {direct_error_bound(spec, t):14.3e} "
              f"{res.q_max:6d} {elapsed:8.2f}")


if __name__ == "__main__":
    main()
