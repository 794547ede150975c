"""Seed asymptotics at a fixed bump resolution h/eps.

The acceptance grid (n=48 on the 2*pi torus) holds the bump with only
0.75 to 3 nodes per eps.  Here the grid is refined with eps so that every
member of the sweep has ``h/eps = 1/nodes``; the remaining error is the
eps-dependence the theory describes (t -> 1, energy -> m_inf).

    python3 scripts/resolved_sweep.py --k 4 8 16 --nodes 6 [--minimize]
"""
import argparse
import time

from kgmtorus.analysis import analyze
from kgmtorus.energy import coupling_integrals, phi_seed
from kgmtorus.grid import SystemParams, TorusGrid
from kgmtorus.ground_state import shoot_ground_state
from kgmtorus.minimizer import SolveOptions, minimize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, nargs="+", default=[4, 8, 16], help="eps = r / k")
    ap.add_argument("--nodes", type=int, default=6, help="grid nodes per eps")
    ap.add_argument("--minimize", action="store_true", help="also descend from each seed")
    ap.add_argument("--max-iters", type=int, default=300)
    args = ap.parse_args()

    base = SystemParams("KGM", 1.0, 1.0, 0.5, 4.0, a=2.0)
    profile = shoot_ground_state(base.c0, base.p)
    print(f"m_inf = {profile.m_inf:.10g}  U(0) = {profile.u0:.10g}")
    for k in args.k:
        n = 2 * args.nodes * k
        grid = TorusGrid(n)
        par = base.with_eps(grid.injectivity_radius / k)
        t0 = time.perf_counter()
        seed = phi_seed(grid.node((1, 2, 3)), par, profile, grid)
        coupling = coupling_integrals(grid, seed.u, seed.psi, par)[0]
        line = (f"eps=r/{k:<3d} n={n:<4d} t-1={seed.t - 1:+.3e} "
                f"I/m_inf-1={seed.energy / profile.m_inf - 1:+.3e} coupling={coupling:.4g}")
        if args.minimize:
            res = minimize(seed, par, SolveOptions(max_iters=args.max_iters), grid)
            rec = analyze(grid, res.point, par, profile, res.grad_norm)
            line += (f" | {res.status.value} it={res.iterations} I/m_inf-1={rec.energy / profile.m_inf - 1:+.3e}"
                     f" peaks={rec.num_peaks} min_u={rec.min_value:.2e} sup_err={rec.profile_sup_error:.3e}")
        print(line + f"  ({time.perf_counter() - t0:.1f}s)", flush=True)


if __name__ == "__main__":
    main()
