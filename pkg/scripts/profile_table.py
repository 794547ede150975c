"""Print U(0), m_inf, decay rate and the Nehari defect of the radial ground state.

    python3 scripts/profile_table.py --c0 1 2 --p 4 5
"""
import argparse
import math

from kgmtorus.ground_state import shoot_ground_state


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c0", type=float, nargs="+", default=[1.0, 2.0])
    ap.add_argument("--p", type=float, nargs="+", default=[4.0, 5.0])
    args = ap.parse_args()
    print(f"{'c0':>6} {'p':>4} {'U(0)':>14} {'m_inf':>14} {'decay/sqrt(c0)':>15} {'nehari':>10} {'R95':>8}")
    for c0 in args.c0:
        for p in args.p:
            pr = shoot_ground_state(c0, p)
            print(f"{c0:6.3g} {p:4.3g} {pr.u0:14.10f} {pr.m_inf:14.10f} "
                  f"{pr.decay_rate / math.sqrt(c0):15.6f} {pr.nehari_defect:10.2e} {pr.mass_radius():8.4f}")


if __name__ == "__main__":
    main()
