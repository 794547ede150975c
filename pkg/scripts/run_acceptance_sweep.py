"""Run the n=48 seed-asymptotics experiment and print a per-eps digest.

    python3 scripts/run_acceptance_sweep.py --out runs/acceptance

Equivalent to ``kgmtorus run --config scripts/configs/acceptance.cfg --emit-fields``
followed by a summary of report.csv.
"""
import argparse
import csv
import json
from pathlib import Path

from kgmtorus.cli import read_config, run_experiment

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=HERE / "configs" / "acceptance.cfg")
    ap.add_argument("--out", type=Path, default=Path("runs/acceptance"))
    ap.add_argument("--no-fields", action="store_true")
    args = ap.parse_args()

    cfg = read_config(args.config)
    cfg.output_dir = args.out
    cfg.emit_fields = not args.no_fields
    code = run_experiment(cfg)

    summary = json.loads((args.out / "summary.json").read_text())
    m_inf = summary["m_inf"]
    with open(args.out / "report.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"m_inf = {m_inf:.10g}   exit status {code}")
    for eps in cfg.eps_list:
        sel = [r for r in rows if float(r["eps"]) == eps]
        energies = [float(r["energy"]) for r in sel]
        status = {r["status"] for r in sel}
        sup = max(float(r["profile_sup_error"]) for r in sel)
        peak = max(float(r["peak_value"]) for r in sel)
        print(f"eps={eps:.6f}  status={sorted(status)}  energy/m_inf={min(energies) / m_inf:.4f}"
              f"..{max(energies) / m_inf:.4f}  peak={peak:.4f}  profile_sup={sup:.4f}")


if __name__ == "__main__":
    main()
