"""Experiment driver: config parsing, eps sweeps, report.csv / summary.json, snapshots.

Config files are flat ``key = value`` text; ``#`` starts a comment.  Example::

    system = KGM
    a = 2
    q = 1
    omega = 0.5
    p = 4
    eps_list = 0.3927, 0.19635
    grid_n = 48
    length = 6.283185307179586
    seed_lattice = 2
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import analyze, cluster_solutions
from .grid import SystemParams, TorusGrid, save_field
from .ground_state import RadialProfile, load_profile, shoot_ground_state
from .minimizer import SolveOptions, Status, lattice_points, multi_start

log = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "seed_id", "eps", "status", "iterations", "energy", "t_projection", "grad_norm",
    "nehari_residual", "bary_x", "bary_y", "bary_z", "peak_x", "peak_y", "peak_z",
    "peak_value", "num_peaks", "maxval_margin", "profile_sup_error", "cluster_id",
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    system: str = "KGM"
    a: float = 2.0
    q: float = 1.0
    omega: float = 0.5
    p: float = 4.0
    eps_list: list = field(default_factory=lambda: [2 * math.pi / 16])
    grid_n: int = 48
    length: float = 2 * math.pi
    seeds: list | None = None
    seed_lattice: int = 1
    solver: SolveOptions = field(default_factory=SolveOptions)
    output_dir: Path = Path("out")
    emit_fields: bool = False
    profile_tol: float = 1e-10
    peak_threshold: float = 0.5
    cluster_dist: float | None = None
    cluster_energy_tol: float = 1e-6
    workers: int = 1

    def validate(self) -> None:
        eps = list(self.eps_list)
        if not eps:
            raise ConfigError("eps_list is empty")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps_list must be strictly decreasing")
        if any(e >= self.length / 8 for e in eps):
            raise ConfigError(f"every eps must be < L/8 = {self.length / 8:.6g}")
        if self.seeds is None and self.seed_lattice < 1:
            raise ConfigError("seed_lattice must be >= 1")
        self.params(eps[0])
        self.grid()

    def params(self, eps: float) -> SystemParams:
        return SystemParams(self.system, eps, self.q, self.omega, self.p, self.a)

    def grid(self) -> TorusGrid:
        return TorusGrid(self.grid_n, self.length)

    def seed_points(self) -> list:
        if self.seeds is not None:
            return [tuple(s) for s in self.seeds]
        return lattice_points(self.seed_lattice, self.length)


_SOLVER_KEYS = {"max_iters": int, "grad_tol": float, "step0": float, "backtrack": float, "psi_tol": float}
_FLOAT_KEYS = {"a", "q", "omega", "p", "length", "profile_tol", "peak_threshold", "cluster_dist",
               "cluster_energy_tol"}
_INT_KEYS = {"grid_n", "seed_lattice", "workers"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_seeds(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    seeds = []
    for chunk in text.split(";"):
        vals = [float(v) for v in chunk.replace(",", " ").split()]
        if len(vals) != 3:
            raise ConfigError(f"seed point needs 3 coordinates: {chunk!r}")
        seeds.append(tuple(vals))
    return seeds


def apply_setting(cfg: ExperimentConfig, key: str, value: str) -> ExperimentConfig:
    key = key.strip().replace("-", "_")
    value = value.strip()
    try:
        if key == "system":
            cfg.system = value.upper()
        elif key == "eps_list":
            cfg.eps_list = [float(v) for v in value.replace(",", " ").split()]
        elif key == "seeds":
            cfg.seeds = _parse_seeds(value)
        elif key == "output_dir" or key == "out":
            cfg.output_dir = Path(value)
        elif key == "emit_fields":
            cfg.emit_fields = _parse_bool(value)
        elif key in _FLOAT_KEYS:
            setattr(cfg, key, float(value))
        elif key in _INT_KEYS:
            setattr(cfg, key, int(value))
            if key == "seed_lattice":
                cfg.seeds = None
        elif key in _SOLVER_KEYS:
            cfg.solver = replace(cfg.solver, **{key: _SOLVER_KEYS[key](value)})
        else:
            raise ConfigError(f"unknown config key {key!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return cfg


def read_config(path, cfg: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = cfg or ExperimentConfig()
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        apply_setting(cfg, key, value)
    return cfg


def cached_profile(cfg: ExperimentConfig, params: SystemParams) -> RadialProfile:
    """Ground state for (c0, p, tol), shot once and then always read back from the cache."""
    cache = cfg.output_dir / f"profile_c0={params.c0!r}_p={params.p!r}_tol={cfg.profile_tol!r}.txt"
    if not cache.exists():
        shoot_ground_state(params.c0, params.p, cfg.profile_tol).dump(cache)
    return load_profile(cache)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _row(seed_id, eps, result, rec) -> dict:
    nan = float("nan")
    row = dict.fromkeys(REPORT_COLUMNS, nan)
    row.update(seed_id=seed_id, eps=eps, status=result.status.value, iterations=result.iterations,
               grad_norm=result.grad_norm)
    if rec is not None:
        row.update(
            energy=rec.energy, t_projection=rec.t_at_projection, nehari_residual=rec.nehari_residual,
            bary_x=rec.barycenter[0], bary_y=rec.barycenter[1], bary_z=rec.barycenter[2],
            peak_x=rec.peak_point[0], peak_y=rec.peak_point[1], peak_z=rec.peak_point[2],
            peak_value=rec.peak_value, num_peaks=rec.num_peaks, maxval_margin=rec.maxval_margin,
            profile_sup_error=rec.profile_sup_error, cluster_id=rec.cluster_id,
        )
    else:
        row.update(num_peaks=0, cluster_id=-1)
    return {k: _fmt(v) for k, v in row.items()}


def _json_float(x):
    return None if x is None or not np.isfinite(x) else float(x)


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run the sweep; returns a process exit status (0 on success)."""
    try:
        cfg.validate()
    except (ConfigError, ValueError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid()
    seeds = cfg.seed_points()
    failures = 0
    summary = {
        "system": cfg.system, "a": cfg.a, "q": cfg.q, "omega": cfg.omega, "p": cfg.p,
        "grid_n": cfg.grid_n, "length": cfg.length, "num_seeds": len(seeds),
        "m_inf": None, "eps": [], "best_energy": [], "cluster_count": [],
        "converged_fraction": [], "certified_fraction": [],
    }
    report = out / "report.csv"
    with report.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for ie, eps in enumerate(cfg.eps_list):
            params = cfg.params(eps)
            try:
                profile = cached_profile(cfg, params)
            except Exception as exc:
                print(f"profile eps={eps!r}: {type(exc).__name__}: {exc}", file=sys.stderr)
                failures += 1
                continue
            summary["m_inf"] = profile.m_inf
            results = multi_start(seeds, params, cfg.solver, grid, profile, workers=cfg.workers)
            records = []
            for res in results:
                if res.point is None:
                    print(f"solve eps={eps!r} seed={res.seed_id}: {res.error}", file=sys.stderr)
                    failures += 1
                    records.append(None)
                    continue
                try:
                    records.append(analyze(grid, res.point, params, profile, res.grad_norm, cfg.peak_threshold))
                except Exception as exc:
                    print(f"analysis eps={eps!r} seed={res.seed_id}: {type(exc).__name__}: {exc}",
                          file=sys.stderr)
                    failures += 1
                    records.append(None)
            done = [r for r in records if r is not None]
            dist = cfg.cluster_dist if cfg.cluster_dist is not None else 2 * eps
            cluster_solutions(done, dist, cfg.cluster_energy_tol * max(1.0, profile.m_inf), grid.length)
            for res, rec in zip(results, records):
                writer.writerow(_row(res.seed_id, eps, res, rec))
                if cfg.emit_fields and res.point is not None:
                    save_field(out / f"field_eps{ie}_seed{res.seed_id}.kgmf", res.point.u, grid, eps)
            fh.flush()
            conv = [rec for res, rec in zip(results, records) if res.status is Status.CONVERGED and rec]
            energies = [r.energy for r in done]
            summary["eps"].append(eps)
            summary["best_energy"].append(min(energies) if energies else None)
            summary["cluster_count"].append(len({r.cluster_id for r in done}))
            summary["converged_fraction"].append(len(conv) / len(results) if results else None)
            summary["certified_fraction"].append(
                sum(r.certified for r in conv) / len(results) if results else None)
    if summary["m_inf"] is None and cfg.eps_list:
        try:
            summary["m_inf"] = cached_profile(cfg, cfg.params(cfg.eps_list[0])).m_inf
        except Exception:
            pass
    summary = {k: ([_json_float(v) if isinstance(v, float) else v for v in val]
                   if isinstance(val, list) else val) for k, val in summary.items()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kgmtorus", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an eps sweep and write report.csv / summary.json")
    run.add_argument("--config", type=Path)
    run.add_argument("--system", choices=["KGM", "SM", "kgm", "sm"])
    for name in ("p", "a", "q", "omega", "length"):
        run.add_argument(f"--{name}", type=str)
    run.add_argument("--eps-list", type=str, help="comma separated, strictly decreasing")
    run.add_argument("--grid-n", type=str)
    run.add_argument("--seed-lattice", type=str)
    run.add_argument("--seeds", type=str, help="'x,y,z; x,y,z; ...'")
    run.add_argument("--max-iters", type=str)
    run.add_argument("--grad-tol", type=str)
    run.add_argument("--workers", type=str)
    run.add_argument("--out", type=str)
    run.add_argument("--emit-fields", action="store_true")
    run.add_argument("--verbose", action="store_true")

    prof = sub.add_parser("profile", help="shoot the radial ground state and dump it")
    prof.add_argument("--c0", type=float, required=True)
    prof.add_argument("--p", type=float, required=True)
    prof.add_argument("--tol", type=float, default=1e-10)
    prof.add_argument("--out", type=Path, required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "profile":
        profile = shoot_ground_state(args.c0, args.p, args.tol)
        profile.dump(args.out)
        print(f"U(0) = {profile.u0!r}  m_inf = {profile.m_inf!r}")
        return 0

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        cfg = read_config(args.config) if args.config else ExperimentConfig()
        overrides = {
            "system": args.system, "p": args.p, "a": args.a, "q": args.q, "omega": args.omega,
            "length": args.length, "eps_list": args.eps_list, "grid_n": args.grid_n,
            "seed_lattice": args.seed_lattice, "seeds": args.seeds, "max_iters": args.max_iters,
            "grad_tol": args.grad_tol, "workers": args.workers, "out": args.out,
        }
        for key, val in overrides.items():
            if val is not None:
                apply_setting(cfg, key, val)
        if args.emit_fields:
            cfg.emit_fields = True
    except (ConfigError, OSError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
