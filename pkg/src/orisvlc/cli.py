"""Command line front end: ``simulate``, ``coverage`` and ``oracle-validate``.

Exit codes: 0 success, 2 configuration error, 3 lighting constraints
infeasible, 4 internal failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .channel import build_channel, ray_traced_coverage
from .config import ConfigError, ScenarioConfig, load_config, parse_range
from .geometry import coverage_limit
from .illumination import illumination_summary
from .metrics import db_to_linear, linear_to_db
from .montecarlo import APPROACHES, MODES, Aggregator, run_trials, sample_user, trial_rng
from .optimizer import (AoConfig, EnumerationBudgetExceeded, InfeasibleIllumination,
                        PoseSolver, SolverContext, oracle_solve)
from .scene import tiny_scene

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4
OUT_ENV = "ORISVLC_OUT"


def fmt(x: float) -> str:
    """Floats with 12 significant digits for stable diffs."""
    return f"{x:.12g}"


@contextmanager
def atomic_dir(target: Path):
    """Yield a scratch directory that replaces ``target`` only on success."""
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    old = None
    if target.exists():
        old = target.with_name(f".{target.name}.old")
        shutil.rmtree(old, ignore_errors=True)
        os.replace(target, old)
    os.replace(tmp, target)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)


def default_out(name: str) -> Path:
    return Path(os.environ.get(OUT_ENV, "orisvlc_out")) / name


def _csv_list(text: str, allowed: Sequence[str], what: str) -> tuple:
    items = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in items if t not in allowed]
    if bad or not items:
        raise ConfigError(f"unknown {what} {bad or text!r}; choose from {', '.join(allowed)}")
    return items


# ---------------------------------------------------------------- simulate


def _manifest(cfg: ScenarioConfig) -> dict:
    echo = cfg.to_dict()
    # execution knobs do not change results
    echo.pop("workers", None)
    echo.pop("output_dir", None)
    return {"package": "orisvlc", "version": __version__, "numpy": np.__version__,
            "config": echo, "seed": cfg.seed}


def _heatmap_grids(cfg: ScenarioConfig, report) -> dict:
    n_h, n_z = cfg.wall_grid
    grids = {}
    for (mode, approach, psi), counts in report.heatmaps.items():
        label = approach if len(cfg.modes) <= 1 else f"{approach}-{mode}"
        grids[f"heatmap_{label}_{psi:g}"] = counts.reshape(n_z, n_h)[::-1]
    return grids


def simulate(cfg: ScenarioConfig, out: Path, figures: bool = False) -> dict:
    scene = cfg.scene()
    plan = cfg.plan()
    ctx = SolverContext(scene)          # fails fast on infeasible lighting
    agg = Aggregator(plan, scene.n_capable)
    cases = plan.cases()
    with atomic_dir(out) as tmp:
        with open(tmp / "trials.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "x", "y", "heading", "mode", "psi_deg", "gamma_th_db",
                        "approach", "b", "gamma_db", "total_power_w", "mirrors_used",
                        "iterations", "converged", "eta_bit_per_j"])
            for rec in run_trials(scene, plan, cfg.workers):
                agg.add(rec)
                x, y = rec.pose.body.axis_base[:2]
                head = [rec.trial, fmt(x), fmt(y), fmt(rec.pose.heading)]
                r = rec.results
                for ip, psi in enumerate(plan.psi_deg):
                    for ig, g in enumerate(plan.gamma_db):
                        for ic, (mode, approach) in enumerate(cases):
                            v = r[ip, ig, ic]
                            gdb = fmt(linear_to_db(v["gamma"])) if v["gamma"] > 0 else "-inf"
                            w.writerow(head + [mode, fmt(psi), fmt(g), approach, int(v["b"]),
                                               gdb, fmt(v["power"]), int(v["mirrors"]),
                                               int(v["iterations"]), int(v["converged"]),
                                               fmt(v["eta"])])
        report = agg.report()
        grids = _heatmap_grids(cfg, report)
        for name, grid in grids.items():
            np.savetxt(tmp / f"{name}.csv", grid, fmt="%d", delimiter=",")
        bench = ctx.benchmark
        ill = illumination_summary(bench.P, ctx.grid)
        summary = {
            "manifest": _manifest(cfg),
            "trials": report.trials,
            "heatmap_gamma_th_db": plan.gamma_db[plan.heatmap_index],
            "benchmark": {"power_w": [float(p) for p in bench.P],
                          "total_power_w": bench.total,
                          "e_avg_lux": ill.e_avg, "e_min_lux": ill.e_min,
                          "e_max_lux": ill.e_max, "uniformity": ill.uniformity},
            "points": [{
                "mode": s.mode, "approach": s.approach, "psi_deg": s.psi_deg,
                "gamma_th_db": s.gamma_db, "trials": s.trials, "p_out": s.p_out,
                "std_err": s.std_err, "mean_power_w": s.mean_power,
                "mean_eta_bit_per_j": s.mean_eta, "mean_mirrors": s.mean_mirrors,
                "iterations": s.iterations, "non_converged": s.non_converged,
            } for s in report.stats],
        }
        (tmp / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
        if figures:
            from .plots import render_report
            render_report(report, grids, tmp / "figures")
    return summary


# ---------------------------------------------------------------- coverage


def coverage_rows(psis: Sequence[float], xs: Sequence[float], z_led: float = 3.0,
                  z_user: float = 1.0, step: float = 0.02) -> List[dict]:
    rows = []
    for mode in ("mirror", "oris"):
        for psi in psis:
            for x in xs:
                led = np.array([x, 0.0, z_led])
                th = coverage_limit(mode, led, z_user, np.deg2rad(psi))
                rt = ray_traced_coverage(mode, x, np.deg2rad(psi), z_led=z_led,
                                         z_user=z_user, step=step)
                rows.append({"mode": mode, "psi_deg": psi, "x_led": x,
                             "theory_m": th, "raytrace_m": rt})
    return rows


# ---------------------------------------------------------------- oracle


def oracle_validate(scene, instances: int, seed: int, psi_deg: float, n_max: int,
                    spread_db=(-3.0, 8.0)) -> dict:
    """Heuristics against exhaustive search on random poses of a tiny room.

    Thresholds are drawn around each pose's no-reflector SNR so that both
    served and outage cases occur.
    """
    scene = scene.with_fov(np.deg2rad(psi_deg))
    ctx = SolverContext(scene)
    rows = []
    for i in range(instances):
        rng = trial_rng(seed, i)
        pose = sample_user(rng, scene.room, scene.body)
        cm = build_channel(scene, pose)
        ps = PoseSolver(ctx, cm)
        g0 = ps.no_mirror(1.0).gamma
        base_db = float(linear_to_db(g0)) if g0 > 0 else 20.0
        g_db = base_db + rng.uniform(*spread_db)
        gth = float(db_to_linear(g_db))
        row = {"instance": i, "gamma_th_db": g_db}
        for approach in ("mm", "mp"):
            h = ps.ao(AoConfig(approach=approach, n_max=n_max, gamma_th=gth))
            o = oracle_solve(ctx, cm, gth, objective=approach, n_max=n_max)
            row.update({
                f"{approach}_b": h.b, f"{approach}_mirrors": h.mirrors_used,
                f"{approach}_power_w": h.total_power,
                f"oracle_{approach}_b": o.result.b, f"oracle_{approach}_mirrors": o.result.mirrors_used,
                f"oracle_{approach}_power_w": o.result.total_power,
            })
            row["enumerated"] = o.enumerated
        rows.append(row)
    n = max(len(rows), 1)
    summary = {
        "instances": len(rows),
        "b_agreement_mm": sum(r["mm_b"] == r["oracle_mm_b"] for r in rows) / n,
        "b_agreement_mp": sum(r["mp_b"] == r["oracle_mp_b"] for r in rows) / n,
        "mm_mirrors_below_oracle": sum(r["mm_mirrors"] < r["oracle_mm_mirrors"]
                                       and r["mm_b"] == 1 for r in rows),
        "enumerated_per_instance": rows[0]["enumerated"] if rows else 0,
    }
    return {"summary": summary, "rows": rows}


# ---------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orisvlc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Monte Carlo outage/power sweep")
    s.add_argument("--config", type=Path)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--psi-deg", help="comma list or start:step:stop")
    s.add_argument("--gamma-th-db", help="start:step:stop (inclusive) or comma list")
    s.add_argument("--approach", help=f"comma list of {', '.join(APPROACHES)}")
    s.add_argument("--mode", help="comma list of mirror, oris")
    s.add_argument("--workers", type=int)
    s.add_argument("--out", type=Path)
    s.add_argument("--figures", action="store_true", help="also render PNG figures")

    c = sub.add_parser("coverage", help="mirror/ORIS coverage limit, theory vs ray trace")
    c.add_argument("--psi-deg", default="20:10:70")
    c.add_argument("--led-x", default="0:0.25:4")
    c.add_argument("--z-led", type=float, default=3.0)
    c.add_argument("--z-user", type=float, default=1.0)
    c.add_argument("--step", type=float, default=0.02)
    c.add_argument("--out", type=Path)
    c.add_argument("--figures", action="store_true")

    o = sub.add_parser("oracle-validate", help="heuristics vs exhaustive search, tiny room")
    o.add_argument("--config", type=Path, help="scene for the tiny room (default: built-in)")
    o.add_argument("--instances", type=int, default=200)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--psi-deg", type=float, default=50.0)
    o.add_argument("--n-max", type=int, default=128)
    o.add_argument("--out", type=Path)
    return p


def _run(args) -> int:
    if args.command == "simulate":
        cfg = load_config(args.config) if args.config else ScenarioConfig()
        cfg = cfg.with_overrides(
            trials=args.trials, seed=args.seed, workers=args.workers,
            psi_deg=parse_range(args.psi_deg) if args.psi_deg else None,
            gamma_th_db=parse_range(args.gamma_th_db) if args.gamma_th_db else None,
            approaches=_csv_list(args.approach, APPROACHES, "approach") if args.approach else None,
            modes=_csv_list(args.mode, MODES, "mode") if args.mode else None,
        )
        out = args.out or (Path(cfg.output_dir) if cfg.output_dir else default_out("simulate"))
        summary = simulate(cfg, out, args.figures)
        print("mode\tapproach\tpsi_deg\tgamma_th_db\tp_out\tmean_power_w\tmean_mirrors")
        for pt in summary["points"]:
            print(f"{pt['mode']}\t{pt['approach']}\t{pt['psi_deg']:g}\t{pt['gamma_th_db']:g}\t"
                  f"{pt['p_out']:.4f}\t{pt['mean_power_w']:.3f}\t{pt['mean_mirrors']:.2f}")
        print(f"wrote {out}", file=sys.stderr)
        return EXIT_OK

    if args.command == "coverage":
        psis = parse_range(args.psi_deg)
        xs = parse_range(args.led_x)
        if any(not 0 < p < 90 for p in psis):
            raise ConfigError("FoV semi-angles must lie in (0, 90) degrees")
        if any(x < 0 for x in xs) or args.z_user >= args.z_led or args.step <= 0:
            raise ConfigError("need led x >= 0, z_user < z_led and step > 0")
        rows = coverage_rows(psis, xs, args.z_led, args.z_user, args.step)
        out = args.out or default_out("coverage")
        with atomic_dir(out) as tmp:
            with open(tmp / "coverage.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["mode", "psi_deg", "x_led", "theory_m", "raytrace_m"])
                for r in rows:
                    w.writerow([r["mode"], fmt(r["psi_deg"]), fmt(r["x_led"]),
                                fmt(r["theory_m"]), fmt(r["raytrace_m"])])
            if args.figures:
                from .plots import coverage_figure
                coverage_figure(rows, tmp / "coverage.png")
        sys.stdout.write((out / "coverage.csv").read_text())
        return EXIT_OK

    if args.command == "oracle-validate":
        scene = load_config(args.config).scene() if args.config else tiny_scene()
        if args.instances < 0 or args.n_max < 0:
            raise ConfigError("instances and n-max must be >= 0")
        result = oracle_validate(scene, args.instances, args.seed, args.psi_deg, args.n_max)
        out = args.out or default_out("oracle")
        with atomic_dir(out) as tmp:
            rows = result["rows"]
            if rows:
                with open(tmp / "oracle_report.csv", "w", newline="") as fh:
                    w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                    w.writeheader()
                    for r in rows:
                        w.writerow({k: fmt(v) if isinstance(v, float) else v for k, v in r.items()})
            (tmp / "oracle_summary.json").write_text(
                json.dumps(result["summary"], indent=1, sort_keys=True) + "\n")
        for k, v in result["summary"].items():
            print(f"{k}\t{v}")
        return EXIT_OK
    raise AssertionError(args.command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, EnumerationBudgetExceeded) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleIllumination as exc:
        print(f"infeasible lighting: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
