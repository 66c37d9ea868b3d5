"""Command-line front end: ``uabs-hetnet {run,validate,plotdata}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

from .campaign import (SUMMARY_COLUMNS, aggregate, read_results, run_campaign, write_results,
                       write_table)
from .config import ENV_PREFIX, PRESETS, ConfigError, RunConfig, parse_config

log = logging.getLogger("uabs_hetnet")

SERIES = ("5pse_vs_cre", "peak_vs_nuabs")


def _overrides(args) -> dict:
    out = {}
    for flag, key in (("seed", "run.seed"), ("drops", "run.drops"), ("out", "run.out_dir"),
                      ("threads", "run.threads"), ("format", "run.format")):
        v = getattr(args, flag, None)
        if v is not None:
            out[key] = v
    return out


def load_config(args) -> RunConfig:
    preset = args.preset or os.environ.get(ENV_PREFIX + "PRESET")
    path = args.config or os.environ.get(ENV_PREFIX + "CONFIG")
    return parse_config(path, overrides=_overrides(args), preset=preset)


def _ext(fmt: str) -> str:
    return "json" if fmt == "json-text" else "csv"


def cmd_validate(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    out.write(cfg.to_text())
    return 0


def cmd_run(cfg: RunConfig, dry_run: bool = False, out=None) -> int:
    out = out or sys.stdout
    scenarios = cfg.scenario_list()
    if not scenarios:
        raise ConfigError("scenario", "no scenarios configured (use --preset or scenario.<id>.* keys)")
    settings = cfg.settings()
    if dry_run:
        out.write(f"region {settings.region.width:g} x {settings.region.height:g} m, "
                  f"seed {cfg['run.seed']}, {cfg['run.drops']} drops, {cfg['run.threads']} worker(s)\n")
        for sc in scenarios:
            work = (f"{len(sc.grid)} grid points" if sc.deployment == "hex"
                    else f"GA {sc.ga.population_size}x{sc.ga.generations}")
            out.write(f"  {sc.scenario_id}: mode={sc.mode.value} deployment={sc.deployment} "
                      f"n_uabs={sc.n_uabs} destroyed={sc.destroyed_fraction} ({work})\n")
        out.write(f"would write to {cfg['run.out_dir']}\n")
        return 0

    res = run_campaign(scenarios, settings, workers=cfg["run.threads"])
    fmt = cfg["run.format"]
    out_dir = Path(cfg["run.out_dir"])
    ext = _ext(fmt)
    write_results(res.records, out_dir / f"results.{ext}", fmt)
    summary = aggregate(res.records)
    write_table(summary, out_dir / f"summary.{ext}", SUMMARY_COLUMNS, fmt)
    if res.traces:
        write_results(res.traces, out_dir / f"traces.{ext}", fmt)
    (out_dir / "run_config.txt").write_text(cfg.to_text())

    for sc in scenarios:
        rows = [r for r in summary if r["scenario_id"] == sc.scenario_id]
        peak = max(rows, key=lambda r: r["median"])
        recs = [r for r in res.records if r.scenario_id == sc.scenario_id]
        best = max(recs, key=lambda r: r.se_5pct_bps_hz)
        where = f" at tau={peak['tau_db']:g} dB" if peak["tau_db"] is not None else ""
        out.write(f"{sc.scenario_id}: median 5pSE {peak['median']:.6g} bps/Hz{where}; best drop "
                  f"{best.se_5pct_bps_hz:.6g} (tau={best.tau_db:.3g} dB alpha={best.alpha:.3g} "
                  f"rho={best.rho_db:.3g} dB rho'={best.rho_prime_db:.3g} dB)\n")
    return 0


def _frac_tag(f: float) -> str:
    return f"d{round(f * 1000):d}"


def cmd_plotdata(results_path, series: str, out_dir, out=None) -> list[Path]:
    """Two-column CSV series extracted from a results file.

    ``5pse_vs_cre``: x = CRE (dB), y = median 5pSE, one file per hex
    (mode, destruction, n_uabs). ``peak_vs_nuabs``: x = n_uabs, y = peak
    median 5pSE, one file per (deployment, mode, destruction).
    """
    out = out or sys.stdout
    if series not in SERIES:
        raise ConfigError("series", f"unknown series {series!r}; valid: {', '.join(SERIES)}")
    records = read_results(results_path)
    if not records:
        raise ConfigError("results", f"{results_path} holds no records")
    summary = aggregate(records)
    out_dir = Path(out_dir)
    written = []
    if series == "5pse_vs_cre":
        groups = defaultdict(list)
        for r in summary:
            if r["deployment"] == "hex":
                groups[(r["mode"], r["destroyed_fraction"], r["n_uabs"])].append((r["tau_db"], r["median"]))
        if not groups:
            raise ConfigError("series", "5pse_vs_cre needs hex sweep records")
        for (mode, frac, n), pts in sorted(groups.items()):
            path = out_dir / f"5pse_vs_cre_{mode}_{_frac_tag(frac)}_n{n}.csv"
            write_table([{"cre_db": x, "median_5pse": y} for x, y in sorted(pts)], path,
                        ("cre_db", "median_5pse"))
            written.append(path)
    else:
        peaks: dict = defaultdict(dict)
        for r in summary:
            key = (r["deployment"], r["mode"], r["destroyed_fraction"])
            peaks[key][r["n_uabs"]] = max(peaks[key].get(r["n_uabs"], float("-inf")), r["median"])
        for (dep, mode, frac), by_n in sorted(peaks.items()):
            path = out_dir / f"peak_vs_nuabs_{dep}_{mode}_{_frac_tag(frac)}.csv"
            write_table([{"n_uabs": n, "peak_median_5pse": y} for n, y in sorted(by_n.items())], path,
                        ("n_uabs", "peak_median_5pse"))
            written.append(path)
    for p in written:
        out.write(f"{p}\n")
    return written


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario set")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--drops", type=int, metavar="N")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--threads", type=int, metavar="N", help="worker processes (results do not depend on it)")
    p.add_argument("--format", choices=("csv", "json-text"))
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uabs-hetnet",
        description="5th-percentile SE of air/ground LTE-A HetNets with eICIC/FeICIC and CRE.",
        epilog=f"Environment: {ENV_PREFIX}{{CONFIG,PRESET,SEED,DROPS,OUT,THREADS,FORMAT}} "
               "override the config file; flags override the environment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute the configured scenarios")
    _common(run)
    run.add_argument("--dry-run", action="store_true", help="print the plan, write nothing")
    val = sub.add_parser("validate", help="check a config and print it fully resolved")
    _common(val)
    pd = sub.add_parser("plotdata", help="extract plot-ready series from a results file")
    pd.add_argument("results", help="results.csv or results.json from 'run'")
    pd.add_argument("--series", required=True, help=f"one of: {', '.join(SERIES)}")
    pd.add_argument("--out", default="plotdata", metavar="DIR")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * getattr(args, "verbose", 0)
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plotdata":
            cmd_plotdata(args.results, args.series, args.out)
            return 0
        cfg = load_config(args)
        if not args.verbose:
            logging.getLogger().setLevel(cfg["run.verbosity"].upper())
        if args.command == "validate":
            return cmd_validate(cfg)
        return cmd_run(cfg, dry_run=args.dry_run)
    except (ConfigError, OSError, ValueError, RuntimeError) as e:
        print(f"uabs-hetnet: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
