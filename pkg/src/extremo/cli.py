"""Command-line entry point: ``extremo <verb> --config run.yaml``.

Exit codes: 0 success, 1 runtime or data error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .extremogram import ExtremogramError, make_indicator
from .market import (
    EventAnalysis,
    MarketError,
    cap_settlement,
    descriptive_stats,
    event_window_compare,
    format_stats_table,
    load_events,
)
from .permutation import PermutationConfig, bands_from_samples, permutation_samples, significance_report
from .plotting import extremogram_svg, paired_svg
from .series import CsvSchema, SeriesError, align_panel, export_csv, ingest_csv, parse_timestamp
from .synthetic import ProcessSpec, SpecError, generate

VERBS = ("extremogram", "cross", "simulate", "event-study", "stats", "settle-cap")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _stamp(cfg: RunConfig, **extra) -> dict:
    return {"config": cfg.echo(), "version": __version__, **extra}


def _comment(cfg: RunConfig, **extra) -> str:
    return json.dumps(_stamp(cfg, **extra), sort_keys=True)


def _load_inputs(cfg: RunConfig, names=None) -> dict:
    names = list(cfg.inputs) if names is None else names
    out = {}
    for name in names:
        if name not in cfg.inputs:
            raise ConfigError(f"inputs.{name}: not defined")
        spec = cfg.inputs[name]
        out[name] = ingest_csv(
            cfg.resolve_path(spec.path),
            CsvSchema(spec.timestamp, spec.value),
            spec.step,
            series_id=name,
            delimiter=spec.delimiter,
            timestamp_format=spec.timestamp_format,
            label=spec.label,
            offset=spec.offset,
        )
    return out


def _perm_config(cfg: RunConfig, default_mode: str) -> PermutationConfig:
    p = cfg.permutation
    mode = p.mode or default_mode
    if default_mode == "univariate" and mode != "univariate":
        raise ConfigError(f"permutation.mode: {mode!r} is only valid for cross runs")
    if default_mode != "univariate" and mode == "univariate":
        raise ConfigError("permutation.mode: cross runs need cross_joint or cross_independent")
    return PermutationConfig(p.replicates, p.alpha, cfg.seed, mode, p.band_convention, p.two_sided)


def _write_curve_outputs(outdir: Path, cfg, curve, bands, report, title: str) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    thresholds = {k: curve.meta[k]["threshold"] for k in ("x", "y") if k in curve.meta}
    comment = _comment(cfg, thresholds=thresholds)
    paths = [
        curve.to_csv(outdir / "curve.csv", comment),
        bands.to_csv(outdir / "bands.csv", comment),
    ]
    doc = _stamp(cfg, thresholds=thresholds)
    doc.update(curve=curve.to_dict(), bands=bands.to_dict(), significance=report.to_dict())
    (outdir / "report.json").write_text(_dumps(doc), encoding="utf-8")
    (outdir / "plot.svg").write_text(extremogram_svg(curve, bands, title, comment), encoding="utf-8")
    return paths + [outdir / "report.json", outdir / "plot.svg"]


def cmd_extremogram(cfg: RunConfig) -> list[Path]:
    names = cfg.analysis.series or list(cfg.inputs)
    if not names:
        raise ConfigError("analysis.series: no series to analyse")
    series = _load_inputs(cfg, names)
    pconf = _perm_config(cfg, "univariate")
    min_lag = 1 if cfg.lags.min is None else cfg.lags.min
    written = []
    for name in names:
        ind = make_indicator(series[name], cfg.tailset_for(name))
        curve, samples = permutation_samples(ind, cfg.lags.max, pconf, min_lag=min_lag, n_jobs=cfg.threads)
        bands = bands_from_samples(curve.lags, samples, pconf)
        report = significance_report(curve, bands)
        written += _write_curve_outputs(Path(cfg.out) / name, cfg, curve, bands, report, name)
    return written


def cmd_cross(cfg: RunConfig) -> list[Path]:
    pairs = [tuple(p) for p in cfg.analysis.pairs]
    if not pairs:
        raise ConfigError("analysis.pairs: no pairs to analyse")
    if cfg.analysis.directions == "both":
        pairs = pairs + [(b, a) for a, b in pairs if (b, a) not in pairs]
    names = sorted({n for p in pairs for n in p})
    series = _load_inputs(cfg, names)
    pconf = _perm_config(cfg, "cross_independent")
    min_lag = 0 if cfg.lags.min is None else cfg.lags.min
    written = []
    for a, b in pairs:
        panel = align_panel([series[a], series[b]])
        ind_x = make_indicator(panel[a], cfg.tailset_for(a))
        ind_y = make_indicator(panel[b], cfg.tailset_for(b))
        curve, samples = permutation_samples(
            ind_x, cfg.lags.max, pconf, y=ind_y, min_lag=min_lag, n_jobs=cfg.threads
        )
        bands = bands_from_samples(curve.lags, samples, pconf)
        report = significance_report(curve, bands)
        written += _write_curve_outputs(Path(cfg.out) / f"{a}_to_{b}", cfg, curve, bands, report, f"{a} -> {b}")
    return written


def cmd_simulate(cfg: RunConfig) -> list[Path]:
    if cfg.simulate is None:
        raise ConfigError("simulate: section missing")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, entry in enumerate(cfg.simulate.processes):
        try:
            spec = ProcessSpec(
                kind=entry.kind,
                n=entry.n,
                seed=cfg.seed + i if entry.seed is None else entry.seed,
                params=dict(entry.params),
                start=parse_timestamp(entry.start),
                step=entry.step,
                series_id=entry.name,
            )
        except (SpecError, ValueError) as exc:
            raise ConfigError(f"simulate.processes.{i}: {exc}") from None
        series = generate(spec)
        written.append(
            export_csv(series, out / f"{entry.name}.csv", header_comment=_comment(cfg, process=spec.to_dict()))
        )
    return written


def cmd_event_study(cfg: RunConfig) -> list[Path]:
    es = cfg.event_study
    if es is None:
        raise ConfigError("event_study: section missing")
    series = _load_inputs(cfg, [es.series])[es.series]
    pconf = _perm_config(cfg, "univariate")
    analysis = EventAnalysis(
        tailset=cfg.tailset_for(es.series),
        max_lag=cfg.lags.max,
        min_lag=1 if cfg.lags.min is None else cfg.lags.min,
        permutation=pconf,
        agg_step=es.agg_step,
        n_jobs=cfg.threads,
    )
    events = load_events(cfg.resolve_path(es.events_csv)) if es.events_csv else None
    try:
        event_time = parse_timestamp(es.event_time)
    except ValueError as exc:
        raise ConfigError(f"event_study.event_time: {exc}") from None
    cmp = event_window_compare(series, event_time, es.window, analysis, events, es.region)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    comment = _comment(cfg)
    for win in (cmp.pre, cmp.post):
        if win.curve is not None:
            written += _write_curve_outputs(
                out / win.label, cfg, win.curve, win.bands, win.report, f"{es.series} {win.label}"
            )
    doc = _stamp(cfg)
    doc.update(cmp.to_dict())
    (out / "comparison.json").write_text(_dumps(doc), encoding="utf-8")
    panels = [
        (w.curve, w.bands, f"{es.series} {w.label} ({w.start:%Y-%m-%d} to {w.end:%Y-%m-%d})")
        for w in (cmp.pre, cmp.post)
    ]
    (out / "plot.svg").write_text(paired_svg(panels, comment), encoding="utf-8")
    print(f"{es.series}: rho(1) pre={cmp.pre.rho1} post={cmp.post.rho1}; {cmp.verdict}")
    return written + [out / "comparison.json", out / "plot.svg"]


def cmd_stats(cfg: RunConfig) -> list[Path]:
    spec = cfg.stats
    names = (spec.series if spec and spec.series else None) or list(cfg.inputs)
    thresholds = spec.thresholds if spec else [150.0, 300.0, 5000.0]
    series = _load_inputs(cfg, names)
    stats = {n: descriptive_stats(series[n], thresholds) for n in names}
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = _stamp(cfg)
    doc["stats"] = {n: s.to_dict() for n, s in stats.items()}
    (out / "stats.json").write_text(_dumps(doc), encoding="utf-8")
    table = format_stats_table(stats)
    (out / "stats.txt").write_text(f"# {_comment(cfg)}\n{table}\n", encoding="utf-8")
    print(table)
    return [out / "stats.json", out / "stats.txt"]


def cmd_settle_cap(cfg: RunConfig) -> list[Path]:
    spec = cfg.settle_cap
    if spec is None:
        raise ConfigError("settle_cap: section missing")
    names = spec.series or list(cfg.inputs)
    series = _load_inputs(cfg, names)
    results = {}
    for n in names:
        results[n] = {}
        for q in spec.quarters:
            res = cap_settlement(series[n], q, spec.cap_level)
            results[n][q] = res.to_dict()
            print(f"{n} {q}: settlement {res.settlement:.4f} (C={res.C:.2f}, D={res.D}, E={res.E})")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = _stamp(cfg)
    doc["settlements"] = results
    (out / "settlement.json").write_text(_dumps(doc), encoding="utf-8")
    return [out / "settlement.json"]


COMMANDS = {
    "extremogram": cmd_extremogram,
    "cross": cmd_cross,
    "simulate": cmd_simulate,
    "event-study": cmd_event_study,
    "stats": cmd_stats,
    "settle-cap": cmd_settle_cap,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extremo", description="Extremal dependence of price spikes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, type=Path, help="YAML run configuration")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--threads", type=int, help="worker threads for permutation replicates")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads: must be >= 1")
            cfg.threads = args.threads
        written = COMMANDS[args.verb](cfg)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return 2
    except (SeriesError, ExtremogramError, MarketError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
