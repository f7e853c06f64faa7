"""Reproducible experiment driver.

Verbs: spectra (analytic tables, no RNG), run (full synthesize -> detect ->
analyze pipeline), sweep (duan vs one variable), optimize (mode search).
Every CSV carries "# key=value" provenance comments including the config
fingerprint; identical config and seed produce byte-identical outputs.

Exit codes: 0 success, 2 configuration or usage error, 3 numeric failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .analysis import (CalibrationError, EprReport, combo_series,
                       correlation_diagram, epr_report, extract_modes,
                       trace_excerpt, welch_psd)
from .config import ConfigError, RunConfig, config_fingerprint, load_config
from .detection import detect, expected_mode_variance
from .modeopt import ModeFamily, NonUnimodalError, mode_duan, optimize
from .modes import TemporalMode
from .spectra import (QuadratureError, epr_spectra, filtered_variance,
                      opo_spectrum, to_db)
from .synth import epr_record, vacuum_record

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_DEFAULT_BOUNDS = {
    "square": {"duration": (0.02e-6, 2e-6)},
    "one_sided_exp": {"rate": (1e3, 2e8), "support": (0.02e-6, 2e-6)},
    "double_exp": {"rate": (1e3, 2e8), "support": (0.02e-6, 2e-6)},
}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.12g}"


def _write_csv(path: Path, meta: Dict[str, object], header: Sequence[str],
               rows: Iterable[Sequence[object]]) -> None:
    tmp = path.parent / (path.name + ".tmp")
    with tmp.open("w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={_fmt(value)}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    os.replace(tmp, path)


def _worker_count(reps: int) -> int:
    env = os.environ.get("EPR_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ConfigError(f"EPR_THREADS: expected an integer, got {env!r}") from exc
        return max(1, min(cap, reps))
    return max(1, min(os.cpu_count() or 1, reps))


def _meta(cfg: RunConfig, command: str, **extra) -> Dict[str, object]:
    base: Dict[str, object] = {"fingerprint": cfg.fingerprint,
                               "command": command, "seed": cfg.seed}
    base.update(extra)
    return base


# -- run ----------------------------------------------------------------------

def _one_repetition(cfg: RunConfig, i: int):
    base = cfg.seed + 10 * i
    xr = epr_record(cfg.opo1, cfg.opo2, cfg.duration, cfg.fs, "X", base)
    pr = epr_record(cfg.opo1, cfg.opo2, cfg.duration, cfg.fs, "P", base + 1)
    vr = vacuum_record(cfg.duration, cfg.fs, base + 2)
    return (detect(xr, cfg.chain, base + 3),
            detect(pr, cfg.chain, base + 4),
            detect(vr, cfg.chain, base + 5))


def _run_pipeline(cfg: RunConfig):
    epr_spectra(cfg.opo1, cfg.opo2)  # fail fast on bad arrangements
    n_out = int(round(cfg.duration * cfg.fs))
    block = 1 << (n_out - 1).bit_length()
    expected_ref = expected_mode_variance(None, cfg.chain, cfg.fs, cfg.mode,
                                          block=block)
    with ThreadPoolExecutor(max_workers=_worker_count(cfg.repetitions)) as pool:
        futures = [pool.submit(_one_repetition, cfg, i)
                   for i in range(cfg.repetitions)]
        results = [f.result() for f in futures]
    xs = [r[0] for r in results]
    ps = [r[1] for r in results]
    vs = [r[2] for r in results]
    report = epr_report(xs, ps, vs, cfg.mode, expected_ref_variance=expected_ref)
    return replace(report, fingerprint=cfg.fingerprint), xs, ps, vs, expected_ref


def _report_rows(report: EprReport):
    rows: List[Tuple[object, ...]] = []
    for i, (dbx, dbp, duan_i) in enumerate(report.per_rep):
        rows.append((i, dbx, dbp, duan_i, None, None, None))
    rows.append(("summary", report.var_diff_x_db, report.var_sum_p_db,
                 report.duan, report.var_diff_x_db_se, report.var_sum_p_db_se,
                 report.duan_se))
    return rows


def _write_setting_outputs(cfg: RunConfig, out: Path, tag: str, record,
                           vacuum, sign: float) -> float:
    """diagram, trace and vacuum-referenced PSD for one setting; returns r."""
    mode = cfg.mode
    va = extract_modes(record.a, mode)
    vb = extract_modes(record.b, mode)
    diagram = correlation_diagram(va, vb)
    meta = _meta(cfg, "run", setting=tag, pearson_r=diagram.pearson_r)
    _write_csv(out / f"diagram_{tag}.csv", meta, ("a", "b"),
               zip(diagram.a, diagram.b))
    idx, ta, tb = trace_excerpt(va, vb, n=min(50, va.count))
    _write_csv(out / f"trace_{tag}.csv", _meta(cfg, "run", setting=tag),
               ("index", "a", "b"), zip(idx, ta, tb))

    sig = combo_series(record, sign)
    ref = combo_series(vacuum, sign)
    seg = min(4096, sig.n)
    est_sig = welch_psd(sig, segment_len=seg)
    est_ref = welch_psd(ref, segment_len=seg)
    db = est_sig.db - est_ref.db
    _write_csv(out / f"psd_{tag}.csv",
               _meta(cfg, "run", setting=tag, segments=est_sig.n_segments),
               ("freq_hz", "db"), zip(est_sig.freq_hz, db))
    return diagram.pearson_r


def cmd_run(cfg: RunConfig, out: Path) -> int:
    report, xs, ps, vs, expected_ref = _run_pipeline(cfg)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "report.csv",
               _meta(cfg, "run", repetitions=report.repetitions,
                     expected_ref_variance=expected_ref),
               ("rep", "var_diff_x_db", "var_sum_p_db", "duan",
                "var_diff_x_db_se", "var_sum_p_db_se", "duan_se"),
               _report_rows(report))
    r_x = _write_setting_outputs(cfg, out, "x", xs[0], vs[0], -1.0)
    r_p = _write_setting_outputs(cfg, out, "p", ps[0], vs[0], +1.0)
    n_modes = extract_modes(xs[0].a, cfg.mode).count
    print(f"diff-x: {report.var_diff_x_db:+.3f} dB (se {report.var_diff_x_db_se:.3f})")
    print(f"sum-p:  {report.var_sum_p_db:+.3f} dB (se {report.var_sum_p_db_se:.3f})")
    print(f"duan:   {report.duan:.4f} (se {report.duan_se:.4f}, separable bound 1)")
    print(f"repetitions: {report.repetitions}, modes per repetition: {n_modes}")
    print(f"pearson r: x {r_x:+.3f}, p {r_p:+.3f}")
    print(f"outputs in {out}")
    return EXIT_OK


# -- spectra ------------------------------------------------------------------

def cmd_spectra(cfg: RunConfig, out: Path) -> int:
    spectra = epr_spectra(cfg.opo1, cfg.opo2)
    out.mkdir(parents=True, exist_ok=True)
    freq = np.geomspace(1e3, 1e8, 251)
    omega = 2.0 * np.pi * freq
    for tag, psd in (("x", spectra.diff_x), ("p", spectra.sum_p)):
        db = 10.0 * np.log10(psd(omega))
        _write_csv(out / f"psd_{tag}.csv", _meta(cfg, "spectra", setting=tag),
                   ("freq_hz", "db"), zip(freq, db))

    t_grid = np.geomspace(1e-8, 1e-5, 151)  # 50 points per decade
    rows = []
    for t in t_grid:
        mode = TemporalMode.square(float(t))
        vx = filtered_variance(spectra.diff_x, mode)
        vp = filtered_variance(spectra.sum_p, mode)
        rows.append((t, vx, vp, to_db(vx), to_db(vp), 0.5 * (vx + vp)))
    _write_csv(out / "variances.csv", _meta(cfg, "spectra"),
               ("T_s", "var_diff_x", "var_sum_p", "db_diff_x", "db_sum_p", "duan"),
               rows)

    duan_cfg = mode_duan(spectra, cfg.mode)
    print(f"analytic duan at configured mode: {duan_cfg:.6f}")
    print(f"outputs in {out}")
    return EXIT_OK


# -- sweep --------------------------------------------------------------------

def _parse_grid(text: str, log: bool) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--grid expects numbers lo:hi:n, got {text!r}") from exc
    if n < 2 or not (lo < hi):
        raise ConfigError("--grid requires lo < hi and n >= 2")
    if log:
        if lo <= 0:
            raise ConfigError("--log grid requires positive bounds")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _sweep_point(cfg: RunConfig, variable: str, value: float):
    if variable == "T":
        if not (0.0 < value <= cfg.duration):
            raise ConfigError(f"T={value:g} outside (0, duration]")
        mode = TemporalMode.square(value)
        return epr_spectra(cfg.opo1, cfg.opo2), mode
    if variable == "pump_param":
        if not (0.0 <= value < 1.0):
            raise ConfigError(f"pump_param={value:g} outside [0, 1)")
        opo1 = replace(cfg.opo1, pump_param=value)
        opo2 = replace(cfg.opo2, pump_param=value)
    else:
        if not (0.0 <= value <= 1.0):
            raise ConfigError(f"efficiency={value:g} outside [0, 1]")
        opo1 = replace(cfg.opo1, efficiency=value)
        opo2 = replace(cfg.opo2, efficiency=value)
    return epr_spectra(opo1, opo2), cfg.mode


def _sweep_mc(cfg: RunConfig, variable: str, value: float, slot: int) -> float:
    """One-repetition pipeline duan at a sweep point."""
    if variable == "T":
        mc_cfg = replace(cfg, mode=TemporalMode.square(value))
    elif variable == "pump_param":
        mc_cfg = replace(cfg, opo1=replace(cfg.opo1, pump_param=value),
                         opo2=replace(cfg.opo2, pump_param=value))
    else:
        mc_cfg = replace(cfg, opo1=replace(cfg.opo1, efficiency=value),
                         opo2=replace(cfg.opo2, efficiency=value))
    mc_cfg = replace(mc_cfg, repetitions=1, seed=cfg.seed + 1_000_000 * (slot + 1))
    report = _run_pipeline(mc_cfg)[0]
    return report.duan


def cmd_sweep(cfg: RunConfig, out: Path, variable: str, grid: np.ndarray,
              mc_check: bool) -> int:
    rows = []
    endpoints = {0, grid.size - 1}
    for j, value in enumerate(grid):
        spectra, mode = _sweep_point(cfg, variable, float(value))
        duan = mode_duan(spectra, mode)
        duan_mc = None
        if mc_check and j in endpoints:
            duan_mc = _sweep_mc(cfg, variable, float(value), slot=j)
        rows.append((variable, value, duan, duan_mc))
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "sweep.csv", _meta(cfg, "sweep", variable=variable),
               ("variable", "value", "duan", "duan_mc"), rows)
    print(f"swept {variable} over {grid.size} points: duan "
          f"{rows[0][2]:.4f} -> {rows[-1][2]:.4f}")
    print(f"outputs in {out}")
    return EXIT_OK


# -- optimize -----------------------------------------------------------------

def _family_bounds(kind: str, overrides: Sequence[str]) -> Dict[str, Tuple[float, float]]:
    bounds = {k: tuple(v) for k, v in _DEFAULT_BOUNDS[kind].items()}
    for text in overrides:
        name, _, span = text.partition("=")
        if name not in bounds:
            raise ConfigError(
                f"--bound {name!r} not a parameter of family {kind!r} "
                f"(expected {tuple(bounds)})")
        lo, _, hi = span.partition(":")
        try:
            bounds[name] = (float(lo), float(hi))
        except ValueError as exc:
            raise ConfigError(f"--bound expects name=lo:hi, got {text!r}") from exc
    return bounds


def cmd_optimize(cfg: RunConfig, out: Path, kind: str, budget: int,
                 bound_args: Sequence[str]) -> int:
    family = ModeFamily(kind=kind, param_bounds=_family_bounds(kind, bound_args))
    spectra = epr_spectra(cfg.opo1, cfg.opo2)
    result = optimize(spectra, family, budget=budget)
    out.mkdir(parents=True, exist_ok=True)
    names = family.param_names
    best = min(result.trace, key=lambda pv: pv[1])[0]
    meta = _meta(cfg, "optimize", family=kind, budget=budget,
                 converged=str(result.converged).lower(),
                 oracle=result.oracle, best_duan=result.best_duan,
                 **{f"best_{n}": best[n] for n in names})
    _write_csv(out / "optimize.csv", meta, (*names, "duan"),
               [tuple(p[n] for n in names) + (v,) for p, v in result.trace])
    desc = ", ".join(f"{n}={best[n]:.6g}" for n in names)
    print(f"best {kind} mode: {desc} -> duan {result.best_duan:.6f} "
          f"({'converged' if result.converged else 'budget exhausted'}, "
          f"{len(result.trace)} evaluations)")
    print(f"outputs in {out}")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprsim",
        description="EPR beam simulator: spectra, pipeline runs, sweeps, "
                    "mode optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--reps", type=int, help="override config repetitions")

    common(sub.add_parser("spectra", help="analytic PSD and variance tables"))
    common(sub.add_parser("run", help="full pipeline with report and diagrams"))

    p_sweep = sub.add_parser("sweep", help="analytic duan versus one variable")
    common(p_sweep)
    p_sweep.add_argument("--var", required=True,
                         choices=("T", "pump_param", "efficiency"))
    p_sweep.add_argument("--grid", required=True, help="lo:hi:n")
    p_sweep.add_argument("--log", action="store_true",
                         help="geometric instead of linear grid spacing")
    p_sweep.add_argument("--mc-check", action="store_true",
                         help="Monte Carlo spot check at the grid endpoints")

    p_opt = sub.add_parser("optimize", help="search a mode family for minimal duan")
    common(p_opt)
    p_opt.add_argument("--family", required=True,
                       choices=("square", "one_sided_exp", "double_exp"))
    p_opt.add_argument("--budget", type=int, default=160,
                       help="objective evaluation budget (minimum 16)")
    p_opt.add_argument("--bound", action="append", default=[],
                       metavar="NAME=LO:HI", help="override a search bound")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changed = False
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed: must be non-negative")
        cfg = replace(cfg, seed=args.seed)
        changed = True
    if args.reps is not None:
        if args.reps < 1:
            raise ConfigError("--reps: must be at least 1")
        cfg = replace(cfg, repetitions=args.reps)
        changed = True
    if changed:
        cfg = replace(cfg, fingerprint=config_fingerprint(cfg))
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG

    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        out = Path(args.out) if args.out else Path(cfg.output_dir)
        if args.command == "run":
            return cmd_run(cfg, out)
        if args.command == "spectra":
            return cmd_spectra(cfg, out)
        if args.command == "sweep":
            grid = _parse_grid(args.grid, args.log)
            return cmd_sweep(cfg, out, args.var, grid, args.mc_check)
        return cmd_optimize(cfg, out, args.family, args.budget, args.bound)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, CalibrationError, NonUnimodalError,
            FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
