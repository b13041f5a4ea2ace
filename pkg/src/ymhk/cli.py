"""Command-line interface: ``ymhk <subcommand> [options]``.

Exit codes: 0 success, 1 a check failed, 2 usage, config or input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import checks
from .analysis import (
    ball_masses, blowup_extract, center_value, final_decade_log_slope, rescale,
    smoothing_diagnostic,
)
from .config import RunConfig, load_config
from .errors import (
    ConfigError, CorruptSnapshotError, CurvatureTooRoughError, LatticeTooSmallError,
    NoSingularityError, SnapshotFormatError,
)
from .fields import kato_violations
from .flow import FlowState, RunResult, cold_start, hot_start, run
from .storage import (
    DirectorySink, fmt_float, load_snapshot, read_trace, save_snapshot, snapshot_header,
    trace_columns, write_report,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("ymhk")


def reference_config_path() -> Path:
    return Path(str(resources.files("ymhk") / "data" / "reference.conf"))


def initial_state(cfg: RunConfig) -> FlowState:
    kind, arg = cfg.init_mode
    if kind == "cold":
        return cold_start(cfg.lattice, cfg.group_obj, cfg.params)
    if kind == "hot":
        return hot_start(cfg.lattice, cfg.group_obj, cfg.params, arg, cfg.seed)
    return state_from_snapshot(Path(arg), cfg)


def state_from_snapshot(path: Path, cfg: RunConfig) -> FlowState:
    """Load a snapshot and check it against the lattice and group of ``cfg``."""
    state = load_snapshot(path)
    if state.U.group.name != cfg.group:
        raise ConfigError(f"snapshot group {state.U.group.label} does not match config", "group")
    if state.lattice.extents != cfg.extents:
        raise ConfigError(f"snapshot extents {list(state.lattice.extents)} do not match config", "extents")
    if state.lattice.h != cfg.h:
        raise ConfigError(f"snapshot spacing {state.lattice.h} does not match config", "h")
    return replace(state, params=cfg.params, last_energy=None).with_energy()


def _run_meta(cfg: RunConfig, start: FlowState) -> dict:
    return {"group": cfg.group_obj.label, "n": cfg.n, "extents": ",".join(map(str, cfg.extents)),
            "h": fmt_float(cfg.h), "k": cfg.k, "lambda": fmt_float(cfg.lam), "init": cfg.init,
            "seed": cfg.seed, "integrator": cfg.integrator, "t_start": fmt_float(start.t)}


def _execute(cfg: RunConfig, start: FlowState, out: Path, q: int | None) -> int:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.conf").write_text(cfg.to_text())
    sink = DirectorySink(out, trace_columns(cfg.k, cfg.record_derivatives), _run_meta(cfg, start))
    try:
        result: RunResult = run(start, cfg, sink)
    finally:
        sink.close()
    kato = sum(kato_violations(s.U, s.u) for s in map(load_snapshot, sink.snapshots))
    items = [("reason", result.reason), ("steps", result.final.step_count), ("t", result.final.t),
             ("E_total", result.final.energy().total), ("snapshots", len(sink.snapshots)),
             ("kato_violations", kato)]
    if q is not None:
        _, rows = read_trace(out / "trace.csv")
        series = smoothing_diagnostic(rows, q, cfg.k)
        slope = final_decade_log_slope(series)
        items += [("smoothing_q", q), ("smoothing_final_decade_slope", slope),
                  ("smoothing_max", max(v for _, v in series))]
    write_report(out / "run_report.txt", items)
    for key, val in items:
        print(f"{key} = {fmt_float(val) if isinstance(val, float) else val}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    return _execute(cfg, initial_state(cfg), Path(args.out or cfg.out_dir), args.q)


def cmd_resume(args) -> int:
    cfg = load_config(args.config)
    start = state_from_snapshot(Path(args.snapshot), cfg)
    if cfg.t_max <= start.t:
        raise ConfigError(f"t_max = {cfg.t_max} is not beyond the snapshot time {start.t}", "t_max")
    return _execute(cfg, start, Path(args.out or cfg.out_dir), args.q)


def cmd_verify(args) -> int:
    cfg = load_config(args.config or reference_config_path())
    results = checks.invariant_suite(cfg.lattice, cfg.group_obj, cfg.params, cfg.seed)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "some checks failed")
    return EXIT_OK if ok else EXIT_FAIL


def _parse_rho_list(raw: str) -> list[int]:
    """``"0.5,0.25"`` -> refinement factors ``[2, 4]``."""
    out = []
    for item in raw.split(","):
        rho = float(item)
        if not 0 < rho <= 1 or abs(1 / rho - round(1 / rho)) > 1e-9:
            raise ConfigError(f"rho must be 1/m for a positive integer m, got {item!r}", "rho")
        out.append(round(1 / rho))
    return out


def cmd_scale_test(args) -> int:
    cfg = load_config(args.config)
    state = state_from_snapshot(Path(args.snapshot), cfg) if args.snapshot else initial_state(cfg)
    items = []
    for m in _parse_rho_list(args.rho):
        _, rep = rescale(state, m, resample=True)
        tag = f"rho_{fmt_float(rep.rho)}"
        items += [(f"{tag}.ratio_observed", rep.energy_ratio_observed),
                  (f"{tag}.ratio_predicted", rep.energy_ratio_predicted),
                  (f"{tag}.relative_deviation", rep.relative_deviation),
                  (f"{tag}.time_dilation", rep.time_dilation),
                  (f"{tag}.interpolation_error_estimate", rep.interpolation_error_estimate)]
    for key, val in items:
        print(f"{key} = {fmt_float(val)}")
    if args.out:
        write_report(Path(args.out) / "scale_report.txt", items)
    return EXIT_OK


def cmd_blowup(args) -> int:
    state = load_snapshot(args.snapshot)
    new, rho, site = blowup_extract(state, resample=args.resample)
    radii = [1.0, 2.0, 4.0]
    masses = ball_masses(new.U, 0, radii)
    items = [("rho", rho), ("site", site), ("center_value", center_value(new)),
             ("ball_radii", radii), ("ball_masses", masses)]
    for key, val in items:
        if isinstance(val, list):
            val = ",".join(fmt_float(v) for v in val)
        elif isinstance(val, float):
            val = fmt_float(val)
        print(f"{key} = {val}")
    if args.out:
        out = Path(args.out)
        write_report(out / "blowup_report.txt", items)
        save_snapshot(new, out / "blowup_rescaled.ymhk")
    return EXIT_OK


def cmd_info(args) -> int:
    path = args.snapshot or args.path
    if path is None:
        raise ConfigError("info needs a snapshot path", "snapshot")
    head = snapshot_header(Path(path).read_bytes())
    print(f"group = {head['group']}")
    print(f"n = {head['n']}")
    print(f"extents = [{', '.join(map(str, head['extents']))}]")
    for key in ("h", "k", "lambda", "t"):
        val = head[key]
        print(f"{key} = {fmt_float(val) if isinstance(val, float) else val}")
    print(f"bytes = {head['bytes']} (expected {head['expected_bytes']})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ymhk", description="Yang-Mills-Higgs k-flow on periodic lattices.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="{run,resume,verify,scale-test,blowup,info}")
    sub.required = True

    p = sub.add_parser("run", help="run the flow from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (default: out_dir from the config)")
    p.add_argument("--q", type=int, help="also report the smoothing diagnostic for derivative order q")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue a run from a snapshot")
    p.add_argument("--config", required=True)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out")
    p.add_argument("--q", type=int)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("verify", help="run the invariant suite and print a pass/fail table")
    p.add_argument("--config", help="config to take lattice, group and k from (default: shipped reference)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scale-test", help="parabolic rescaling report")
    p.add_argument("--config", required=True)
    p.add_argument("--snapshot", help="rescale this snapshot instead of the config's initial state")
    p.add_argument("--rho", default="0.5", help="comma-separated scale factors 1/m (default 0.5)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scale_test)

    p = sub.add_parser("blowup", help="blow-up normalization of a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--resample", action="store_true", help="interpolate instead of a pure unit change")
    p.add_argument("--out")
    p.set_defaults(func=cmd_blowup)

    p = sub.add_parser("info", help="print a snapshot header")
    p.add_argument("path", nargs="?")
    p.add_argument("--snapshot")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        key = f" [key: {exc.key}]" if exc.key else ""
        print(f"ymhk: config error{key}: {exc}", file=sys.stderr)
    except (SnapshotFormatError, CorruptSnapshotError) as exc:
        print(f"ymhk: bad snapshot: {exc}", file=sys.stderr)
    except (CurvatureTooRoughError, LatticeTooSmallError, NoSingularityError) as exc:
        print(f"ymhk: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"ymhk: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
