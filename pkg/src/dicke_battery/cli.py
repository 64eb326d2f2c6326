"""``dicke-battery`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import DEFAULTS, MODES, SWEEP_DEFAULTS, ConfigError, RunConfig, parse_config
from .lindblad import NumericalError, detect_steady_state, integrate
from .linalg import LinalgError
from .report import (
    run_oracle_report,
    write_hp_comparison,
    write_oracle_report,
    write_parallel_comparison,
    write_sweep,
    write_trajectory,
)
from .sweep import SweepSpec, parallel_comparison, run_sweep

logger = logging.getLogger("dicke_battery")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

OUTPUT_NAMES = {
    "simulate": "trajectory.csv",
    "sweep": "sweep.csv",
    "oracle": "oracle.csv",
    "hp-compare": "hp_compare.csv",
    "parallel-compare": "parallel_compare.csv",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("<flags>", message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="dicke-battery",
        description="Charge a collective Dicke battery coupled to a thermal bath.",
    )
    ap.add_argument("mode_arg", nargs="?", choices=MODES, metavar="MODE",
                    help=f"one of {', '.join(MODES)} (same as --mode)")
    ap.add_argument("--config", type=Path, help="YAML config file or a .meta.json sidecar")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--workers", type=int, default=None,
                    help="sweep worker processes (default: one per core)")
    ap.add_argument("-q", "--quiet", action="store_true", help="suppress the provenance log")
    for key in list(DEFAULTS) + list(SWEEP_DEFAULTS):
        ap.add_argument("--" + key.replace("_", "-"), dest=key, default=None, metavar="VALUE")
    return ap


def _flags(ns: argparse.Namespace) -> dict:
    flags = {k: getattr(ns, k) for k in list(DEFAULTS) + list(SWEEP_DEFAULTS)}
    if ns.mode_arg is not None:
        if flags["mode"] is not None and flags["mode"] != ns.mode_arg:
            raise ConfigError("mode", "positional mode and --mode disagree")
        flags["mode"] = ns.mode_arg
    return flags


def execute(cfg: RunConfig, workers: Optional[int] = None) -> Path:
    """Run the configured mode and return the path of the main output table."""
    out = Path(cfg.output_dir) / OUTPUT_NAMES[cfg.mode]
    p = cfg.params
    if cfg.mode == "simulate":
        traj = integrate(p, keep_states=False)
        path = write_trajectory(traj, out, cfg)
        if p.t_max >= 3 * p.period:
            ss = detect_steady_state(traj, p)
            logger.info("steady deltaF=%.10g deltaS=%.10g converged=%s t_steady=%.6g",
                        ss.deltaF_ss, ss.deltaS_ss, ss.converged, ss.t_steady)
        return path
    if cfg.mode == "sweep":
        s = cfg.sweep
        spec = SweepSpec(p, s.n_min, s.n_max, s.gamma_list, s.amplitude_list, s.nbar_list,
                         s.objective)
        result = run_sweep(spec, workers=workers)
        for combo, n in result.n_opt.items():
            logger.info("gamma, A, nbar = %s: n_opt = %d", combo, n)
        return write_sweep(result, out, cfg)
    if cfg.mode == "oracle":
        if p.n_atoms != 1:
            raise ConfigError("n_atoms", "oracle mode requires n_atoms = 1")
        report = run_oracle_report(p)
        logger.info("Omega fitted=%s analytic=%.10g", report.omega_fit, report.omega_analytic)
        return write_oracle_report(report, out, cfg)
    if cfg.mode == "hp-compare":
        return write_hp_comparison(p, cfg.hp_truncation, out, cfg)
    if cfg.mode == "parallel-compare":
        return write_parallel_comparison(parallel_comparison(p.n_atoms, p), out, cfg)
    raise ConfigError("mode", f"unsupported mode {cfg.mode!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        ns = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if ns.quiet:
        logging.getLogger().setLevel(logging.WARNING)
    try:
        text = ns.config.read_text(encoding="utf-8") if ns.config else None
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text, _flags(ns))
        path = execute(cfg, ns.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, LinalgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
