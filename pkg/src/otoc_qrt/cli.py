"""Command-line driver: steady states, G2 curves and maps, OTOCs, oracle tables.

Exit status is 0 on success, 1 for configuration errors and 2 for numerical
failures.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigError, RunConfig, parse_config
from .emitter import liouvillian, noise_model
from .interferometer import G2Calculator, g2_scan
from .operators import SteadyStateError
from .oracle import CollisionConfig, oracle_correlation
from .qrt import Engine

log = logging.getLogger("otoc_qrt")

SUBCOMMANDS = ("steady", "g2-curve", "g2-map", "noise-diff", "otoc", "oracle-compare")
G2_HEADER = ["tau", "T", "g2_raw", "g2_no_noise", "g2_normalized"]
PARAM_HEADER = ["detector", "noise", "omega", "delta", "gamma", "nbar", "t1", "r1", "t2", "r2"]


class _Formatter:
    def __init__(self, precision: int):
        self.precision = precision

    def __call__(self, x) -> str:
        if isinstance(x, str):
            return x
        x = float(x)
        if math.isnan(x):
            return "nan"
        if x == 0:
            x = 0.0  # drop the sign of -0.0
        return f"{x:.{self.precision}g}"


def _params(cfg: RunConfig) -> list:
    e, p = cfg.emitter, cfg.interferometer
    return [cfg.detector, cfg.noise, e.omega, e.delta, e.gamma, e.nbar, p.t1, p.r1, p.t2, p.r2]


def _csv(header, rows, fmt) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _g2_rows(cfg: RunConfig, Ts, threads: int, force_both: bool = False):
    include = cfg.noise in ("on", "both") or force_both
    want_nn = cfg.noise in ("off", "both") or force_both
    detector = "A-B" if cfg.detector == "A-minus-B" else cfg.detector
    calc = G2Calculator(cfg.emitter)
    if detector == "A-B":
        return g2_scan(detector, cfg.emitter, cfg.interferometer, cfg.tau_grid.values(), Ts,
                       include, threads, calc)
    results = []
    taus = cfg.tau_grid.values()

    def one(point):
        T, tau = point
        return calc.g2(detector, cfg.interferometer.with_delay(T), tau, include, want_nn)

    points = [(float(T), float(tau)) for T in Ts for tau in taus]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, points))
    else:
        results = [one(pt) for pt in points]
    return results


def run(subcommand: str, cfg: RunConfig, threads: int = 1) -> str:
    """Execute one subcommand and return its text output."""
    fmt = _Formatter(cfg.precision)
    if subcommand == "steady":
        engine = Engine(liouvillian(cfg.emitter))
        rho = engine.rho_ss
        rows = [[f"{i}{j}", rho[a, b].real, rho[a, b].imag]
                for a, i in enumerate("ge") for b, j in enumerate("ge")]
        return _csv(["element", "re", "im"], rows, fmt)

    if subcommand in ("g2-curve", "g2-map", "noise-diff"):
        if subcommand == "g2-curve":
            Ts = np.array([cfg.interferometer.T])
        else:
            Ts = cfg.T_grid.values()
        results = _g2_rows(cfg, Ts, threads, force_both=subcommand == "noise-diff")
        params = _params(cfg)
        if subcommand == "noise-diff":
            rows = [[r.tau, r.T, r.raw - r.raw_no_noise] + params for r in results]
            return _csv(["tau", "T", "noise_diff"] + PARAM_HEADER, rows, fmt)
        rows = [[r.tau, r.T, r.raw, r.raw_no_noise, r.normalized] + params for r in results]
        return _csv(G2_HEADER + PARAM_HEADER, rows, fmt)

    if subcommand == "otoc":
        if not cfg.schedule:
            raise ConfigError("otoc needs a 'schedule' entry")
        engine = Engine(liouvillian(cfg.emitter), noise_model(cfg.emitter))
        value = engine.correlation(cfg.events(), "steady", True)
        no_noise = engine.correlation(cfg.events(), "steady", False)
        sched = " ".join(f"{n}@{fmt(t)}" for n, t in cfg.schedule)
        rows = [[sched, value.real, value.imag, no_noise.real, no_noise.imag] + _params(cfg)]
        return _csv(["schedule", "re", "im", "no_noise_re", "no_noise_im"] + PARAM_HEADER, rows, fmt)

    if subcommand == "oracle-compare":
        if not cfg.schedule:
            raise ConfigError("oracle-compare needs a 'schedule' entry")
        events = cfg.events()
        engine = Engine(liouvillian(cfg.emitter), noise_model(cfg.emitter))
        exact = engine.correlation(events, "steady", True)
        rows = []
        for dt in cfg.oracle_dt:
            cc = CollisionConfig.covering(events, dt, cfg.emitter.nbar)
            value = oracle_correlation(events, cfg.emitter, cc)
            rel = abs(value - exact) / abs(exact) if exact != 0 else math.nan
            rows.append([dt, exact.real, exact.imag, value.real, value.imag, rel])
        return _csv(["dt", "engine_re", "engine_im", "oracle_re", "oracle_im", "rel_error"], rows, fmt)

    raise ConfigError(f"unknown subcommand {subcommand!r}")


def load_config(preset: str | None, config_path: str | None) -> RunConfig:
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    base = PRESETS[preset] if preset else RunConfig()
    if config_path is None:
        return base
    try:
        text = Path(config_path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {config_path}: {err}") from None
    return parse_config(text, base)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otoc-qrt", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set")
    parser.add_argument("--out", help="output path ('-' for stdout)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--precision", type=int, help="significant digits, 6..17")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.preset, args.config)
        overrides = []
        if args.out is not None:
            overrides.append(f"output = {args.out}")
        if args.precision is not None:
            overrides.append(f"precision = {args.precision}")
        if overrides:
            cfg = parse_config("\n".join(overrides), cfg)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1

    log.info("running %s", args.subcommand)
    try:
        text = run(args.subcommand, cfg, args.threads)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except (SteadyStateError, ArithmeticError, np.linalg.LinAlgError, ValueError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2

    if cfg.output in ("-", ""):
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
