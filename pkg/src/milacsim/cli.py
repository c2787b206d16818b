"""Command-line interface: rate sweeps, invariant verification, design inspection.

Exit codes: 0 on success, 1 on validation errors (bad flags, bad config
values, inconsistent dimensions), 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .beamforming import (
    SystemConfig,
    capacity_closed_form,
    ensure_invertible_imag,
    milac_rate,
    svd_ordered,
    water_filling,
)
from .channel import ChannelEnsembleSpec, rayleigh_channel
from .exceptions import MilacError
from .harness import (
    SweepSpec,
    WORKERS_ENV_VAR,
    run_sweep,
    run_verification,
    snr_db_to_tx_power,
    write_csv,
    write_manifest,
)
from .network import (
    AdmittanceMatrix,
    PortPartition,
    complete_scattering_rx,
    complete_scattering_tx,
    dump_matrix_csv,
    susceptance_rx,
    susceptance_tx,
    transfer_block_from_admittance,
)


class _CliError(Exception):
    """Validation problem that should terminate with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse exits with status 2 by default; route through the
        # validation path so bad flags exit with status 1 instead.
        raise _CliError(f"{self.prog}: {message}")


_DEFAULTS = {
    "sweep-snr": {
        "trials": 100,
        "seed": 0,
        "noise_power": 1.0,
        "z0": 50.0,
        "snr_min": -10.0,
        "snr_max": 20.0,
        "snr_step": 2.0,
    },
    "sweep-antennas": {
        "trials": 100,
        "seed": 0,
        "noise_power": 1.0,
        "z0": 50.0,
        "antenna_points": (16, 32, 64, 128),
        "snr_db": 0.0,
    },
    "verify": {"seed": 0, "cases": 25},
    "design-dump": {
        "streams": 2,
        "tx_antennas": 4,
        "rx_antennas": 4,
        "snr_db": 0.0,
        "seed": 0,
        "noise_power": 1.0,
        "z0": 50.0,
    },
}

_REQUIRED = {
    "sweep-snr": ("streams", "antennas", "out"),
    "sweep-antennas": ("streams", "out"),
    "verify": (),
    "design-dump": ("out_dir",),
}


def _parse_int_list(text) -> tuple[int, ...]:
    if isinstance(text, tuple):
        return text
    try:
        return tuple(int(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError as exc:
        raise _CliError(f"expected a comma-separated list of integers, got {text!r}") from exc


_CONVERTERS = {
    "streams": int,
    "trials": int,
    "seed": int,
    "out": str,
    "noise_power": float,
    "z0": float,
    "workers": int,
    "antennas": int,
    "snr_min": float,
    "snr_max": float,
    "snr_step": float,
    "antenna_points": _parse_int_list,
    "snr_db": float,
    "cases": int,
    "tx_antennas": int,
    "rx_antennas": int,
    "out_dir": str,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="milacsim",
        description="Sweeps and design tools for lossless reciprocal analog beamforming networks.",
        epilog=f"Default worker count comes from ${WORKERS_ENV_VAR} or the CPU count.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sup = argparse.SUPPRESS

    def common_sweep_flags(p):
        p.add_argument("--streams", type=int, default=sup, help="spatial stream count (required)")
        p.add_argument("--trials", type=int, default=sup, help="Monte-Carlo trials per sweep point (default 100)")
        p.add_argument("--seed", type=int, default=sup, help="64-bit master seed (default 0)")
        p.add_argument("--out", default=sup, help="output CSV path (required); a .manifest.txt is written next to it")
        p.add_argument("--noise-power", type=float, default=sup, help="noise power in watts, linear (default 1.0)")
        p.add_argument("--z0", type=float, default=sup, help="reference impedance in ohms (default 50)")
        p.add_argument("--workers", type=int, default=sup, help="worker process count (default: environment or CPU count)")
        p.add_argument("--config", default=sup, help="key = value config file; command-line flags override it")

    p_snr = sub.add_parser("sweep-snr", help="mean rate versus SNR at a fixed antenna count")
    common_sweep_flags(p_snr)
    p_snr.add_argument("--antennas", type=int, default=sup, help="antenna count per side (required)")
    p_snr.add_argument("--snr-min", type=float, default=sup, help="sweep start in dB (default -10)")
    p_snr.add_argument("--snr-max", type=float, default=sup, help="sweep end in dB, inclusive (default 20)")
    p_snr.add_argument("--snr-step", type=float, default=sup, help="sweep step in dB (default 2)")

    p_ant = sub.add_parser("sweep-antennas", help="mean rate versus antenna count at a fixed SNR")
    common_sweep_flags(p_ant)
    p_ant.add_argument("--antenna-points", default=sup, help="comma-separated antenna counts (default 16,32,64,128)")
    p_ant.add_argument("--snr-db", type=float, default=sup, help="fixed SNR in dB (default 0)")

    p_ver = sub.add_parser("verify", help="run the randomized invariant suite and print a pass/fail table")
    p_ver.add_argument("--seed", type=int, default=sup, help="master seed (default 0)")
    p_ver.add_argument("--cases", type=int, default=sup, help="instances per check (default 25)")
    p_ver.add_argument("--config", default=sup, help="key = value config file; command-line flags override it")

    p_dump = sub.add_parser("design-dump", help="write one seeded design (matrices and allocation) as CSV files")
    p_dump.add_argument("--streams", type=int, default=sup, help="spatial stream count (default 2)")
    p_dump.add_argument("--tx-antennas", type=int, default=sup, help="transmit antenna count (default 4)")
    p_dump.add_argument("--rx-antennas", type=int, default=sup, help="receive antenna count (default 4)")
    p_dump.add_argument("--snr-db", type=float, default=sup, help="SNR in dB (default 0)")
    p_dump.add_argument("--seed", type=int, default=sup, help="master seed (default 0)")
    p_dump.add_argument("--noise-power", type=float, default=sup, help="noise power in watts, linear (default 1.0)")
    p_dump.add_argument("--z0", type=float, default=sup, help="reference impedance in ohms (default 50)")
    p_dump.add_argument("--out-dir", default=sup, help="directory for the CSV files (required)")
    p_dump.add_argument("--config", default=sup, help="key = value config file; command-line flags override it")
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _CliError(f"cannot read config file {path}: {exc}") from exc
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _CliError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _merge_options(command: str, args: argparse.Namespace) -> dict:
    """Layer built-in defaults, config-file values, then explicit flags."""
    explicit = vars(args).copy()
    explicit.pop("command", None)
    merged = dict(_DEFAULTS[command])
    config_path = explicit.pop("config", None)
    if config_path:
        allowed = set(_DEFAULTS[command]) | set(_REQUIRED[command]) | {"workers"}
        for key, raw in _load_config(config_path).items():
            if key not in allowed:
                raise _CliError(f"config key {key!r} is not a flag of {command}")
            try:
                merged[key] = _CONVERTERS[key](raw)
            except (ValueError, TypeError) as exc:
                raise _CliError(f"config key {key!r}: cannot parse {raw!r}") from exc
    merged.update(explicit)
    for key in _REQUIRED[command]:
        if key not in merged:
            raise _CliError(f"missing required flag --{key.replace('_', '-')}")
    return merged


def _print_sweep(result, out_path: str) -> None:
    print(f"{'sweep_value':>12} {'milac':>12} {'digital':>12} {'capacity':>12} {'max_rel_gap':>12}")
    for row in result.rows:
        print(
            f"{row.sweep_value:>12.4f} {row.mean_milac_rate:>12.6f} "
            f"{row.mean_digital_rate:>12.6f} {row.mean_capacity:>12.6f} "
            f"{row.max_rel_gap:>12.3e}"
        )
    print(f"wrote {out_path} and {out_path}.manifest.txt")


def _run_sweep_command(spec: SweepSpec, opts: dict) -> int:
    template = SystemConfig(
        n_streams=1,
        n_tx=1,
        n_rx=1,
        tx_power=1.0,
        noise_power=opts["noise_power"],
        ref_admittance=1.0 / opts["z0"],
    )
    result = run_sweep(spec, template, workers=opts.get("workers"))
    write_csv(result, spec.out_path)
    write_manifest(spec, spec.out_path + ".manifest.txt", spec.out_path)
    _print_sweep(result, spec.out_path)
    return 0


def _cmd_sweep_snr(opts: dict) -> int:
    if opts["streams"] > opts["antennas"]:
        raise _CliError(
            f"--streams ({opts['streams']}) must not exceed --antennas ({opts['antennas']})"
        )
    if opts["snr_step"] <= 0:
        raise _CliError("--snr-step must be positive")
    if opts["snr_max"] < opts["snr_min"]:
        raise _CliError("--snr-max must not be below --snr-min")
    points = tuple(
        float(x) for x in np.arange(opts["snr_min"], opts["snr_max"] + opts["snr_step"] / 2, opts["snr_step"])
    )
    spec = SweepSpec(
        mode="snr_sweep",
        snr_points_db=points,
        antenna_points=(opts["antennas"],),
        n_streams=opts["streams"],
        n_trials=opts["trials"],
        master_seed=opts["seed"],
        out_path=opts["out"],
    )
    return _run_sweep_command(spec, opts)


def _cmd_sweep_antennas(opts: dict) -> int:
    points = _parse_int_list(opts["antenna_points"])
    if opts["streams"] > min(points):
        raise _CliError(
            f"--streams ({opts['streams']}) must not exceed the smallest --antenna-points entry ({min(points)})"
        )
    spec = SweepSpec(
        mode="antenna_sweep",
        snr_points_db=(opts["snr_db"],),
        antenna_points=points,
        n_streams=opts["streams"],
        n_trials=opts["trials"],
        master_seed=opts["seed"],
        out_path=opts["out"],
    )
    return _run_sweep_command(spec, opts)


def _cmd_verify(opts: dict) -> int:
    rows = run_verification(master_seed=opts["seed"], n_cases=opts["cases"])
    width = max(len(r.name) for r in rows)
    print(f"{'check':<{width}} {'cases':>6} {'worst':>12} {'tol':>10} status")
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}} {r.cases:>6} {r.worst:>12.3e} {r.tol:>10.1e} {status}")
    if all(r.passed for r in rows):
        print("all checks passed")
        return 0
    print("some checks FAILED")
    return 2


def _cmd_design_dump(opts: dict) -> int:
    if opts["streams"] > min(opts["tx_antennas"], opts["rx_antennas"]):
        raise _CliError(
            f"--streams ({opts['streams']}) must not exceed --tx-antennas/--rx-antennas"
        )
    y0 = 1.0 / opts["z0"]
    config = SystemConfig(
        n_streams=opts["streams"],
        n_tx=opts["tx_antennas"],
        n_rx=opts["rx_antennas"],
        tx_power=snr_db_to_tx_power(opts["snr_db"], opts["noise_power"]),
        noise_power=opts["noise_power"],
        ref_admittance=y0,
    )
    ensemble = ChannelEnsembleSpec(
        n_rx=config.n_rx, n_tx=config.n_tx, n_trials=1, master_seed=opts["seed"]
    )
    h = rayleigh_channel(ensemble, 0)
    factors = ensure_invertible_imag(svd_ordered(h), config.n_streams, opts["seed"])
    n_s = config.n_streams
    theta_tx = complete_scattering_tx(factors.v[:, :n_s], factors.v[:, n_s:])
    theta_rx = complete_scattering_rx(factors.u[:, :n_s], factors.u[:, n_s:])
    b_tx = susceptance_tx(factors.v, n_s, y0)
    b_rx = susceptance_rx(factors.u, n_s, y0)
    f = transfer_block_from_admittance(
        AdmittanceMatrix(1j * b_tx.b), PortPartition(n_s, config.n_tx), y0
    )
    g = transfer_block_from_admittance(
        AdmittanceMatrix(1j * b_rx.b), PortPartition(config.n_rx, n_s), y0
    )
    allocation = water_filling(
        factors.sigma[:n_s] ** 2, config.tx_power, config.noise_power
    )
    rate, _ = milac_rate(g, h, f, allocation, config.tx_power, config.noise_power)
    capacity = capacity_closed_form(
        factors.sigma[:n_s] ** 2, allocation, config.tx_power, config.noise_power
    )

    out_dir = opts["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    dump_matrix_csv(b_tx.b, os.path.join(out_dir, "susceptance_tx.csv"))
    dump_matrix_csv(b_rx.b, os.path.join(out_dir, "susceptance_rx.csv"))
    dump_matrix_csv(theta_tx.theta, os.path.join(out_dir, "scattering_tx.csv"))
    dump_matrix_csv(theta_rx.theta, os.path.join(out_dir, "scattering_rx.csv"))
    dump_matrix_csv(f, os.path.join(out_dir, "precoder_block.csv"))
    dump_matrix_csv(g, os.path.join(out_dir, "combiner_block.csv"))
    with open(os.path.join(out_dir, "allocation.csv"), "w", encoding="utf-8") as fh:
        fh.write("stream,power_fraction\n")
        for s, p in enumerate(allocation.p):
            fh.write(f"{s},{p:.17e}\n")
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(
            "\n".join(
                [
                    f"streams = {config.n_streams}",
                    f"tx_antennas = {config.n_tx}",
                    f"rx_antennas = {config.n_rx}",
                    f"snr_db = {opts['snr_db']!r}",
                    f"master_seed = {opts['seed']}",
                    f"water_level = {allocation.water_level:.17e}",
                    f"milac_rate_bits = {rate:.17e}",
                    f"capacity_bits = {capacity:.17e}",
                ]
            )
            + "\n"
        )
    print(f"wrote design files to {out_dir} (rate {rate:.6f} bits, capacity {capacity:.6f} bits)")
    return 0


_HANDLERS = {
    "sweep-snr": _cmd_sweep_snr,
    "sweep-antennas": _cmd_sweep_antennas,
    "verify": _cmd_verify,
    "design-dump": _cmd_design_dump,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_usage(sys.stderr)
            print("milacsim: a command is required", file=sys.stderr)
            return 1
        opts = _merge_options(args.command, args)
        return _HANDLERS[args.command](opts)
    except SystemExit as exc:
        # argparse exits directly for --help; propagate its status.
        return int(exc.code or 0)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MilacError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
