"""Monte-Carlo sweep harness: per-trial evaluation, aggregation, CSV output.

Trials are embarrassingly parallel: each (sweep point, trial index) pair is
an independent task whose channel comes from a counter-based substream, so
results do not depend on execution order or worker count.  Aggregation
sums per-trial values in trial order with pairwise summation, which keeps
serial and parallel runs byte-identical.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from .beamforming import (
    RateReport,
    SystemConfig,
    capacity_closed_form,
    design_milac,
    digital_design_and_rate,
    milac_rate,
    water_filling,
)
from .channel import ChannelEnsembleSpec, rayleigh_channel
from .exceptions import PhaseSearchExhaustedError
from .network import (
    DEFAULT_REF_ADMITTANCE,
    AdmittanceMatrix,
    PortPartition,
    ScatteringMatrix,
    admittance_to_scattering,
    check_lossless_reciprocal,
    complete_scattering_rx,
    complete_scattering_tx,
    scattering_to_admittance,
    susceptance_rx,
    susceptance_tx,
    transfer_block_from_admittance,
    transfer_block_from_scattering,
)

_LOG = logging.getLogger(__name__)

SWEEP_MODES = ("snr_sweep", "antenna_sweep", "verify")

WORKERS_ENV_VAR = "MILACSIM_WORKERS"

CSV_HEADER = "sweep_value,mean_milac_rate,mean_digital_rate,mean_capacity,max_rel_gap,n_trials"

# Attempts at re-seeding the phase search before a trial is abandoned.
_DESIGN_RETRIES = 3


@dataclass(frozen=True)
class SweepSpec:
    """Description of one Monte-Carlo sweep.

    For an SNR sweep the antenna count is fixed at antenna_points[0] and
    snr_points_db supplies the x-axis; for an antenna sweep the SNR is fixed
    at snr_points_db[0] and antenna_points supplies the x-axis.  Both point
    vectors must be nonempty and strictly ascending.
    """

    mode: str
    snr_points_db: tuple[float, ...]
    antenna_points: tuple[int, ...]
    n_streams: int
    n_trials: int = 100
    master_seed: int = 0
    out_path: str = ""

    def __post_init__(self):
        if self.mode not in SWEEP_MODES:
            raise ValueError(f"mode must be one of {SWEEP_MODES}, got {self.mode!r}")
        snr = tuple(float(x) for x in self.snr_points_db)
        ant = tuple(int(x) for x in self.antenna_points)
        if len(snr) == 0 or len(ant) == 0:
            raise ValueError("sweep point vectors must be nonempty")
        if any(b <= a for a, b in zip(snr, snr[1:])):
            raise ValueError("snr_points_db must be strictly ascending")
        if any(b <= a for a, b in zip(ant, ant[1:])):
            raise ValueError("antenna_points must be strictly ascending")
        if min(ant) < 1:
            raise ValueError("antenna counts must be at least 1")
        if self.n_streams < 1:
            raise ValueError("n_streams must be at least 1")
        if self.n_streams > min(ant):
            raise ValueError(
                f"n_streams={self.n_streams} exceeds the smallest antenna count {min(ant)}"
            )
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        object.__setattr__(self, "snr_points_db", snr)
        object.__setattr__(self, "antenna_points", ant)


@dataclass(frozen=True)
class SweepRow:
    """Aggregated statistics of one sweep point."""

    sweep_value: float
    mean_milac_rate: float
    mean_digital_rate: float
    mean_capacity: float
    max_rel_gap: float
    n_trials: int


@dataclass(frozen=True)
class SweepResult:
    """All rows of a finished sweep, in sweep-point order."""

    mode: str
    rows: tuple[SweepRow, ...]


def snr_db_to_tx_power(snr_db: float, noise_power: float) -> float:
    """Linear transmit power for a target SNR in dB at a given noise power."""
    return noise_power * 10.0 ** (snr_db / 10.0)


def run_trial(h, config: SystemConfig, rng_seed) -> RateReport:
    """Design, realize, and rate one channel through the full circuit path.

    The rate is evaluated on the transfer blocks recovered from the
    synthesized susceptance matrices, not on the singular vectors directly,
    so the whole admittance pipeline is exercised on every trial.
    """
    b_tx, b_rx, allocation = design_milac(h, config, rng_seed)
    f = transfer_block_from_admittance(
        AdmittanceMatrix(1j * b_tx.b),
        PortPartition(n_inputs=config.n_streams, n_outputs=config.n_tx),
        config.ref_admittance,
    )
    g = transfer_block_from_admittance(
        AdmittanceMatrix(1j * b_rx.b),
        PortPartition(n_inputs=config.n_rx, n_outputs=config.n_streams),
        config.ref_admittance,
    )
    rate, sinr = milac_rate(g, h, f, allocation, config.tx_power, config.noise_power)
    lam = np.linalg.svd(np.asarray(h, dtype=complex), compute_uv=False)
    capacity = capacity_closed_form(
        lam[: config.n_streams] ** 2, allocation, config.tx_power, config.noise_power
    )
    _, digital = digital_design_and_rate(h, config)
    return RateReport(
        milac_rate=rate,
        digital_rate=digital,
        capacity=capacity,
        allocation=allocation,
        per_stream_sinr=sinr,
    )


def _design_seed(master_seed: int, trial_index: int, attempt: int) -> int:
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index, attempt))
    return int(seq.generate_state(1, np.uint64)[0])


def _trial_with_retries(h, config: SystemConfig, master_seed: int, trial_index: int) -> RateReport:
    last_error = None
    for attempt in range(_DESIGN_RETRIES):
        try:
            return run_trial(h, config, _design_seed(master_seed, trial_index, attempt))
        except PhaseSearchExhaustedError as exc:
            last_error = exc
            _LOG.warning(
                "trial %d: phase search exhausted (attempt %d); retrying with a fresh seed",
                trial_index,
                attempt,
            )
    raise last_error


def _sweep_task(task: tuple) -> tuple[float, float, float]:
    """One (sweep point, trial) evaluation; top-level so it pickles for worker pools."""
    n_antennas, snr_db, n_streams, n_trials, master_seed, noise_power, ref_admittance, trial = task
    ensemble = ChannelEnsembleSpec(
        n_rx=n_antennas, n_tx=n_antennas, n_trials=n_trials, master_seed=master_seed
    )
    h = rayleigh_channel(ensemble, trial)
    config = SystemConfig(
        n_streams=n_streams,
        n_tx=n_antennas,
        n_rx=n_antennas,
        tx_power=snr_db_to_tx_power(snr_db, noise_power),
        noise_power=noise_power,
        ref_admittance=ref_admittance,
    )
    report = _trial_with_retries(h, config, master_seed, trial)
    return report.milac_rate, report.digital_rate, report.capacity


def _resolve_workers(workers) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV_VAR, "").strip()
        if env:
            workers = int(env)
        else:
            workers = os.cpu_count() or 1
    workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be at least 1")
    return workers


def run_sweep(spec: SweepSpec, cfg_template: SystemConfig | None = None, workers=None) -> SweepResult:
    """Run a sweep and aggregate per-point means over the trial ensemble.

    Args:
        spec: sweep description (mode, points, trials, seed).
        cfg_template: optional source of noise_power and ref_admittance;
            antenna counts and transmit power are derived per sweep point.
        workers: process count; defaults to the MILACSIM_WORKERS environment
            variable or, failing that, the available CPU count.  Results are
            identical for any worker count.

    Returns:
        SweepResult with one row per sweep point, in point order.
    """
    noise_power = cfg_template.noise_power if cfg_template is not None else 1.0
    ref_admittance = (
        cfg_template.ref_admittance if cfg_template is not None else DEFAULT_REF_ADMITTANCE
    )
    if spec.mode == "snr_sweep":
        points = [(float(s), spec.antenna_points[0], s) for s in spec.snr_points_db]
    elif spec.mode == "antenna_sweep":
        fixed_snr = spec.snr_points_db[0]
        points = [(float(n), n, fixed_snr) for n in spec.antenna_points]
    else:
        raise ValueError(
            f"run_sweep handles sweep modes only, not {spec.mode!r}; "
            "use run_verification for the invariant suite"
        )

    tasks = [
        (n, snr_db, spec.n_streams, spec.n_trials, spec.master_seed, noise_power, ref_admittance, t)
        for (_, n, snr_db) in points
        for t in range(spec.n_trials)
    ]
    n_workers = _resolve_workers(workers)
    if n_workers == 1 or len(tasks) == 1:
        outcomes = [_sweep_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * n_workers))
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(_sweep_task, tasks, chunksize=chunk))

    values = np.array(outcomes, dtype=float).reshape(len(points), spec.n_trials, 3)
    rows = []
    for (sweep_value, _, _), block in zip(points, values):
        # 1-D contiguous sums so numpy's pairwise summation applies per column.
        means = [float(np.sum(np.ascontiguousarray(block[:, i])) / spec.n_trials) for i in range(3)]
        gaps = np.abs(block[:, 0] - block[:, 2]) / block[:, 2]
        rows.append(
            SweepRow(
                sweep_value=sweep_value,
                mean_milac_rate=means[0],
                mean_digital_rate=means[1],
                mean_capacity=means[2],
                max_rel_gap=float(gaps.max()),
                n_trials=spec.n_trials,
            )
        )
    return SweepResult(mode=spec.mode, rows=tuple(rows))


def write_csv(result: SweepResult, path) -> None:
    """Write sweep rows as CSV with full double-precision scientific notation."""
    lines = [CSV_HEADER]
    for row in result.rows:
        lines.append(
            f"{row.sweep_value:.17e},{row.mean_milac_rate:.17e},{row.mean_digital_rate:.17e},"
            f"{row.mean_capacity:.17e},{row.max_rel_gap:.17e},{row.n_trials}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def write_manifest(spec: SweepSpec, path, csv_path="") -> None:
    """Record the sweep description, seed, and package version next to a CSV."""
    from . import __version__

    lines = [
        f"mode = {spec.mode}",
        "snr_points_db = " + ",".join(repr(x) for x in spec.snr_points_db),
        "antenna_points = " + ",".join(str(x) for x in spec.antenna_points),
        f"n_streams = {spec.n_streams}",
        f"n_trials = {spec.n_trials}",
        f"master_seed = {spec.master_seed}",
        f"csv = {csv_path or spec.out_path}",
        f"package_version = {__version__}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


@dataclass(frozen=True)
class VerificationRow:
    """Outcome of one randomized invariant check."""

    name: str
    cases: int
    worst: float
    tol: float
    passed: bool


def _wf_objective(p, lam, total_power, noise_power) -> float:
    return float(np.sum(np.log1p(total_power * p * lam / (4.0 * noise_power))) / np.log(2.0))


def run_verification(master_seed: int = 0, n_cases: int = 25) -> tuple[VerificationRow, ...]:
    """Randomized end-to-end invariant suite over n_cases instances per check.

    Every check draws fresh seeded instances, measures its worst residual,
    and compares it against the tolerance the library promises.  Returns one
    row per check; the suite passes iff every row passes.
    """
    rng = np.random.default_rng(master_seed)
    rows = []

    def record(name, worst, tol, cases=n_cases):
        rows.append(
            VerificationRow(name=name, cases=cases, worst=float(worst), tol=tol, passed=worst <= tol)
        )

    y0 = DEFAULT_REF_ADMITTANCE

    # Admittance <-> scattering round trip on well-conditioned random networks.
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(2, 9))
        y = AdmittanceMatrix(
            y0 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        )
        back = scattering_to_admittance(admittance_to_scattering(y, y0), y0)
        worst = max(worst, np.linalg.norm(back.y - y.y) / np.linalg.norm(y.y))
    record("admittance/scattering round trip (relative)", worst, 1e-10)

    # A lossless reciprocal scattering matrix maps to a purely imaginary Y.
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(2, 9))
        q = unitary_group.rvs(n, random_state=rng)
        theta = ScatteringMatrix(q @ q.T)
        y = scattering_to_admittance(theta, y0)
        worst = max(worst, np.abs(y.y.real).max() / y0)
    record("lossless reciprocal scattering gives imaginary admittance", worst, 1e-10)

    # Scattering completions are unitary and exactly symmetric.
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(2, 9))
        n_s = int(rng.integers(1, n + 1))
        v = unitary_group.rvs(n, random_state=rng)
        u = unitary_group.rvs(n, random_state=rng)
        rep_tx = check_lossless_reciprocal(complete_scattering_tx(v[:, :n_s], v[:, n_s:]))
        rep_rx = check_lossless_reciprocal(complete_scattering_rx(u[:, :n_s], u[:, n_s:]))
        worst = max(worst, rep_tx.unitarity, rep_tx.asymmetry, rep_rx.unitarity, rep_rx.asymmetry)
    record("scattering completions unitary and symmetric", worst, 1e-10)

    # The completion's transfer block is exactly half the target columns.
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(2, 9))
        n_s = int(rng.integers(1, n + 1))
        v = unitary_group.rvs(n, random_state=rng)
        theta = complete_scattering_tx(v[:, :n_s], v[:, n_s:])
        block = transfer_block_from_scattering(theta, PortPartition(n_s, n))
        worst = max(worst, np.abs(block - v[:, :n_s] / 2.0).max())
    record("completion realizes half the target columns", worst, 0.0)

    # Susceptance synthesis agrees with the scattering-derived admittance.
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(2, 9))
        n_s = int(rng.integers(1, n + 1))
        v = unitary_group.rvs(n, random_state=rng) * np.exp(2j * np.pi * rng.random(n))
        u = unitary_group.rvs(n, random_state=rng) * np.exp(2j * np.pi * rng.random(n))
        b_tx = susceptance_tx(v, n_s, y0)
        b_rx = susceptance_rx(u, n_s, y0)
        y_tx = scattering_to_admittance(complete_scattering_tx(v[:, :n_s], v[:, n_s:]), y0)
        y_rx = scattering_to_admittance(complete_scattering_rx(u[:, :n_s], u[:, n_s:]), y0)
        worst = max(
            worst,
            np.abs(b_tx.b - (-1j * y_tx.y).real).max() / y0,
            np.abs(b_rx.b - (-1j * y_rx.y).real).max() / y0,
        )
    record("susceptance matches scattering-derived admittance", worst, 1e-9)

    # The susceptance network, terminated and driven, realizes the target block.
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(2, 9))
        n_s = int(rng.integers(1, n + 1))
        v = unitary_group.rvs(n, random_state=rng) * np.exp(2j * np.pi * rng.random(n))
        b_tx = susceptance_tx(v, n_s, y0)
        f = transfer_block_from_admittance(
            AdmittanceMatrix(1j * b_tx.b), PortPartition(n_s, n), y0
        )
        worst = max(worst, np.abs(f - v[:, :n_s] / 2.0).max())
    record("susceptance network realizes the target transfer block", worst, 1e-8)

    # Water-filling fractions sum to one.
    worst = 0.0
    for _ in range(n_cases):
        n_s = int(rng.integers(1, 9))
        lam = rng.random(n_s) * 10.0
        lam[int(rng.integers(0, n_s))] = lam.max() + 0.1
        alloc = water_filling(lam, 10.0 ** rng.uniform(-1, 2), 1.0)
        worst = max(worst, abs(float(np.sum(alloc.p)) - 1.0))
    record("water-filling fractions sum to one", worst, 1e-12)

    # Water-filling is never beaten by random simplex allocations.
    worst = 0.0
    for _ in range(n_cases):
        n_s = int(rng.integers(2, 9))
        lam = np.linalg.svd(
            (rng.standard_normal((n_s, n_s)) + 1j * rng.standard_normal((n_s, n_s))),
            compute_uv=False,
        )[:n_s] ** 2
        total_power = 10.0 ** rng.uniform(-1, 2)
        alloc = water_filling(lam, total_power, 1.0)
        best = _wf_objective(alloc.p, lam, total_power, 1.0)
        for _ in range(100):
            q = rng.dirichlet(np.ones(n_s))
            worst = max(worst, _wf_objective(q, lam, total_power, 1.0) - best)
    record("water-filling never beaten by random allocations", worst, 1e-12)

    # Full chain: analog rate through the circuit equals closed-form capacity,
    # and the digital benchmark agrees too.
    worst = 0.0
    for case in range(n_cases):
        n = int(rng.integers(2, 7))
        n_s = int(rng.integers(1, n + 1))
        ensemble = ChannelEnsembleSpec(
            n_rx=n, n_tx=n, n_trials=1, master_seed=int(rng.integers(0, 2**63))
        )
        h = rayleigh_channel(ensemble, 0)
        config = SystemConfig(
            n_streams=n_s,
            n_tx=n,
            n_rx=n,
            tx_power=snr_db_to_tx_power(float(rng.uniform(-10, 20)), 1.0),
            noise_power=1.0,
        )
        report = _trial_with_retries(h, config, ensemble.master_seed, 0)
        worst = max(
            worst,
            abs(report.milac_rate - report.capacity) / report.capacity,
            abs(report.digital_rate - report.capacity) / report.capacity,
        )
    record("analog and digital rates achieve closed-form capacity", worst, 1e-9)

    return tuple(rows)
