"""Closed-form globally optimal beamforming designs for point-to-point MIMO links.

Given a channel matrix H with singular value decomposition H = U S V^H,
the transmit network realizes the leading right singular vectors (scaled
by 1/2) and the receive network the conjugated leading left singular
vectors, so that the cascade diagonalizes the channel.  Power is then
water-filled over the per-stream channel eigenvalues.  The resulting
link rate equals the water-filling capacity of the matched digital
benchmark, which is also computed here in closed form.

The factor 4 that appears in the rate expressions is the two-sided
insertion loss of source and load voltage division (amplitude 1/2 at
each side); it cancels out of none of the formulas and is kept explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    AllZeroEigenvaluesError,
    DimensionMismatchError,
    NonFiniteInputError,
    PhaseSearchExhaustedError,
    ZeroCombinerRowError,
)
from .network import (
    DEFAULT_IMAG_SV_REL,
    DEFAULT_REF_ADMITTANCE,
    SusceptanceMatrix,
    susceptance_rx,
    susceptance_tx,
)

# Two-sided matched source/load voltage division factor in the rate formulas.
DEFAULT_QUARTER_FACTOR = 4.0

# Attempt budget of the random phase search in ensure_invertible_imag.
DEFAULT_PHASE_ATTEMPTS = 32

# Internal consistency tolerance between the raw and row-normalized rate forms.
RATE_FORM_CHECK_TOL = 1e-12


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of one point-to-point link.

    Attributes:
        n_streams: number of spatial streams (symbol ports per side).
        n_tx: transmit antenna count.
        n_rx: receive antenna count.
        tx_power: total transmit power constraint, linear scale.
        noise_power: per-antenna noise power, linear scale.
        ref_admittance: reference admittance of the beamforming networks.
    """

    n_streams: int
    n_tx: int
    n_rx: int
    tx_power: float
    noise_power: float
    ref_admittance: float = DEFAULT_REF_ADMITTANCE

    def __post_init__(self):
        if self.n_streams < 1 or self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("stream and antenna counts must be at least 1")
        if self.n_streams > min(self.n_tx, self.n_rx):
            raise ValueError(
                f"n_streams={self.n_streams} exceeds min(n_tx, n_rx)="
                f"{min(self.n_tx, self.n_rx)}"
            )
        if not (self.tx_power > 0 and np.isfinite(self.tx_power)):
            raise ValueError("tx_power must be positive and finite")
        if not (self.noise_power > 0 and np.isfinite(self.noise_power)):
            raise ValueError("noise_power must be positive and finite")
        if not (self.ref_admittance > 0 and np.isfinite(self.ref_admittance)):
            raise ValueError("ref_admittance must be positive and finite")


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Full singular value decomposition H = u diag(sigma) v^H (ordered).

    u is n_rx x n_rx, v is n_tx x n_tx, sigma holds min(n_rx, n_tx)
    singular values in descending order.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        v = np.asarray(self.v, dtype=complex)
        sigma = np.asarray(self.sigma, dtype=float)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise DimensionMismatchError("u must be square")
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionMismatchError("v must be square")
        if sigma.ndim != 1 or sigma.shape[0] != min(u.shape[0], v.shape[0]):
            raise DimensionMismatchError("sigma must hold min(n_rx, n_tx) values")
        if np.any(sigma < 0) or np.any(np.diff(sigma) > 0):
            raise ValueError("singular values must be nonnegative and descending")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "sigma", sigma)

    def reconstruct(self) -> np.ndarray:
        """Rebuild the channel matrix from the factors."""
        k = self.sigma.shape[0]
        return (self.u[:, :k] * self.sigma) @ self.v[:, :k].conj().T


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-stream power fractions (summing to one) and the water level."""

    p: np.ndarray
    water_level: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1:
            raise DimensionMismatchError("power allocation must be a vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("stream powers must be nonnegative and finite")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True, eq=False)
class RateReport:
    """Per-trial record of the analog rate, digital benchmark, and capacity."""

    milac_rate: float
    digital_rate: float
    capacity: float
    allocation: PowerAllocation
    per_stream_sinr: np.ndarray


def svd_ordered(h) -> SvdFactors:
    """Full SVD with descending singular values and a fixed phase convention.

    Each column of v is rotated so that its largest-modulus entry is real
    and positive; the paired column of u gets the same rotation, which
    leaves the reconstruction u diag(sigma) v^H unchanged.  Trailing
    null-space columns of u are phase-fixed independently by the same rule.

    Raises:
        NonFiniteInputError: if h contains NaN or infinite entries.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2:
        raise DimensionMismatchError(f"channel matrix must be 2-D, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise NonFiniteInputError("channel matrix contains NaN or infinite entries")
    u, sigma, vh = np.linalg.svd(h, full_matrices=True)
    v = vh.conj().T
    k = sigma.shape[0]
    v, phases = _phase_fix_columns(v)
    u[:, :k] = u[:, :k] * phases[:k].conj()
    if u.shape[1] > k:
        u_tail, _ = _phase_fix_columns(u[:, k:])
        u = np.hstack([u[:, :k], u_tail])
    return SvdFactors(u=u, sigma=sigma, v=v)


def _phase_fix_columns(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotate each column so its largest-modulus entry is real positive."""
    pivots = np.argmax(np.abs(q), axis=0)
    cols = np.arange(q.shape[1])
    entries = q[pivots, cols]
    mags = np.abs(entries)
    phases = np.where(mags > 0, entries / np.where(mags > 0, mags, 1.0), 1.0)
    return q * phases.conj(), phases


def _min_rel_singular(m: np.ndarray) -> float:
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0:
        return 0.0
    return float(sv[-1] / sv[0])


def ensure_invertible_imag(
    factors: SvdFactors,
    n_streams: int,
    rng_seed,
    singular_rel_tol: float = DEFAULT_IMAG_SV_REL,
    max_attempts: int = DEFAULT_PHASE_ATTEMPTS,
) -> SvdFactors:
    """Phase-rotate SVD factors until Im{v} and Im{u} are safely invertible.

    The susceptance synthesis needs the imaginary parts of both unitary
    factors to be invertible.  Factors that already satisfy the threshold
    are returned unchanged.  Otherwise random common phases are applied to
    the paired columns of u and v (preserving the reconstruction) plus
    independent phases to trailing null-space columns, retrying with fresh
    draws up to max_attempts times.

    Args:
        factors: decomposition to repair.
        n_streams: stream count of the design the factors will feed.
        rng_seed: seed for the deterministic phase draws.
        singular_rel_tol: relative singular-value threshold to exceed.
        max_attempts: bound on the number of random draws.

    Raises:
        PhaseSearchExhaustedError: if no draw satisfies the threshold.
    """
    if not 1 <= n_streams <= min(factors.u.shape[0], factors.v.shape[0]):
        raise DimensionMismatchError(f"n_streams {n_streams} out of range for these factors")

    def ok(m: np.ndarray) -> bool:
        return _min_rel_singular(m) > singular_rel_tol

    if ok(factors.v.imag) and ok(factors.u.imag):
        return factors

    rng = np.random.default_rng(rng_seed)
    k = factors.sigma.shape[0]
    n_t = factors.v.shape[0]
    n_r = factors.u.shape[0]
    for _ in range(max_attempts):
        phase_v = np.exp(2j * np.pi * rng.random(n_t))
        tail = np.exp(2j * np.pi * rng.random(n_r - k)) if n_r > k else np.empty(0, complex)
        phase_u = np.concatenate([phase_v[:k], tail])
        v = factors.v * phase_v
        u = factors.u * phase_u
        if ok(v.imag) and ok(u.imag):
            return SvdFactors(u=u, sigma=factors.sigma, v=v)
    raise PhaseSearchExhaustedError(
        f"no phase rotation reached threshold {singular_rel_tol:.1e} "
        f"within {max_attempts} attempts"
    )


def water_filling(
    eigenvalues,
    total_power: float,
    noise_power: float,
    quarter_factor: float = DEFAULT_QUARTER_FACTOR,
) -> PowerAllocation:
    """Water-filling power fractions over per-stream channel eigenvalues.

    Solves max sum_s log2(1 + total_power * p_s * lam_s / (quarter_factor *
    noise_power)) subject to sum p_s = 1, p_s >= 0, by the exact sort-based
    active-set method: with floors a_s = quarter_factor * noise_power /
    (total_power * lam_s), the water level is mu = (1 + sum of active
    floors) / |active set|, and p_s = max(0, mu - a_s).

    Args:
        eigenvalues: nonnegative per-stream channel eigenvalues.
        total_power: total transmit power, linear scale.
        noise_power: noise power, linear scale.
        quarter_factor: insertion factor in the effective SNR.

    Returns:
        PowerAllocation with fractions summing to one.

    Raises:
        AllZeroEigenvaluesError: if every eigenvalue is zero.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.shape[0] < 1:
        raise DimensionMismatchError("eigenvalues must form a nonempty vector")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalues must be nonnegative and finite")
    if total_power <= 0 or noise_power <= 0 or quarter_factor <= 0:
        raise ValueError("powers and quarter_factor must be positive")
    if not np.any(lam > 0):
        raise AllZeroEigenvaluesError("all channel eigenvalues are zero")

    with np.errstate(divide="ignore"):
        floors = np.where(lam > 0, quarter_factor * noise_power / (total_power * lam), np.inf)
    order = np.argsort(floors, kind="stable")
    sorted_floors = floors[order]
    n_finite = int(np.sum(np.isfinite(sorted_floors)))
    csum = np.cumsum(sorted_floors[:n_finite])
    water_level = None
    for m in range(n_finite, 0, -1):
        candidate = (1.0 + csum[m - 1]) / m
        if candidate > sorted_floors[m - 1]:
            water_level = candidate
            break
    # m = 1 always qualifies: (1 + a_min) / 1 > a_min.
    p = np.maximum(0.0, water_level - floors)
    return PowerAllocation(p=p, water_level=float(water_level))


def capacity_closed_form(
    eigenvalues,
    allocation: PowerAllocation,
    total_power: float,
    noise_power: float,
    quarter_factor: float = DEFAULT_QUARTER_FACTOR,
) -> float:
    """Closed-form rate sum_s log2(1 + total_power p_s lam_s / (quarter_factor noise_power)).

    With the water-filling allocation this is the capacity of the link under
    the matched-circuit insertion factor.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    p = allocation.p
    if lam.shape != p.shape:
        raise DimensionMismatchError(
            f"eigenvalues {lam.shape} and allocation {p.shape} differ in length"
        )
    snr = total_power * p * lam / (quarter_factor * noise_power)
    return float(np.sum(np.log1p(snr)) / np.log(2.0))


def milac_rate(
    g,
    h,
    f,
    allocation: PowerAllocation,
    total_power: float,
    noise_power: float,
) -> tuple[float, np.ndarray]:
    """Achievable rate of an analog design through its effective channel G H F.

    Per stream s, with E = G H F,

        sinr_s = P p_s |E[s,s]|^2 /
                 (P sum_{t != s} p_t |E[s,t]|^2 + ||G[s,:]||^2 noise_power)

    and the rate is sum_s log2(1 + sinr_s).  The same value is recomputed
    with every row of G normalized to unit norm (noise scaling absorbed into
    the row) and both forms are required to agree, which guards the
    implementation against inconsistent normalization.

    Args:
        g: receive combining block (n_streams x n_rx).
        h: channel matrix (n_rx x n_tx).
        f: transmit precoding block (n_tx x n_streams).
        allocation: per-stream power fractions.
        total_power: total transmit power, linear scale.
        noise_power: per-antenna noise power, linear scale.

    Returns:
        Tuple of (rate in bits per channel use, per-stream SINR vector).

    Raises:
        ZeroCombinerRowError: if a row of g is identically zero.
        DimensionMismatchError: if the operand shapes are inconsistent.
    """
    g = np.asarray(g, dtype=complex)
    h = np.asarray(h, dtype=complex)
    f = np.asarray(f, dtype=complex)
    p = allocation.p
    n_streams = p.shape[0]
    if g.shape[0] != n_streams or f.shape[1] != n_streams:
        raise DimensionMismatchError("g rows and f columns must match the stream count")
    if g.shape[1] != h.shape[0] or h.shape[1] != f.shape[0]:
        raise DimensionMismatchError(
            f"incompatible shapes g {g.shape}, h {h.shape}, f {f.shape}"
        )
    row_power = np.sum(np.abs(g) ** 2, axis=1)
    if np.any(row_power == 0.0):
        raise ZeroCombinerRowError("a combining row of g is identically zero")

    effective = g @ h @ f
    sinr = _per_stream_sinr(effective, row_power, p, total_power, noise_power)
    rate = float(np.sum(np.log1p(sinr)) / np.log(2.0))

    # Row-normalized form: divide each combining row by its norm, which scales
    # the noise identically; the rate must not change.
    normalized = effective / np.sqrt(row_power)[:, None]
    sinr_norm = _per_stream_sinr(normalized, np.ones(n_streams), p, total_power, noise_power)
    rate_norm = float(np.sum(np.log1p(sinr_norm)) / np.log(2.0))
    assert abs(rate - rate_norm) <= RATE_FORM_CHECK_TOL * max(1.0, abs(rate)), (
        f"rate forms disagree: {rate!r} vs {rate_norm!r}"
    )
    return rate, sinr


def _per_stream_sinr(effective, row_power, p, total_power, noise_power) -> np.ndarray:
    """SINR vector for an effective channel and combining row powers."""
    abs_sq = np.abs(effective) ** 2
    signal = total_power * p * np.diag(abs_sq)
    interference = total_power * (abs_sq @ p) - signal
    denom = interference + row_power * noise_power
    # Guard the exactly-diagonalized zero-noise corner against 0/0.
    denom = np.maximum(denom, 1e-300)
    return signal / denom


def design_milac(
    h,
    config: SystemConfig,
    rng_seed,
) -> tuple[SusceptanceMatrix, SusceptanceMatrix, PowerAllocation]:
    """Globally optimal transmit/receive susceptance design for a channel.

    Pipeline: ordered SVD of the channel, phase repair so both unitary
    factors have invertible imaginary parts, water-filling over the leading
    n_streams eigenvalues, then closed-form susceptance synthesis on each
    side.

    Args:
        h: channel matrix (n_rx x n_tx) matching config.
        config: link parameters.
        rng_seed: seed for the deterministic phase repair.

    Returns:
        Tuple (transmit susceptance, receive susceptance, power allocation).
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (config.n_rx, config.n_tx):
        raise DimensionMismatchError(
            f"channel shape {h.shape} does not match config ({config.n_rx}, {config.n_tx})"
        )
    factors = svd_ordered(h)
    factors = ensure_invertible_imag(factors, config.n_streams, rng_seed)
    lam = factors.sigma[: config.n_streams] ** 2
    allocation = water_filling(lam, config.tx_power, config.noise_power)
    b_tx = susceptance_tx(factors.v, config.n_streams, config.ref_admittance)
    b_rx = susceptance_rx(factors.u, config.n_streams, config.ref_admittance)
    return b_tx, b_rx, allocation


def digital_design_and_rate(h, config: SystemConfig) -> tuple[np.ndarray, float]:
    """Optimal fully digital precoder and its achievable rate.

    The precoder is W = v_bar diag(sqrt(p)) with p the water-filling
    fractions, so ||W||_F^2 = 1.  The rate is

        log2 det(I + total_power / (quarter_factor * noise_power) * H W W^H H^H)

    evaluated on the n_streams x n_streams Gram form via a Cholesky
    factorization.

    Returns:
        Tuple (precoder W of shape (n_tx, n_streams), rate in bits per
        channel use).
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (config.n_rx, config.n_tx):
        raise DimensionMismatchError(
            f"channel shape {h.shape} does not match config ({config.n_rx}, {config.n_tx})"
        )
    factors = svd_ordered(h)
    lam = factors.sigma[: config.n_streams] ** 2
    allocation = water_filling(lam, config.tx_power, config.noise_power)
    w = factors.v[:, : config.n_streams] * np.sqrt(allocation.p)
    a = h @ w
    scale = config.tx_power / (DEFAULT_QUARTER_FACTOR * config.noise_power)
    gram = np.eye(config.n_streams) + scale * (a.conj().T @ a)
    chol = np.linalg.cholesky(gram)
    rate = float(2.0 * np.sum(np.log2(np.real(np.diag(chol)))))
    return w, rate
