"""Multiport network descriptions and conversions for analog beamforming circuits.

A beamforming circuit is modelled as an N-port network of tunable
susceptances.  Three equivalent descriptions are used throughout:

* the admittance matrix Y (complex, N x N),
* the scattering matrix S relative to a real reference admittance y0,
* for lossless reciprocal networks, the real symmetric susceptance
  matrix B with Y = jB.

The conversions are the standard ones,

    S = (y0 I + Y)^-1 (y0 I - Y),        Y = y0 (2 (S + I)^-1 - I),

and the input-to-output transfer block of a network driven by matched
sources and terminated in matched loads is a sub-block of (Y/y0 + I)^-1,
equivalently of (S + I)/2.

Port convention: on the transmit side the signal (symbol) ports come
first and the antenna ports last; on the receive side the antenna ports
come first and the symbol ports last.  In both cases the ports driven by
sources are the "inputs" of a PortPartition and the ports feeding loads
are the "outputs", so a single slicing rule covers both sides.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (
    DimensionMismatchError,
    NotUnitaryInputError,
    SingularImaginaryPartError,
    SingularMatrixError,
)

# Reference admittance of a 50 ohm system, in siemens.
DEFAULT_REF_ADMITTANCE = 1.0 / 50.0

# Condition-number cap above which a linear solve is treated as singular.
DEFAULT_COND_CAP = 1e12

# Max-abs tolerance for unitarity / symmetry checks of scattering matrices.
DEFAULT_UNITARY_TOL = 1e-10

# Relative symmetry tolerance accepted when constructing a SusceptanceMatrix.
DEFAULT_SYMMETRY_TOL = 1e-9

# Im{V} counts as singular when its smallest singular value falls below
# this fraction of its spectral norm.
DEFAULT_IMAG_SV_REL = 1e-8


def _as_square_complex(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    return np.array(a, dtype=complex)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AdmittanceMatrix:
    """Admittance parameters of an n-port network (complex, square)."""

    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen(_as_square_complex(self.y, "admittance matrix")))

    @property
    def n_ports(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True, eq=False)
class ScatteringMatrix:
    """Scattering parameters of an n-port network (complex, square).

    For a lossless reciprocal network the matrix is unitary and symmetric;
    use check_lossless_reciprocal to verify both properties.
    """

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _frozen(_as_square_complex(self.theta, "scattering matrix")))

    @property
    def n_ports(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True, eq=False)
class SusceptanceMatrix:
    """Real symmetric susceptance matrix B of a lossless reciprocal network (Y = jB)."""

    b: np.ndarray
    symmetry_tol: float = DEFAULT_SYMMETRY_TOL

    def __post_init__(self):
        b = np.asarray(self.b)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise DimensionMismatchError(f"susceptance matrix must be square, got shape {b.shape}")
        if np.iscomplexobj(b):
            if np.abs(b.imag).max(initial=0.0) != 0.0:
                raise ValueError("susceptance matrix must be real valued")
            b = b.real
        b = np.array(b, dtype=float)
        if not np.all(np.isfinite(b)):
            raise ValueError("susceptance matrix contains non-finite entries")
        scale = np.abs(b).max(initial=0.0)
        asym = np.abs(b - b.T).max(initial=0.0)
        if asym > self.symmetry_tol * max(scale, 1.0):
            raise ValueError(f"susceptance matrix asymmetry {asym:.3e} exceeds tolerance")
        object.__setattr__(self, "b", _frozen(b))

    @property
    def n_ports(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class PortPartition:
    """Split of a network's ports into source-driven inputs and load-terminated outputs.

    On the transmit side the inputs are the symbol ports (first) and the
    outputs are the antenna ports (last); on the receive side the inputs are
    the antenna ports (first) and the outputs the symbol ports (last).
    """

    n_inputs: int
    n_outputs: int

    def __post_init__(self):
        if self.n_inputs < 1 or self.n_outputs < 1:
            raise ValueError("port partition needs at least one input and one output port")

    @property
    def n_ports(self) -> int:
        return self.n_inputs + self.n_outputs


@dataclass(frozen=True)
class LosslessReciprocalReport:
    """Residuals of the lossless (unitary) and reciprocal (symmetric) checks."""

    unitarity: float
    asymmetry: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.unitarity <= self.tol and self.asymmetry <= self.tol


def _solve_checked(a: np.ndarray, rhs: np.ndarray, cond_cap: float, context: str) -> np.ndarray:
    """LU solve of a x = rhs that rejects matrices beyond the condition cap."""
    a = np.ascontiguousarray(a, dtype=complex)
    anorm = np.linalg.norm(a, 1)
    try:
        with warnings.catch_warnings():
            # An exactly singular factor is reported through the rcond check
            # below; the interim warning would only add noise.
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    except (ValueError, scipy.linalg.LinAlgError) as exc:
        raise SingularMatrixError(f"{context}: LU factorization failed ({exc})") from exc
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu,))
    rcond, _ = gecon(lu, anorm)
    if not np.isfinite(rcond) or rcond * cond_cap < 1.0:
        est = np.inf if rcond == 0 else 1.0 / rcond
        raise SingularMatrixError(
            f"{context}: condition estimate {est:.3e} exceeds cap {cond_cap:.3e}"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def _mirror_upper(b: np.ndarray) -> np.ndarray:
    """Exact symmetrization: reflect the upper triangle onto the lower one."""
    return np.triu(b) + np.triu(b, 1).T


def admittance_to_scattering(
    y: AdmittanceMatrix,
    y0: float = DEFAULT_REF_ADMITTANCE,
    cond_cap: float = DEFAULT_COND_CAP,
) -> ScatteringMatrix:
    """Convert admittance parameters to scattering parameters.

    Args:
        y: admittance matrix of the network.
        y0: real positive reference admittance in siemens.
        cond_cap: condition-number cap for the internal solve.

    Returns:
        ScatteringMatrix with theta = (y0 I + Y)^-1 (y0 I - Y).

    Raises:
        SingularMatrixError: if y0 I + Y is singular or too ill-conditioned.
    """
    if y0 <= 0:
        raise ValueError("reference admittance must be positive")
    eye = np.eye(y.n_ports)
    theta = _solve_checked(y0 * eye + y.y, y0 * eye - y.y, cond_cap, "admittance_to_scattering")
    return ScatteringMatrix(theta)


def scattering_to_admittance(
    theta: ScatteringMatrix,
    y0: float = DEFAULT_REF_ADMITTANCE,
    cond_cap: float = DEFAULT_COND_CAP,
) -> AdmittanceMatrix:
    """Convert scattering parameters back to admittance parameters.

    Computes Y = y0 (2 (S + I)^-1 - I), the inverse of
    admittance_to_scattering.

    Raises:
        SingularMatrixError: if S + I is singular (an eigenvalue of S is -1),
            which corresponds to a network with no admittance description.
    """
    if y0 <= 0:
        raise ValueError("reference admittance must be positive")
    eye = np.eye(theta.n_ports)
    inv = _solve_checked(theta.theta + eye, eye, cond_cap, "scattering_to_admittance")
    return AdmittanceMatrix(y0 * (2.0 * inv - eye))


def transfer_block_from_admittance(
    y: AdmittanceMatrix,
    partition: PortPartition,
    y0: float = DEFAULT_REF_ADMITTANCE,
    cond_cap: float = DEFAULT_COND_CAP,
) -> np.ndarray:
    """Input-to-output voltage transfer block of a terminated network.

    With every port fed through (inputs) or loaded by (outputs) the reference
    admittance, the transfer from input-port source amplitudes to output-port
    voltages is the lower-left block of (Y/y0 + I)^-1: rows at the output
    ports, columns at the input ports.

    Args:
        y: admittance matrix of the full network.
        partition: port split; inputs come first in the port ordering.
        y0: reference admittance in siemens.
        cond_cap: condition-number cap for the internal solve.

    Returns:
        Complex (n_outputs x n_inputs) transfer block.
    """
    if y0 <= 0:
        raise ValueError("reference admittance must be positive")
    if partition.n_ports != y.n_ports:
        raise DimensionMismatchError(
            f"partition covers {partition.n_ports} ports, network has {y.n_ports}"
        )
    n = y.n_ports
    rhs = np.eye(n)[:, : partition.n_inputs]
    x = _solve_checked(y.y / y0 + np.eye(n), rhs, cond_cap, "transfer_block_from_admittance")
    return np.array(x[partition.n_inputs :, :])


def transfer_block_from_scattering(theta: ScatteringMatrix, partition: PortPartition) -> np.ndarray:
    """Transfer block computed from scattering parameters: (1/2) S[outputs, inputs].

    Equivalent to transfer_block_from_admittance on the corresponding
    admittance matrix, but with no linear solve involved.
    """
    if partition.n_ports != theta.n_ports:
        raise DimensionMismatchError(
            f"partition covers {partition.n_ports} ports, network has {theta.n_ports}"
        )
    return 0.5 * np.array(theta.theta[partition.n_inputs :, : partition.n_inputs])


def check_lossless_reciprocal(
    theta: ScatteringMatrix, tol: float = DEFAULT_UNITARY_TOL
) -> LosslessReciprocalReport:
    """Measure how far a scattering matrix is from lossless and reciprocal.

    Returns:
        LosslessReciprocalReport with unitarity = max |S^H S - I| and
        asymmetry = max |S - S^T|; the report passes iff both residuals
        are within tol.
    """
    t = theta.theta
    eye = np.eye(theta.n_ports)
    unitarity = float(np.abs(t.conj().T @ t - eye).max(initial=0.0))
    asymmetry = float(np.abs(t - t.T).max(initial=0.0))
    return LosslessReciprocalReport(unitarity=unitarity, asymmetry=asymmetry, tol=tol)


def _check_unitary(q: np.ndarray, tol: float, context: str) -> None:
    resid = np.abs(q.conj().T @ q - np.eye(q.shape[1])).max(initial=0.0)
    if resid > tol:
        raise NotUnitaryInputError(f"{context}: unitarity residual {resid:.3e} exceeds {tol:.3e}")


def complete_scattering_tx(
    v_bar, v_tilde, unitary_tol: float = DEFAULT_UNITARY_TOL
) -> ScatteringMatrix:
    """Lossless reciprocal scattering completion for the transmit-side network.

    Given the split [v_bar, v_tilde] of a unitary matrix into the columns to
    be realized as the symbol-to-antenna transfer (v_bar) and the remaining
    orthonormal columns (v_tilde), builds the scattering matrix

        [[0,      v_bar^T        ],
         [v_bar,  -v_tilde v_tilde^T]]

    which is unitary, exactly symmetric, and realizes v_bar / 2 as its
    input-to-output transfer block.

    Args:
        v_bar: complex (n_antennas x n_streams) column block.
        v_tilde: complex (n_antennas x (n_antennas - n_streams)) completion
            columns; may have zero columns when n_streams == n_antennas.
        unitary_tol: max-abs tolerance on [v_bar, v_tilde] being unitary.

    Raises:
        NotUnitaryInputError: if the stacked matrix is not unitary within tol.
        DimensionMismatchError: if the blocks do not stack to a square matrix.
    """
    v_bar = np.asarray(v_bar, dtype=complex)
    v_tilde = np.asarray(v_tilde, dtype=complex)
    if v_bar.ndim != 2 or v_tilde.ndim != 2 or v_bar.shape[0] != v_tilde.shape[0]:
        raise DimensionMismatchError("v_bar and v_tilde must share their row count")
    n = v_bar.shape[0]
    n_s = v_bar.shape[1]
    if n_s < 1 or n_s + v_tilde.shape[1] != n:
        raise DimensionMismatchError(
            f"column blocks ({n_s} + {v_tilde.shape[1]}) must fill a square {n} x {n} matrix"
        )
    _check_unitary(np.hstack([v_bar, v_tilde]), unitary_tol, "complete_scattering_tx")
    theta = np.zeros((n + n_s, n + n_s), dtype=complex)
    theta[:n_s, n_s:] = v_bar.T
    theta[n_s:, :n_s] = v_bar
    theta[n_s:, n_s:] = -(v_tilde @ v_tilde.T)
    return ScatteringMatrix(_mirror_upper(theta))


def complete_scattering_rx(
    u_bar, u_tilde, unitary_tol: float = DEFAULT_UNITARY_TOL
) -> ScatteringMatrix:
    """Lossless reciprocal scattering completion for the receive-side network.

    Given the split [u_bar, u_tilde] of a unitary matrix, builds

        [[-conj(u_tilde) u_tilde^H,  conj(u_bar)],
         [u_bar^H,                   0          ]]

    which is unitary, exactly symmetric, and realizes u_bar^H / 2 as its
    antenna-to-symbol transfer block.
    """
    u_bar = np.asarray(u_bar, dtype=complex)
    u_tilde = np.asarray(u_tilde, dtype=complex)
    if u_bar.ndim != 2 or u_tilde.ndim != 2 or u_bar.shape[0] != u_tilde.shape[0]:
        raise DimensionMismatchError("u_bar and u_tilde must share their row count")
    n = u_bar.shape[0]
    n_s = u_bar.shape[1]
    if n_s < 1 or n_s + u_tilde.shape[1] != n:
        raise DimensionMismatchError(
            f"column blocks ({n_s} + {u_tilde.shape[1]}) must fill a square {n} x {n} matrix"
        )
    _check_unitary(np.hstack([u_bar, u_tilde]), unitary_tol, "complete_scattering_rx")
    theta = np.zeros((n + n_s, n + n_s), dtype=complex)
    theta[:n, :n] = -(np.conj(u_tilde) @ np.conj(u_tilde).T)
    theta[:n, n:] = np.conj(u_bar)
    theta[n:, :n] = np.conj(u_bar).T
    return ScatteringMatrix(_mirror_upper(theta))


def _imag_part_inverse(m: np.ndarray, rel_tol: float, context: str) -> np.ndarray:
    """Invert the imaginary part of a unitary factor, rejecting near-singular cases."""
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= rel_tol * sv[0]:
        raise SingularImaginaryPartError(
            f"{context}: smallest singular value {sv[-1]:.3e} is below "
            f"{rel_tol:.1e} of the spectral norm {sv[0]:.3e}"
        )
    return np.linalg.solve(m, np.eye(m.shape[0]))


def susceptance_tx(
    v,
    n_streams: int,
    y0: float = DEFAULT_REF_ADMITTANCE,
    singular_rel_tol: float = DEFAULT_IMAG_SV_REL,
) -> SusceptanceMatrix:
    """Susceptance matrix of the transmit-side network realizing v_bar / 2.

    Closed-form synthesis from a unitary matrix v whose first n_streams
    columns are the target symbol-to-antenna transfer (up to the factor 1/2).
    Writing R = Re{v} and M = Im{v}, the susceptance matrix is

        y0 * [[ (M^-1 R)[:s, :s],  -(M^-1)[:s, :] ],
              [ -(M^-1)[:s, :]^T,   R M^-1        ]]

    with s = n_streams.  The result is exactly symmetric by construction.

    Args:
        v: complex unitary (n_antennas x n_antennas) matrix.
        n_streams: number of symbol ports (first columns of v realized).
        y0: reference admittance in siemens.
        singular_rel_tol: relative threshold under which Im{v} counts as singular.

    Raises:
        SingularImaginaryPartError: if Im{v} is singular at the threshold;
            rotate the columns of v by nonreal phases and retry.
    """
    v = _as_square_complex(v, "unitary factor")
    n = v.shape[0]
    if not 1 <= n_streams <= n:
        raise DimensionMismatchError(f"n_streams {n_streams} out of range for {n} antennas")
    if y0 <= 0:
        raise ValueError("reference admittance must be positive")
    minv = _imag_part_inverse(v.imag, singular_rel_tol, "susceptance_tx")
    r = v.real
    b = np.empty((n + n_streams, n + n_streams))
    b[:n_streams, :n_streams] = (minv @ r)[:n_streams, :n_streams]
    b[:n_streams, n_streams:] = -minv[:n_streams, :]
    b[n_streams:, :n_streams] = -minv[:n_streams, :].T
    b[n_streams:, n_streams:] = r @ minv
    return SusceptanceMatrix(_mirror_upper(y0 * b))


def susceptance_rx(
    u,
    n_streams: int,
    y0: float = DEFAULT_REF_ADMITTANCE,
    singular_rel_tol: float = DEFAULT_IMAG_SV_REL,
) -> SusceptanceMatrix:
    """Susceptance matrix of the receive-side network realizing u_bar^H / 2.

    Counterpart of susceptance_tx with the antenna ports first and the symbol
    ports last.  Writing R = Re{u} and M = Im{u}:

        y0 * [[ -R M^-1,          (M^-1)[:s, :]^T   ],
              [ (M^-1)[:s, :],    -(M^-1 R)[:s, :s] ]]

    with s = n_streams.  The result is exactly symmetric by construction.
    """
    u = _as_square_complex(u, "unitary factor")
    n = u.shape[0]
    if not 1 <= n_streams <= n:
        raise DimensionMismatchError(f"n_streams {n_streams} out of range for {n} antennas")
    if y0 <= 0:
        raise ValueError("reference admittance must be positive")
    minv = _imag_part_inverse(u.imag, singular_rel_tol, "susceptance_rx")
    r = u.real
    b = np.empty((n + n_streams, n + n_streams))
    b[:n, :n] = -(r @ minv)
    b[:n, n:] = minv[:n_streams, :].T
    b[n:, :n] = minv[:n_streams, :]
    b[n:, n:] = -(minv @ r)[:n_streams, :n_streams]
    return SusceptanceMatrix(_mirror_upper(y0 * b))


def dump_matrix_csv(matrix, path) -> None:
    """Write a matrix to CSV with each entry as a re,im pair of columns."""
    arr = np.atleast_2d(np.asarray(matrix, dtype=complex))
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(",".join(f"{z.real:.17e},{z.imag:.17e}" for z in row))
            fh.write("\n")
