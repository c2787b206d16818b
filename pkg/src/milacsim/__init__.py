"""milacsim: closed-form design and simulation of lossless reciprocal
analog beamforming networks for point-to-point MIMO links."""

from .beamforming import (
    PowerAllocation,
    RateReport,
    SvdFactors,
    SystemConfig,
    capacity_closed_form,
    design_milac,
    digital_design_and_rate,
    ensure_invertible_imag,
    milac_rate,
    svd_ordered,
    water_filling,
)
from .channel import ChannelEnsembleSpec, rayleigh_channel
from .exceptions import (
    AllZeroEigenvaluesError,
    DimensionMismatchError,
    MilacError,
    NonFiniteInputError,
    NotUnitaryInputError,
    PhaseSearchExhaustedError,
    SingularImaginaryPartError,
    SingularMatrixError,
    TrialIndexError,
    ZeroCombinerRowError,
)
from .harness import (
    CSV_HEADER,
    SWEEP_MODES,
    WORKERS_ENV_VAR,
    SweepResult,
    SweepRow,
    SweepSpec,
    VerificationRow,
    run_sweep,
    run_trial,
    run_verification,
    snr_db_to_tx_power,
    write_csv,
    write_manifest,
)
from .network import (
    AdmittanceMatrix,
    LosslessReciprocalReport,
    PortPartition,
    ScatteringMatrix,
    SusceptanceMatrix,
    admittance_to_scattering,
    check_lossless_reciprocal,
    complete_scattering_rx,
    complete_scattering_tx,
    dump_matrix_csv,
    scattering_to_admittance,
    susceptance_rx,
    susceptance_tx,
    transfer_block_from_admittance,
    transfer_block_from_scattering,
)

__version__ = "0.1.0"

__all__ = [
    "AdmittanceMatrix",
    "AllZeroEigenvaluesError",
    "CSV_HEADER",
    "ChannelEnsembleSpec",
    "DimensionMismatchError",
    "LosslessReciprocalReport",
    "MilacError",
    "NonFiniteInputError",
    "NotUnitaryInputError",
    "PhaseSearchExhaustedError",
    "PortPartition",
    "PowerAllocation",
    "RateReport",
    "ScatteringMatrix",
    "SWEEP_MODES",
    "SingularImaginaryPartError",
    "SingularMatrixError",
    "SusceptanceMatrix",
    "SvdFactors",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "SystemConfig",
    "TrialIndexError",
    "VerificationRow",
    "WORKERS_ENV_VAR",
    "ZeroCombinerRowError",
    "admittance_to_scattering",
    "capacity_closed_form",
    "check_lossless_reciprocal",
    "complete_scattering_rx",
    "complete_scattering_tx",
    "design_milac",
    "digital_design_and_rate",
    "dump_matrix_csv",
    "ensure_invertible_imag",
    "milac_rate",
    "rayleigh_channel",
    "run_sweep",
    "run_trial",
    "run_verification",
    "scattering_to_admittance",
    "snr_db_to_tx_power",
    "susceptance_rx",
    "susceptance_tx",
    "svd_ordered",
    "transfer_block_from_admittance",
    "transfer_block_from_scattering",
    "water_filling",
    "write_csv",
    "write_manifest",
]
