"""Continuous-variable teleportation lab.

Gaussian-state simulation of coherent-state teleportation: single hops,
sequential chains with noise budgets and fidelity laws, entanglement
swapping, and homodyne tomography with inverse-Radon reconstruction.
"""

from .states import (
    PHYSICALITY_SLACK,
    VACUUM_VARIANCE,
    GaussianState,
    HomodyneSample,
    SqueezerSpec,
    beam_splitter,
    canonical_phase,
    db_to_variance,
    displace,
    homodyne_condition,
    homodyne_sample,
    make_coherent,
    make_squeezed,
    make_vacuum,
    overlap_with_coherent,
    partial_trace,
    quadrature_marginal,
    rotate,
    symplectic_form,
    tensor,
    variance_to_db,
    wigner_analytic,
)
from .teleport import (
    AddedNoise,
    BellOutcome,
    ShotEnsemble,
    TeleporterConfig,
    bell_measure,
    calibrate_gain,
    feedforward,
    make_epr,
    teleport_analytic,
    teleport_shots,
)
from .chain import (
    CLASSICAL_FIDELITY_LIMIT,
    NO_CLONING_FIDELITY_LIMIT,
    ChainRun,
    ChainSpec,
    FidelityReport,
    NoiseBudget,
    SwapScan,
    accumulate_noise,
    fidelity_unity_gain,
    run_chain,
    scan_swap_gain,
    sequential_fidelity_ideal,
    swap_then_teleport,
    threshold_squeezing,
)
from .tomography import (
    DEFAULT_FILTER_CUTOFF,
    GridSpec,
    ReconstructionMetrics,
    ScanSpec,
    TomographyDataset,
    WignerGrid,
    acquire,
    analytic_grid,
    inverse_radon,
    load_dataset,
    load_wigner_grid,
    reconstruction_error,
    save_dataset,
    save_wigner_grid,
    simulate_figure4,
)

__all__ = [
    "PHYSICALITY_SLACK",
    "VACUUM_VARIANCE",
    "GaussianState",
    "HomodyneSample",
    "SqueezerSpec",
    "beam_splitter",
    "canonical_phase",
    "db_to_variance",
    "displace",
    "homodyne_condition",
    "homodyne_sample",
    "make_coherent",
    "make_squeezed",
    "make_vacuum",
    "overlap_with_coherent",
    "partial_trace",
    "quadrature_marginal",
    "rotate",
    "symplectic_form",
    "tensor",
    "variance_to_db",
    "wigner_analytic",
    "AddedNoise",
    "BellOutcome",
    "ShotEnsemble",
    "TeleporterConfig",
    "bell_measure",
    "calibrate_gain",
    "feedforward",
    "make_epr",
    "teleport_analytic",
    "teleport_shots",
    "CLASSICAL_FIDELITY_LIMIT",
    "NO_CLONING_FIDELITY_LIMIT",
    "ChainRun",
    "ChainSpec",
    "FidelityReport",
    "NoiseBudget",
    "SwapScan",
    "accumulate_noise",
    "fidelity_unity_gain",
    "run_chain",
    "scan_swap_gain",
    "sequential_fidelity_ideal",
    "swap_then_teleport",
    "threshold_squeezing",
    "DEFAULT_FILTER_CUTOFF",
    "GridSpec",
    "ReconstructionMetrics",
    "ScanSpec",
    "TomographyDataset",
    "WignerGrid",
    "acquire",
    "analytic_grid",
    "inverse_radon",
    "load_dataset",
    "load_wigner_grid",
    "reconstruction_error",
    "save_dataset",
    "save_wigner_grid",
    "simulate_figure4",
]
