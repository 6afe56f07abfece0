"""One-shot thermodynamics numerics.

Smoothed min/max/hypothesis-testing relative entropies, thermo-majorization
and battery-coupled work quotes, coherence-aware conversion protocols, and
translation-invariant chain rate scans, all at desk scale with exact
classical fast paths and certified brackets for the genuinely quantum cases.
"""

__version__ = "0.1.0"

from .divergences import (
    DivergenceReport,
    Estimate,
    divergence_report,
    hypothesis_testing_relative_entropy,
    max_relative_entropy,
    min_relative_entropy,
    relative_entropy,
    smoothed_max_relative_entropy,
    smoothed_min_relative_entropy,
)
from .errors import (
    ChainTooShort,
    ConfigError,
    DimensionLimit,
    InvalidBatteryLevel,
    InvalidOperator,
    InvalidSmoothing,
    InvalidTemperature,
    NotIncoherent,
    NotSemiclassical,
    OneShotThermoError,
    ShapeError,
    SpacingMismatch,
    UnsupportedStructure,
)
from .operators import (
    DensityOperator,
    HermitianOperator,
    SpectralDecomposition,
    commutes,
    dephase,
    eig,
    partial_trace,
    tensor,
    trace_distance,
)
from .spectrum import RatioSpectrum, divergences_from_spectrum, ratio_spectrum
from .thermo import (
    BatteryLadder,
    GibbsEnsemble,
    LorenzCurve,
    WorkQuote,
    battery_transition_feasible,
    gibbs,
    lorenz_curve,
    reversibility_gap,
    thermo_majorizes,
    work_distillable,
    work_formation,
)
from .coherence import (
    CoherenceLedger,
    LadderReference,
    OffDiagonalProfile,
    dephase_distill_protocol,
    discretize_hamiltonian,
    offdiagonal_profile,
    reference_frame_describe,
    reference_frame_externalize,
    reference_frame_formation_protocol,
)
from .lattice import (
    FiniteMixture,
    IIDMixed,
    IIDPure,
    LocalHamiltonianSpec,
    MarkovFamily,
    RateScanRow,
    chain_ratio_spectrum,
    free_energy_rate,
    gap_scan,
    gibbs_lattice,
    ising_chain,
    log_partition_chain,
    mixture_scan,
    relative_entropy_rate,
    spatial_variance,
    truncate,
)
