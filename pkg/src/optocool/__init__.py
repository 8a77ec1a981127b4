"""Radiation-pressure self-cooling of a micromechanical mirror.

Steady-state bistability, exact fluctuation spectra and variance
integrals, the effective-oscillator (adiabatic) approximation,
covariance dynamics with output-field correlations, and a matched-filter
homodyne readout, all in a shared dimensionless parametrization.
"""

__version__ = "0.1.0"

from .adiabatic import (
    CoolingDecomposition,
    EffectiveOscillator,
    OperatingPoint,
    RegimeReport,
    approx_variance,
    decompose,
    effective_rates,
    optimal_detuning,
    optimize_operating_point,
    regime_validity,
)
from .dynamics import (
    CovarianceState,
    HomodyneResult,
    LinearSystem,
    TwoTimeGrid,
    build_system,
    evolve_covariance,
    homodyne_variance,
    lyapunov_steady_state,
    matched_filter_pairs,
    output_variance_track,
    physicality_defect,
    steady_variances,
    thermal_covariance,
    two_time_correlations,
)
from .errors import (
    GridMismatch,
    ImaginaryFrequency,
    InvalidParams,
    InvalidRegime,
    NoStableBranch,
    NonPhysical,
    OptimizationFailure,
    OptocoolError,
    ParseError,
    QuadratureFailure,
    SingularResponse,
    SolverFailure,
    StepSizeUnderflow,
    Unstable,
    ValidationError,
    WindowTooShort,
)
from .model import (
    Branch,
    NormalizedParams,
    PhysicalParams,
    StabilityReport,
    SteadyState,
    denormalize,
    normalize,
    solve_steady_state,
    stability_check,
    thermal_occupancy,
)
from .spectra import (
    Method,
    SpectrumSample,
    ThermalNoiseModel,
    VarianceResult,
    cavity_response,
    coth_scale,
    effective_susceptibility,
    integrate_variances,
    noise_spectrum,
)

__all__ = [name for name in dir() if not name.startswith("_")]
