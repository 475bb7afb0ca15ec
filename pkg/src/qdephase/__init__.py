"""Classical-noise qubit dephasing: Monte Carlo ensembles, closed forms, revival detection."""

__version__ = "0.1.0"

from .noise_gen import (  # noqa: E402
    BLOCK_SIZE,
    InvalidParameterError,
    NoiseKind,
    NoiseSpec,
    TimeGrid,
    TrajectoryEnsemble,
    derive_seed,
    sample,
    sample_filtered,
    sample_ou,
    sample_rtn,
)
from .analytic import (  # noqa: E402
    AnalyticParams,
    DomainError,
    corr_ou,
    corr_rtn,
    corr_y,
    corr_y_stationary,
    d_ou,
    d_rtn,
    d_y,
    dephasing_for,
    spectrum_ou,
    spectrum_rtn,
    spectrum_y,
    tabulate,
)
from .dephasing import (  # noqa: E402
    CurveBands,
    DephasingCurve,
    QubitState,
    curve_ensemble_stats,
    dephasing_factor,
    evolve_state,
    integrate_paths,
    simulate_curve,
    trace_distance,
)
from .nm_analysis import RevivalReport, Verdict, detect_revivals, nm_measure  # noqa: E402
from .spectral import SpectrumEstimate, autocorr_estimate, peak_frequency, periodogram, spectral_shape  # noqa: E402
