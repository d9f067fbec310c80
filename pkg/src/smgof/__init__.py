"""Wavelet-based goodness-of-fit tests for parametric volatility models of
high-frequency semimartingale data."""
from .errors import (
    BlockMisalignedError,
    BootstrapDegenerateError,
    LevelTooFineError,
    NoConvergenceError,
    NonFiniteError,
    NonPositiveVarianceError,
    NotPowerOfTwoError,
    SingularDesignError,
    SmgofError,
)
from .estimation import FitResult, fit_least_squares
from .harness import Scenario, ScenarioResult, detection_rate_sweep, run_scenario, table1_suite
from .model import (
    FineGrid,
    JumpSpec,
    ModelKind,
    NoiseSpec,
    NormalisedSeries,
    ObservationSeries,
    ParametricVolModel,
    SdeSpec,
    UniformGrid,
    normalise,
)
from .observers import (
    TruncationRule,
    constant_model,
    jump_robust_observer,
    local_vol_observer,
    make_model,
    microstructure_observer,
    observe,
    proportional_model,
    stoch_vol_observer,
)
from .simulate import (
    PathRecord,
    SimConfig,
    add_microstructure_noise,
    simulate,
    simulate_diffusion,
    simulate_jump_diffusion,
    simulate_latent_vol_pair,
)
from .testing import NullSimulator, TestReport, asymptotic_test, bootstrap_test
from .wavelet import (
    WaveletDecomposition,
    decompose,
    gumbel_constants,
    gumbel_quantile,
    max_statistic,
    resolution_level,
)

__version__ = "0.1.0"
