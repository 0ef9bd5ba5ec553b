"""Two-slit which-way simulation with a detector in superposition of present and absent."""

from .analytics import (
    DualityRow,
    PatternSamples,
    analytic_visibility_at,
    distinguishability,
    duality_sweep,
    envelope,
    fringe_width,
    intensity,
    intensity_closed_form_theta0,
    pattern_samples,
    visibility_bound,
)
from .config import REFERENCE_CONFIG, ExperimentConfig
from .estimators import (
    FringeFitter,
    FringeStats,
    Histogram,
    duality_report,
    estimate_pattern_visibility,
    estimate_visibility,
    histogram,
    phase_shift,
)
from .model import (
    DetectorQubit,
    JointAmplitudes,
    PropagationState,
    beta,
    detector_qubit,
    gaussian_mode,
    joint_amplitudes,
    norm_constant,
    sigma_t,
)
from .sampler import (
    Basis,
    DetectionEvent,
    DetectorOutcome,
    EventTable,
    LocationOutcome,
    MeasurementPolicy,
    RngStreamSpec,
    measure_conditional,
    run_experiment,
    sample_positions,
    sort_subensembles,
)

__version__ = "0.1.0"
