"""Classification and Monte-Carlo verification toolkit for reflected random
walks on the lattice quadrant."""

from .classify import (
    ClassificationReport,
    boundary_drift,
    chi,
    classify,
    effective_drift,
    reflection_angles,
    stationary_measure,
    transform_matrix,
    wedge_angle,
)
from .errors import (
    ConvergenceError,
    HypothesisError,
    NotLeftContinuousError,
    QuadwalkError,
    ReflectionRegimeError,
    SchemaError,
)
from .harmonic import (
    DriftEstimate,
    HarmonicParams,
    choose_betas,
    compressed_passage_times,
    drift_estimate,
    h_eval,
    h_gradient,
    h_hessian,
    h_truncated,
)
from .model import (
    IncrementLaw,
    Mat2,
    ValidationReport,
    Vec2,
    WalkSpec,
    covariance,
    default_corner_laws,
    interior_mean,
    law_at,
    load_law,
    load_spec,
    region_of,
    save_spec,
    spec_from_json,
    spec_to_json,
    validate,
)
from .projection import (
    ProjectionChain,
    StationaryMeasure,
    embedded_exact,
    occupation_mc,
    projection_chain,
    truncated_invariant,
)
from .simulate import (
    SimConfig,
    StabilizationEstimate,
    TailEstimate,
    WalkSampler,
    excursion_max_probe,
    fit_curve,
    passage_time,
    stabilization_probe,
    step,
    survival_curve,
)
from .verify import verify_drift_signs
from .walks import (
    IncrementReport,
    diagonal_increment,
    lindley_exponent,
    lindley_spec,
    mirror_spec,
    validate_increment_A,
)

__version__ = "0.1.0"
