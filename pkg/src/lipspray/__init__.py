"""Numerical toolkit for geodesics of Lipschitz sprays and C1,1 pseudo-Finsler
metrics: certified Picard solves, exponential/logarithm maps, convex normal
ball certificates, and quantitative inequality probe suites."""

__version__ = "0.1.0"

from .chart import ChartBox, ChartMap, identity_chart_map, linear_chart_map
from .convexity import (
    ConvexityCertificate,
    NormalizedChart,
    certify_ball,
    containment_probe,
    normalize_chart_at,
    position_inequality_probe,
    z_functional,
)
from .distance import (
    DistanceField,
    DistanceGeometry,
    OracleDistanceGeometry,
    PerturbationFamily,
    distance_ball_convexity_probe,
    gauss_check,
    gauss_gradient,
    gauss_probe,
    lorentzian_two_point_probe,
    maximization_probe,
    minimization_probe,
    radial_flow_probe,
    spacelike_level_probe,
    squared_distance,
    strong_convexity_probe_riemannian,
)
from .errors import (
    AmbiguousClassification,
    ConvergenceFailure,
    DegenerateMetric,
    DomainViolation,
    EscapeFromBall,
    InvalidParams,
    LipsprayError,
    NoncausalTangent,
    SingularJacobian,
    SingularTensor,
    UnboundedEstimate,
    UnknownGeometry,
)
from .expmap import (
    ExpResult,
    LogResult,
    exp_p,
    log_p,
    position_vector,
    reverse_exp_p,
    strong_differential_probe,
)
from .finsler import (
    CausalClass,
    FundamentalTensor,
    TimeOrientation,
    check_fundamental_identities,
    classify_vector,
    constant_time_orientation,
    curve_length,
    finsler_spray,
    lagrangian,
    levi_civita_christoffels,
    reverse_cauchy_schwarz_check,
)
from .gallery import GalleryEntry, build_gallery, gallery_names, load_geometry
from .report import ProbeReport, RunReport, write_report, write_trajectory_csv
from .solver import (
    ConvexityConstants,
    GeodesicSolution,
    compute_constants,
    constants_from_delta,
    dependence_probe,
    flow,
    picard_geodesic,
    reference_geodesic,
)
from .spray import (
    ChristoffelField,
    LipschitzEstimate,
    SprayField,
    check_homogeneity,
    connection_to_spray,
    estimate_constants,
    eval_spray,
    transform_spray,
)
