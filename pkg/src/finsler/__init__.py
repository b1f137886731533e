"""Numerical toolkit for conic Finsler metrics and stationary-spacetime causality.

Layers, bottom to top:

* charts and coefficient fields (`chart`, `fields`);
* metric families with closed-form vertical Hessians (`metrics`, `tensor`);
* variational machinery: geodesic integration, shooting, conjugate points
  (`geodesic`) and grid distance fields with convexity/cut-locus probes
  (`distance`);
* stationary spacetimes: lightlike lifts, chronological futures as metric
  balls, Cauchy horizons, causality diagnostics (`stationary`), plus
  discrete causal lattices (`causalgrid`);
* deterministic IO, verification suites, and the command line
  (`modelio`, `suites`, `cli`).

Everything is a pure function of immutable models and is safe to share
across threads or processes.
"""

from .chart import Chart, GridSpec, Region, box_chart
from .errors import (
    EmptyComplement,
    FinslerError,
    InvalidCoefficients,
    InvariantViolation,
    NotUnitSpeed,
    OutsideDomain,
    PositivityViolated,
    SchemaError,
    StiffnessFailure,
    Unreachable,
    ZeroVector,
)
from .fields import ConstantField, ExpressionField, GridField
from .metrics import (
    BogoslovskyMetric,
    DomainVerdict,
    FermatMetric,
    KosteleckyMetric,
    MatsumotoMetric,
    MetricModel,
    RandersMetric,
    RiemannianMetric,
    TabulatedMetric,
    TangentSample,
    ZermeloMetric,
    check_homogeneity,
    classify_domain,
    evaluate,
)
from .tensor import (
    FundamentalTensor,
    fundamental_tensor,
    hessian_fd_batch,
    signature_of,
    tensor_batch,
    verify_spacetime_conditions,
)
from .distance import (
    ConvexityReport,
    CutLocusProbe,
    DistanceField,
    convexity_check,
    cut_locus_probe,
    distance_field,
    stencil_offsets,
    symmetrized_distance,
)
from .geodesic import (
    Geodesic,
    conjugate_point_scan,
    euler_lagrange_residual,
    integrate_geodesic,
    projective_change,
    shoot,
)
from .stationary import (
    HorizonGraph,
    LadderReport,
    SpacetimeCurve,
    StationaryModel,
    build_stationary,
    cauchy_horizon,
    causal_ladder_report,
    chronological_future_slice,
    chronological_past_slice,
    classify_vector,
    lift,
    sample_causal_vectors,
    stationary_from_wind,
    verify_temporal,
)
from .causalgrid import (
    CausalGrid,
    causal_reachability,
    exhaustive_closure_audit,
    finsler_separation,
    transitivity_audit,
)
from .modelio import (
    dumps_canonical,
    load_field_csv,
    load_model,
    load_region,
    save_field_csv,
    save_mask_csv,
)
from .suites import DEFAULT_TOLERANCES, SUITES, run_suite

__version__ = "0.1.0"
