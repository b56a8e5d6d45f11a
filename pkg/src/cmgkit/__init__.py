"""Numerical checks of the conformal-Morse-germ characterisation of constant-curvature spaces."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    ChartDomainError,
    DegeneratePlaneError,
    MetricChart,
    Plane2,
    christoffel,
    covariant_hessian,
    gradient,
    metric,
    ricci_identity_residual,
    riemann,
    sectional,
    third_covariant,
)
from .germs import (  # noqa: E402
    CmgVerdict,
    GermSpec,
    GradientFloorError,
    Neighborhood,
    Tolerances,
    conformal_defect,
    conformal_factor,
    curvature_via_germ,
    longo_curvature,
    model_germ,
    verify_cmg,
)
from .index import IndexInconclusive, IndexResult, direction_attainment, index_of_gradient, ph_index  # noqa: E402
from .jets import Jet, JetDomainError, TaylorScalar  # noqa: E402
from .probes import (  # noqa: E402
    CurvatureReport,
    QcRow,
    Region,
    SchurVerdict,
    curvature_gradient,
    osc_k,
    quasiconformal_sweep,
    schur_scan,
)
