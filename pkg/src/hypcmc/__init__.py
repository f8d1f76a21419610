"""Constant mean curvature Killing graphs in hyperbolic 3-space."""
from .curvature import CurvatureResult, mean_curvature_oracle
from .errors import (
    BarrierViolation,
    ConfigError,
    ConstraintViolation,
    EllipticityLoss,
    NonConvergence,
    ShootingFailure,
)
from .exhaustion import (
    BoundaryTrace,
    ExhaustionConfig,
    ExhaustionReport,
    barrier_bounds,
    exhaustion_solve,
    extend_boundary,
    gradient_monitor,
)
from .hyperbolic import KillingMotion, ModelSpec, flow, hyperbolic_distance, killing_vector
from .io import RunConfig, export_mesh, parse_config, serialize_config
from .operator import CMCOperator, GraphField, Mesh, assemble_jacobian, assemble_residual, embed_graph
from .oracles import CapSolution, EquivariantProfile, equivariant_ode_solve, reference_surfaces, umbilic_cap
from .solver import (
    DirichletProblem,
    SolveReport,
    SolverConfig,
    continuation_solve,
    dirichlet_solve,
    ordering_check,
)
from .submersion import (
    KillingCylinder,
    SectionGrid,
    ball_alpha,
    cylinder_mean_curvature,
    gamma_terms,
    project,
    section_point,
    submersion_metric,
)

__version__ = "0.1.0"
