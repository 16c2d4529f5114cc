"""Online Newton on the manifold of linearly constrained stabilizing LQG gains."""
from .config import ExperimentConfig
from .errors import ManifoldLQGError
from .geometry import (
    ConstraintSet,
    CostPair,
    GeometryCache,
    PlantModel,
    ambient_hessian_apply,
    christoffel_apply,
    closed_loop_cache,
    metric_derivative,
    metric_inner,
    newton_direction,
    stability_certificate,
    submanifold_gradient,
    submanifold_hessian_apply,
    tangent_project,
)
from .linalg import solve_dare, solve_discrete_lyapunov, spectral_radius, sym_eig_extremes
from .optimizers import (
    euclidean_newton_step,
    offline_local_minimizer,
    onm_step,
    projected_gradient_step,
)

__version__ = "0.1.0"
