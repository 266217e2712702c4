"""Eulerian kernel-based discretisation of first order evolution equations."""

from .exceptions import (
    BlowUpError,
    ConfigurationError,
    FitError,
    SingularNodesError,
    SmoothnessError,
)
from .kernels import (
    CompositeRadialKernel,
    ScaledKernel,
    WendlandBase,
    high_order_weights,
    kernel_moment,
    make_kernel,
    parse_kernel_spec,
    scaled_eval,
    wendland_base,
    wendland_eval,
)
from .quasi_interp import (
    CoefficientField,
    GridEvaluator,
    Stencil,
    UniformGrid,
    build_stencil,
    discrete_norm,
    evaluate,
    evaluate_on_grid,
    linf_grid_error,
)

__version__ = "0.1.0"
