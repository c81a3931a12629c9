"""Second-moment estimation for AR(1) models driven by long-memory Gaussian noise."""

__version__ = "0.1.0"

from .ar1 import Ar1Model, generate_x_path, generate_y_path  # noqa: E402
from .covariance import CovarianceModel, parse_model  # noqa: E402
from .moments import MomentContext, TruncationPolicy  # noqa: E402

__all__ = [
    "Ar1Model",
    "CovarianceModel",
    "MomentContext",
    "TruncationPolicy",
    "generate_x_path",
    "generate_y_path",
    "parse_model",
]
