"""Gray-card albedo measurement and evaluation toolkit for intrinsic images.

The package is organised around a small pipeline:

* measure ground-truth albedo for annotated regions from image pairs shot
  with and without a diffuse reference target (``measure``),
* derive a sparse ground-truth shading layer from those measurements
  (``measure.derive_shading``),
* score algorithm predictions with five complementary metrics
  (``metrics.evaluate_image``),
* combine per-algorithm scores into a relative-improvement leaderboard
  (``ranking``).

``synthkit`` generates fully synthetic scenes with exact ground truth so the
whole pipeline can be exercised end to end without captured data.
"""

from .config import RunConfig
from .errors import (
    AlbedoBenchError,
    AnnotationError,
    DegenerateInputError,
    InputRangeError,
    MeasurementError,
    ParameterError,
    RankingError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "AlbedoBenchError",
    "AnnotationError",
    "DegenerateInputError",
    "InputRangeError",
    "MeasurementError",
    "ParameterError",
    "RankingError",
    "ValidationError",
    "__version__",
]
