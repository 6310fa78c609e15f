"""Run configuration: every tunable that can change a metric value.

The full config is echoed into evaluation reports so results are
reproducible from the report alone.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .errors import ParameterError


@dataclass
class RunConfig:
    # WHDR ratio threshold margin: "darker" means a ratio beyond 1 + delta.
    delta: float = 0.1
    # Gaussian sigma (pixels) for the shading comparison blur.
    sigma: float = 8.0
    # Texture metric: integer upsampling factor and minimum crop side.
    upsample: int = 2
    min_rect_side: int = 32
    # 8-bit level at or above which a pixel counts as saturated.
    saturation_threshold: int = 250
    # "builtin" or "external:HOST:PORT".
    texture_backend: str = "builtin"
    # Gamma-encode texture crops before handing them to the backend.
    encode_texture_crops: bool = True
    # Which side the scale-invariant fits rescale: "gt" or "pred".
    intensity_scale_target: str = "gt"
    shading_scale_target: str = "pred"
    # Hinge surrogate threshold and loss mixing weights.
    hinge_tau: float = 0.2
    loss_beta: float = 2.0
    loss_gamma: float = 0.0
    # Parallel workers for evaluation runs.
    workers: int = 1

    def __post_init__(self):
        if not (self.delta > 0):
            raise ParameterError("delta must be > 0")
        if not (self.sigma > 0):
            raise ParameterError("sigma must be > 0")
        if self.upsample < 1:
            raise ParameterError("upsample must be >= 1")
        if self.min_rect_side < 1:
            raise ParameterError("min_rect_side must be >= 1")
        if not (0 < self.saturation_threshold <= 255):
            raise ParameterError("saturation_threshold must be in (0, 255]")
        for name in ("intensity_scale_target", "shading_scale_target"):
            if getattr(self, name) not in ("gt", "pred"):
                raise ParameterError("%s must be 'gt' or 'pred'" % name)
        if not (self.hinge_tau > 0):
            raise ParameterError("hinge_tau must be > 0")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError("unknown config keys: %s" % ", ".join(sorted(unknown)))
        return cls(**d)
