"""Ground-truth measurement: gray-card albedo and derived shading.

The measurement model is Lambertian: I = A * S per channel.  A diffuse
reference target of known reflectance placed on a surface sees the same
shading as the surface, so the surface albedo follows from two aligned
captures (with and without the target):

    S_bar      = mean(I_proxy over mask) / A_proxy
    A_region   = mean(I_region over mask) / S_bar
               = A_proxy * mean(I_region) / mean(I_proxy)

Given measured region albedos painted into an albedo image, shading is
derived as S = I / A on the annotated pixels and blurred (masked-normalised)
so that surface texture that leaks into S through annotation error does not
dominate the comparison.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, MeasurementError, ParameterError
from .geometry import rasterize_polygons
from .imageops import encode_to_uint8, gaussian_blur, masked_blur

ALBEDO_EPS = 1e-6
PROXY_MEAN_EPS = 1e-6
SUSPICIOUS_ALBEDO = 4.0


class SuspiciousMeasurementWarning(UserWarning):
    """A measured albedo channel is implausibly high (> 4)."""


@dataclass
class GrayCardCapture:
    """Aligned capture pair plus the reference-target mask.

    ``image_with_proxy`` shows the reference target covering the surface;
    ``image_without_proxy`` shows the bare surface.  ``proxy_mask`` marks the
    target pixels (used in both images).  ``proxy_albedo`` is the target's
    reflectance, 0.18 for a standard photographic gray card.
    """

    image_with_proxy: np.ndarray
    image_without_proxy: np.ndarray
    proxy_mask: np.ndarray
    proxy_albedo: float = 0.18

    def __post_init__(self):
        a = np.asarray(self.image_with_proxy, dtype=np.float64)
        b = np.asarray(self.image_without_proxy, dtype=np.float64)
        m = np.asarray(self.proxy_mask, dtype=bool)
        if a.shape != b.shape:
            raise ParameterError("capture pair dimensions differ: %r vs %r" % (a.shape, b.shape))
        if m.shape != a.shape[:2]:
            raise ParameterError("proxy mask shape %r does not match images %r" % (m.shape, a.shape[:2]))
        if not m.any():
            raise ParameterError("proxy mask is empty")
        if not (0.0 < self.proxy_albedo < 1.0):
            raise ParameterError("proxy_albedo must lie in (0, 1)")
        self.image_with_proxy = a
        self.image_without_proxy = b
        self.proxy_mask = m


def measure_region_albedo(cap: GrayCardCapture) -> np.ndarray:
    """Measure the linear-sRGB albedo of the surface under the proxy mask.

    Raises MeasurementError when the proxy reads as (near-)black; emits a
    SuspiciousMeasurementWarning when a recovered channel exceeds 4, which
    usually indicates misaligned captures or a mis-tagged transfer.
    """
    m = cap.proxy_mask
    mean_proxy = cap.image_with_proxy[m].mean(axis=0)
    if np.any(mean_proxy < PROXY_MEAN_EPS):
        raise MeasurementError(
            "proxy mean %s has a near-zero channel; cannot infer shading" % (mean_proxy,)
        )
    mean_region = cap.image_without_proxy[m].mean(axis=0)
    albedo = cap.proxy_albedo * mean_region / mean_proxy
    if np.any(albedo > SUSPICIOUS_ALBEDO):
        warnings.warn(
            "measured albedo %s exceeds %.1f in at least one channel"
            % (np.round(albedo, 4), SUSPICIOUS_ALBEDO),
            SuspiciousMeasurementWarning,
            stacklevel=2,
        )
    return albedo


@dataclass
class ShadingGT:
    """Blurred ground-truth shading plus the mask where it is defined."""

    shading: np.ndarray  # (H, W, 3), >= 0, zero outside mask support
    mask: np.ndarray  # (H, W) bool: pixels with measured albedo
    sigma: float
    # blur(mask) carried over so scoring a prediction against this ground
    # truth reuses it instead of blurring the mask again
    mask_weight: np.ndarray | None = None


def paint_albedo(resolved_regions, width: int, height: int) -> np.ndarray:
    """Paint measured region albedos G_i into an (H, W, 3) image, 0 elsewhere."""
    out = np.zeros((height, width, 3), dtype=np.float64)
    for rr in resolved_regions:
        out[rr.mask] = rr.measurement.albedo
    return out


def derive_shading(
    img: np.ndarray,
    albedo_image: np.ndarray,
    sigma: float,
    region_mask: np.ndarray | None = None,
) -> ShadingGT:
    """Derive blurred ground-truth shading from an image and painted albedo.

    S = I / A is computed on pixels where the region mask is true and every
    albedo channel exceeds 1e-6, then blurred with a masked-normalised
    Gaussian so invalid pixels neither receive nor contribute values.
    """
    img = np.asarray(img, dtype=np.float64)
    albedo_image = np.asarray(albedo_image, dtype=np.float64)
    if img.shape != albedo_image.shape:
        raise ParameterError(
            "image %r and albedo image %r differ" % (img.shape, albedo_image.shape)
        )
    if region_mask is None:
        region_mask = np.any(albedo_image > 0.0, axis=-1)
    valid = region_mask & np.all(albedo_image > ALBEDO_EPS, axis=-1)
    if not valid.any():
        raise DegenerateInputError("no valid pixels: all regions empty or albedo ~ 0")
    shading = np.zeros_like(img)
    shading[valid] = img[valid] / albedo_image[valid]
    weight = gaussian_blur(valid.astype(np.float64), sigma)
    blurred = masked_blur(shading, valid, sigma, weight=weight)
    return ShadingGT(
        shading=np.maximum(blurred, 0.0), mask=valid, sigma=float(sigma), mask_weight=weight
    )


def build_shading_mask(
    sparse: np.ndarray,
    specular_polys,
    img: np.ndarray,
    saturation_threshold: int = 250,
) -> np.ndarray:
    """Intersect the sparse-measurement mask with non-specular/non-saturated.

    Specular highlights are excluded by annotation polygons; saturation is
    tested per channel on the sRGB-encoded 8-bit quantisation of the image
    (a pixel survives only if every channel is below the threshold).
    """
    sparse = np.asarray(sparse, dtype=bool)
    h, w = sparse.shape
    if img.shape[:2] != (h, w):
        raise ParameterError("image %r does not match mask %r" % (img.shape[:2], (h, w)))
    encoded = encode_to_uint8(img)
    non_saturated = np.all(encoded < saturation_threshold, axis=-1)
    if specular_polys:
        non_specular = ~rasterize_polygons(specular_polys, w, h)
    else:
        non_specular = np.ones((h, w), dtype=bool)
    return sparse & non_specular & non_saturated
