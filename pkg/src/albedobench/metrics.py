"""The five evaluation metrics and the forward-only finetuning losses.

Per-image metrics, all computed in linear color space:

* ``whdr``                 -- weighted disagreement with human darker-point
                              judgements (ratio test with threshold delta).
* ``intensity_si_mse``     -- scale-invariant MSE between grayscale region
                              means of the prediction and the measured albedo.
* ``chromaticity_error``   -- pixel-count-weighted CIEDE2000 between region
                              colors after grayscale matching.
* ``texture_error``        -- perceptual distance on mean-matched crops from
                              constant-shading rectangles.
* ``sparse_shading_si_mse``-- scale-invariant MSE between blurred shading
                              fields on the sparse shading mask.

plus ``whdr_hinge_surrogate`` / ``pixel_si_mse_loss`` /
``finetune_loss_forward``, the differentiable-in-spirit surrogates used to
finetune a predictor against the annotations (forward values only, no
gradients here).

``evaluate_image`` orchestrates all five for one image and records a
machine-readable skip reason for each metric whose annotations are missing
or degenerate.  Aggregation over a dataset is the unweighted mean over the
images where each metric is defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .colorspace import ciede2000, linear_srgb_to_lab, srgb_encode, to_grayscale
from .config import RunConfig
from .dataset import ImageRecord, Scene, region_mean, resolve_region_masks
from .errors import DegenerateInputError, ParameterError
from .geometry import largest_inscribed_rect, rasterize_polygons
from .imageops import masked_blur, resample_bilinear, resample_bilinear_window
from .measure import ShadingGT, build_shading_mask, derive_shading, paint_albedo
from .perceptual import BuiltinPerceptualDistance

EPS = 1e-8

METRIC_NAMES = ("whdr", "intensity_si_mse", "chroma_error", "texture_error", "shading_si_mse")

# machine-readable skip reasons (ImageMetrics.skips values)
SKIP_NO_JUDGEMENTS = "no judgements"
SKIP_NO_REGIONS = "no regions"
SKIP_NO_RECTANGLES = "no rectangles"
SKIP_EMPTY_SHADING_MASK = "empty shading mask"
SKIP_DEGENERATE_SCALE = "degenerate scale"


# --------------------------------------------------------------------------
# judgement comparisons


def convert_judgement(r1: float, r2: float, delta: float = 0.1) -> str:
    """Turn a pair of linear grayscale values into a darker-point label.

    Returns "1" when point 1 is confidently darker (r2/r1 > 1+delta), "2"
    when point 2 is, "E" otherwise.  Values are floored at 1e-8 so black
    pixels compare instead of crashing.
    """
    r1 = max(float(r1), EPS)
    r2 = max(float(r2), EPS)
    if r2 / r1 > 1.0 + delta:
        return "1"
    if r1 / r2 > 1.0 + delta:
        return "2"
    return "E"


def sample_point(gray: np.ndarray, point) -> float:
    """Nearest-pixel sample of a grayscale image at normalized (x, y)."""
    h, w = gray.shape[:2]
    x, y = point
    ix = min(int(x * w), w - 1)
    iy = min(int(y * h), h - 1)
    return float(gray[iy, ix])


def whdr(pred_gray: np.ndarray, judgements, delta: float = 0.1) -> float:
    """Weighted fraction of judgements the prediction disagrees with."""
    if not judgements:
        raise DegenerateInputError("no judgements")
    total = 0.0
    wrong = 0.0
    for j in judgements:
        got = convert_judgement(
            sample_point(pred_gray, j.p1), sample_point(pred_gray, j.p2), delta
        )
        total += j.weight
        if got != j.label:
            wrong += j.weight
    if total <= 0.0:
        raise DegenerateInputError("judgement weights sum to zero")
    return wrong / total


def whdr_hinge_surrogate(pred_gray: np.ndarray, judgements, tau: float = 0.2) -> float:
    """Hinge-style surrogate for WHDR, usable as a finetuning objective.

    Equal pairs are pulled together quadratically; unequal pairs pay only
    when the darker point fails to be darker by at least ``tau``.  The two
    pair populations are balanced by 1/#equal and 1/#unequal.
    """
    if not judgements:
        raise DegenerateInputError("no judgements")
    n_equal = sum(1 for j in judgements if j.label == "E")
    n_unequal = len(judgements) - n_equal
    alpha_eq = 1.0 / n_equal if n_equal else 0.0
    alpha_ne = 1.0 / n_unequal if n_unequal else 0.0
    loss = 0.0
    for j in judgements:
        r1 = sample_point(pred_gray, j.p1)
        r2 = sample_point(pred_gray, j.p2)
        if j.label == "E":
            loss += alpha_eq * j.weight * (r1 - r2) ** 2
        elif j.label == "1":  # point 1 darker: want r2 - r1 >= tau
            loss += alpha_ne * j.weight * max(0.0, tau - (r2 - r1)) ** 2
        else:  # "2": point 2 darker
            loss += alpha_ne * j.weight * max(0.0, tau - (r1 - r2)) ** 2
    return loss


# --------------------------------------------------------------------------
# region metrics


def intensity_si_mse(v, g, counts, scale_target: str = "gt"):
    """Scale-invariant MSE over grayscale region means.

    ``v``/``g`` are prediction/ground-truth grayscale means per region,
    ``counts`` the region pixel counts used as weights.  The optimal global
    scale theta is the closed-form weighted least-squares solution, applied
    to the operand named by ``scale_target``.  Returns (si_mse, theta).
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    g = np.asarray(g, dtype=np.float64).ravel()
    m = np.asarray(counts, dtype=np.float64).ravel()
    if not (v.shape == g.shape == m.shape):
        raise ParameterError("v, g, counts must have identical lengths")
    if v.size == 0:
        raise DegenerateInputError("no regions")
    if np.any(g <= 0.0):
        raise DegenerateInputError("ground-truth region means must be positive")
    if scale_target == "gt":
        denom = float((m * g * g).sum())
        if denom < EPS:
            raise DegenerateInputError("degenerate scale: sum w*g^2 ~ 0")
        theta = float((m * v * g).sum()) / denom
        resid = v - theta * g
    elif scale_target == "pred":
        denom = float((m * v * v).sum())
        if denom < EPS:
            raise DegenerateInputError("degenerate scale: sum w*v^2 ~ 0")
        theta = float((m * v * g).sum()) / denom
        resid = theta * v - g
    else:
        raise ParameterError("scale_target must be 'gt' or 'pred', got %r" % scale_target)
    total = float(m.sum())
    if total <= 0.0:
        raise DegenerateInputError("region pixel counts sum to zero")
    return float((m * resid * resid).sum() / total), theta


def chromaticity_error(v_rgb, g_rgb, counts):
    """Pixel-count-weighted CIEDE2000 between region colors.

    Each ground-truth color is rescaled by theta_i = V_i^gray / G_i^gray so
    both operands share the prediction's grayscale, isolating chromaticity
    from intensity.  Regions where either grayscale is ~0 are skipped;
    returns (error, n_skipped).
    """
    v = np.atleast_2d(np.asarray(v_rgb, dtype=np.float64))
    g = np.atleast_2d(np.asarray(g_rgb, dtype=np.float64))
    m = np.asarray(counts, dtype=np.float64).ravel()
    if v.shape != g.shape or v.shape[-1] != 3 or v.shape[0] != m.size:
        raise ParameterError("expected matching (N, 3) colors and N counts")
    if v.shape[0] == 0:
        raise DegenerateInputError("no regions")
    v_gray = to_grayscale(v)
    g_gray = to_grayscale(g)
    valid = (v_gray > EPS) & (g_gray > EPS)
    n_skipped = int((~valid).sum())
    if not valid.any():
        raise DegenerateInputError("all regions have ~0 grayscale")
    theta = v_gray[valid] / g_gray[valid]
    lab_v = linear_srgb_to_lab(v[valid])
    lab_g = linear_srgb_to_lab(theta[:, None] * g[valid])
    de = np.atleast_1d(ciede2000(lab_v, lab_g))
    mv = m[valid]
    return float((mv * de).sum() / mv.sum()), n_skipped


# --------------------------------------------------------------------------
# texture


def _mean_matched(crop: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rescale each channel of ``crop`` so its mean equals ``reference``'s."""
    out = np.empty_like(crop)
    for c in range(crop.shape[2]):
        denom = max(float(crop[:, :, c].mean()), 1e-12)
        out[:, :, c] = crop[:, :, c] * (float(reference[:, :, c].mean()) / denom)
    return out


def _encode_crop(crop: np.ndarray) -> np.ndarray:
    return srgb_encode(np.clip(crop, 0.0, 1.0))


def texture_rectangles(polys, width: int, height: int, upsample: int, min_side: int):
    """Largest inscribed rectangle per polygon at upsampled resolution.

    Polygon coordinates are multiplied by the upsample factor; rectangles
    with either side below ``min_side`` are dropped.
    """
    rects = []
    for poly in polys:
        mask = rasterize_polygons([np.asarray(poly, dtype=np.float64) * upsample], width, height)
        rect = largest_inscribed_rect(mask)
        if rect is not None and min(rect.w, rect.h) >= min_side:
            rects.append(rect)
    return rects


def texture_error(
    image: np.ndarray,
    pred_albedo: np.ndarray,
    polys,
    backend=None,
    upsample: int = 2,
    min_side: int = 32,
    encode_crops: bool = True,
) -> float:
    """Perceptual texture distance over constant-shading rectangles.

    Both images are upsampled, the largest inscribed rectangle of each
    polygon is extracted, the albedo crop is per-channel rescaled to match
    the image crop's means (inside a constant-shading region a correct
    albedo differs from the image by exactly such a constant), crops are
    gamma-encoded (clipped to [0, 1] first) when ``encode_crops``, and the
    backend distances are averaged weighted by rectangle area.
    """
    if backend is None:
        backend = BuiltinPerceptualDistance()
    h, w = image.shape[:2]
    up_w, up_h = w * upsample, h * upsample
    rects = texture_rectangles(polys, up_w, up_h, upsample, min_side)
    if not rects:
        raise DegenerateInputError("no rectangles")
    total = 0.0
    area = 0.0
    for rect in rects:
        # interpolate only the rectangle's window of the upsampled frame
        crop_i = resample_bilinear_window(image, up_w, up_h, rect.x0, rect.y0, rect.w, rect.h)
        crop_p = resample_bilinear_window(
            pred_albedo, up_w, up_h, rect.x0, rect.y0, rect.w, rect.h
        )
        crop_a = _mean_matched(crop_p, crop_i)
        if encode_crops:
            crop_i = _encode_crop(crop_i)
            crop_a = _encode_crop(crop_a)
        total += rect.area * backend.distance(crop_a, crop_i)
        area += rect.area
    return total / area


# --------------------------------------------------------------------------
# shading


def sparse_shading_si_mse(
    gt: ShadingGT,
    pred_shading: np.ndarray,
    sigma: float | None = None,
    scale_target: str = "pred",
) -> float:
    """Scale-invariant MSE between blurred shading fields on the sparse mask.

    The prediction gets the same masked-normalized blur the ground truth was
    derived with; the optimal scale is fit jointly over channels on the
    operand named by ``scale_target`` and the squared residual is averaged
    over mask pixels and channels.
    """
    if sigma is None:
        sigma = gt.sigma
    elif abs(sigma - gt.sigma) > 1e-12:
        raise ParameterError(
            "sigma %.6g does not match the ground truth's %.6g" % (sigma, gt.sigma)
        )
    mask = gt.mask
    if not mask.any():
        raise DegenerateInputError("empty shading mask")
    pred_shading = np.asarray(pred_shading, dtype=np.float64)
    if pred_shading.shape != gt.shading.shape:
        raise ParameterError(
            "prediction %r does not match ground truth %r"
            % (pred_shading.shape, gt.shading.shape)
        )
    blurred = masked_blur(pred_shading, mask, sigma, weight=gt.mask_weight)
    a = gt.shading[mask].reshape(mask.sum(), -1)
    b = blurred[mask].reshape(mask.sum(), -1)
    if scale_target == "pred":
        denom = float((b * b).sum())
        if denom < EPS:
            raise DegenerateInputError("degenerate prediction: blurred shading ~ 0")
        theta = float((a * b).sum()) / denom
        resid = a - theta * b
    elif scale_target == "gt":
        denom = float((a * a).sum())
        if denom < EPS:
            raise DegenerateInputError("degenerate ground truth: shading ~ 0")
        theta = float((a * b).sum()) / denom
        resid = theta * a - b
    else:
        raise ParameterError("scale_target must be 'gt' or 'pred', got %r" % scale_target)
    return float((resid * resid).sum() / resid.size)


# --------------------------------------------------------------------------
# finetuning losses (forward values only)


def pixel_si_mse_loss(
    pred_albedo: np.ndarray,
    gt_albedo: np.ndarray,
    mask: np.ndarray,
    scale_target: str = "pred",
) -> float:
    """Pixel-level scale-invariant MSE between albedo images on a mask.

    The scale is fit jointly over all masked pixels and channels; the loss
    is the mean squared 3-vector residual per masked pixel.
    """
    m = np.asarray(mask, dtype=bool)
    n = int(m.sum())
    if n == 0:
        raise DegenerateInputError("empty mask")
    r = np.asarray(pred_albedo, dtype=np.float64)[m].reshape(n, -1)
    g = np.asarray(gt_albedo, dtype=np.float64)[m].reshape(n, -1)
    if scale_target == "pred":
        denom = float((r * r).sum())
        if denom < EPS:
            raise DegenerateInputError("degenerate prediction: albedo ~ 0 on mask")
        theta = float((r * g).sum()) / denom
        resid = theta * r - g
    elif scale_target == "gt":
        denom = float((g * g).sum())
        if denom < EPS:
            raise DegenerateInputError("degenerate ground truth on mask")
        theta = float((r * g).sum()) / denom
        resid = r - theta * g
    else:
        raise ParameterError("scale_target must be 'gt' or 'pred', got %r" % scale_target)
    return float((resid * resid).sum() / n)


def finetune_texture_term(
    image: np.ndarray,
    pred_albedo: np.ndarray,
    shading_mask: np.ndarray,
    backend=None,
    min_side: int = 32,
    encode_crops: bool = True,
) -> float:
    """Texture term of the finetuning loss.

    One crop pair from the largest inscribed rectangle of the shading mask,
    mean-matched like the texture metric; 0 when no rectangle of side
    ``min_side`` exists (the term simply vanishes on such images).
    """
    if backend is None:
        backend = BuiltinPerceptualDistance()
    rect = largest_inscribed_rect(np.asarray(shading_mask, dtype=bool))
    if rect is None or min(rect.w, rect.h) < min_side:
        return 0.0
    sl = rect.as_slices()
    crop_i = np.asarray(image, dtype=np.float64)[sl]
    crop_a = _mean_matched(np.asarray(pred_albedo, dtype=np.float64)[sl], crop_i)
    if encode_crops:
        crop_i = _encode_crop(crop_i)
        crop_a = _encode_crop(crop_a)
    return float(backend.distance(crop_a, crop_i))


def finetune_loss_forward(
    image: np.ndarray,
    pred_albedo: np.ndarray,
    resolved_regions,
    judgements,
    shading_mask: np.ndarray,
    beta: float = 2.0,
    gamma: float = 0.0,
    tau: float = 0.2,
    backend=None,
    min_side: int = 32,
) -> float:
    """Forward value of the full finetuning objective.

    pixel si-MSE on the region union, plus ``beta`` times the judgement
    hinge when judgements exist, plus ``gamma`` times the texture term.
    """
    h, w = image.shape[:2]
    if not resolved_regions:
        raise DegenerateInputError("no regions")
    gt = paint_albedo(resolved_regions, w, h)
    union = np.zeros((h, w), dtype=bool)
    for rr in resolved_regions:
        union |= rr.mask
    loss = pixel_si_mse_loss(pred_albedo, gt, union)
    if judgements and beta != 0.0:
        loss += beta * whdr_hinge_surrogate(to_grayscale(pred_albedo), judgements, tau)
    if gamma != 0.0:
        loss += gamma * finetune_texture_term(
            image, pred_albedo, shading_mask, backend, min_side
        )
    return float(loss)


# --------------------------------------------------------------------------
# per-image orchestration


@dataclass
class AlgorithmPrediction:
    """One algorithm's output for one image, resampled before metric entry."""

    image_id: str
    albedo: np.ndarray
    shading: np.ndarray | None = None
    derived_shading_flag: bool = False


@dataclass
class ImageMetrics:
    """Per-image metric values; None means skipped (reason in ``skips``)."""

    image_id: str
    whdr: float | None = None
    intensity_si_mse: float | None = None
    chroma_error: float | None = None
    texture_error: float | None = None
    shading_si_mse: float | None = None
    skips: dict = field(default_factory=dict)  # metric name -> reason
    chroma_regions_skipped: int = 0
    shading_derived: bool = False

    def to_dict(self):
        return {
            "image_id": self.image_id,
            "whdr": self.whdr,
            "intensity_si_mse": self.intensity_si_mse,
            "chroma_error": self.chroma_error,
            "texture_error": self.texture_error,
            "shading_si_mse": self.shading_si_mse,
            "skips": dict(sorted(self.skips.items())),
            "chroma_regions_skipped": self.chroma_regions_skipped,
            "shading_derived": self.shading_derived,
        }


@dataclass
class MetricVector:
    """Aggregate metric means for one algorithm over a dataset."""

    algorithm: str
    means: dict  # metric name -> float | None
    counts: dict  # metric name -> number of images where defined

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "means": {k: self.means.get(k) for k in METRIC_NAMES},
            "counts": {k: self.counts.get(k, 0) for k in METRIC_NAMES},
        }


def aggregate(algorithm: str, per_image) -> MetricVector:
    """Unweighted mean of each metric over the images where it is defined."""
    means = {}
    counts = {}
    for name in METRIC_NAMES:
        values = [getattr(im, name) for im in per_image if getattr(im, name) is not None]
        counts[name] = len(values)
        means[name] = float(np.mean(values)) if values else None
    return MetricVector(algorithm=algorithm, means=means, counts=counts)


def evaluate_image(
    scene: Scene,
    record: ImageRecord,
    image: np.ndarray,
    prediction: AlgorithmPrediction,
    config: RunConfig | None = None,
    backend=None,
    base_dir: str = ".",
) -> ImageMetrics:
    """Compute every metric whose annotations exist for one image.

    ``image`` is the linear annotated image; the prediction's albedo (and
    shading, if present) is resampled to its resolution and negatives are
    clipped to 0.  Shading is derived as image/albedo when the prediction
    does not supply it.  Metrics whose inputs are missing or degenerate are
    skipped with a machine-readable reason, never raised.
    """
    if config is None:
        config = RunConfig()
    if prediction.image_id != record.image_id:
        raise ParameterError(
            "prediction is for %r, record is %r" % (prediction.image_id, record.image_id)
        )
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]

    albedo = np.maximum(np.asarray(prediction.albedo, dtype=np.float64), 0.0)
    if albedo.shape[:2] != (h, w):
        albedo = np.maximum(resample_bilinear(albedo, w, h), 0.0)
    pred_shading = prediction.shading
    derived = False
    if pred_shading is None:
        pred_shading = image / np.maximum(albedo, 1e-6)
        derived = True
    else:
        pred_shading = np.asarray(pred_shading, dtype=np.float64)
        if pred_shading.shape[:2] != (h, w):
            pred_shading = resample_bilinear(pred_shading, w, h)

    out = ImageMetrics(image_id=record.image_id, shading_derived=derived)

    # WHDR
    if record.judgements:
        try:
            out.whdr = whdr(to_grayscale(albedo), record.judgements, config.delta)
        except DegenerateInputError:
            out.skips["whdr"] = SKIP_NO_JUDGEMENTS
    else:
        out.skips["whdr"] = SKIP_NO_JUDGEMENTS

    # region metrics
    resolved = []
    if record.regions:
        resolved = resolve_region_masks(record, w, h, scene.measurement_map(), base_dir)
    if resolved:
        v_rgb = np.stack([region_mean(albedo, rr.mask) for rr in resolved])
        g_rgb = np.stack([rr.measurement.albedo for rr in resolved])
        m = np.array([rr.pixel_count for rr in resolved], dtype=np.float64)
        try:
            out.intensity_si_mse, _ = intensity_si_mse(
                to_grayscale(v_rgb), to_grayscale(g_rgb), m, config.intensity_scale_target
            )
        except DegenerateInputError:
            out.skips["intensity_si_mse"] = SKIP_DEGENERATE_SCALE
        try:
            out.chroma_error, out.chroma_regions_skipped = chromaticity_error(v_rgb, g_rgb, m)
        except DegenerateInputError:
            out.skips["chroma_error"] = SKIP_DEGENERATE_SCALE
    else:
        out.skips["intensity_si_mse"] = SKIP_NO_REGIONS
        out.skips["chroma_error"] = SKIP_NO_REGIONS

    # texture
    if record.constant_shading_polygons:
        try:
            out.texture_error = texture_error(
                image,
                albedo,
                record.constant_shading_polygons,
                backend=backend,
                upsample=config.upsample,
                min_side=config.min_rect_side,
                encode_crops=config.encode_texture_crops,
            )
        except DegenerateInputError:
            out.skips["texture_error"] = SKIP_NO_RECTANGLES
    else:
        out.skips["texture_error"] = SKIP_NO_RECTANGLES

    # shading
    if resolved:
        sparse = np.zeros((h, w), dtype=bool)
        for rr in resolved:
            sparse |= rr.mask
        m_shading = build_shading_mask(
            sparse, record.specular_polygons, image, config.saturation_threshold
        )
        if m_shading.any():
            painted = paint_albedo(resolved, w, h)
            try:
                gt = derive_shading(image, painted, config.sigma, region_mask=m_shading)
                out.shading_si_mse = sparse_shading_si_mse(
                    gt, pred_shading, config.sigma, config.shading_scale_target
                )
            except DegenerateInputError as exc:
                out.skips["shading_si_mse"] = (
                    SKIP_DEGENERATE_SCALE if "degenerate" in str(exc) else SKIP_EMPTY_SHADING_MASK
                )
        else:
            out.skips["shading_si_mse"] = SKIP_EMPTY_SHADING_MASK
    else:
        out.skips["shading_si_mse"] = SKIP_NO_REGIONS
    return out
