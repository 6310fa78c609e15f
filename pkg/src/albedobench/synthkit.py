"""Synthetic scenes with exactly known reflectance and shading.

Scenes are built directly in linear sRGB: a textured background with
piecewise-constant reflectance patches, multiplied by a smooth positive
shading field (a linear ramp plus at most four broad Gaussian lobes).
Every annotation the evaluator consumes is emitted alongside -- region
polygons with their true mean reflectance, comparison pairs whose labels
are exact by construction, and a polygon inside which shading is held
exactly constant.

All randomness flows from ``numpy.random.default_rng(seed)`` with a fixed
draw order, so a (seed, width, height, n_regions, n_judgements) tuple
always reproduces the same scene bit for bit.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import dataset
from .errors import ParameterError
from .geometry import rasterize_polygons
from .imageops import gaussian_blur
from .imgio import write_image
from .measure import GrayCardCapture
from .metrics import AlgorithmPrediction, convert_judgement

# Reflectance bounds for everything in the scene (background and patches).
ALBEDO_LO = 0.05
ALBEDO_HI = 0.9

# Clip range for the shading field.  Kept well under the level where
# reflectance * shading would start saturating an 8-bit encode.
SHADING_LO = 0.2
SHADING_HI = 1.08

# Minimum grayscale ratio between the two sides of an unequal comparison
# pair.  Chosen so that a +20% single-channel tint (which shifts a point's
# grayscale by at most ~17%) can never drag the ratio below the 1.1
# decision threshold, i.e. labels survive every corruption ladder used in
# the end-to-end checks.
UNEQUAL_MARGIN = 1.35

CORRUPTION_KINDS = ("scale", "tint", "contrast", "blur")


@dataclass
class SyntheticScene:
    """A rendered scene plus every ground-truth quantity used to score it."""

    scene_id: str
    image_id: str
    seed: int
    width: int
    height: int
    albedo: np.ndarray  # (h, w, 3) linear reflectance
    shading: np.ndarray  # (h, w) positive shading field
    image: np.ndarray  # albedo * shading[..., None]
    region_albedo: list = field(default_factory=list)  # (3,) per region
    region_polygons: list = field(default_factory=list)  # (4, 2) pixel coords
    region_masks: list = field(default_factory=list)  # (h, w) bool per region
    judgements: list = field(default_factory=list)  # dataset.Judgement
    constant_shading_polygons: list = field(default_factory=list)
    shading_constant: float = 0.0  # value inside the constant polygon

    def measurements(self) -> list:
        return [
            dataset.Measurement(measurement_id="m%02d" % i, albedo=np.asarray(a))
            for i, a in enumerate(self.region_albedo)
        ]

    def image_record(self, file: str, transfer: str = "linear") -> dataset.ImageRecord:
        regions = [
            dataset.Region(measurement_id="m%02d" % i, polygons=[poly])
            for i, poly in enumerate(self.region_polygons)
        ]
        return dataset.ImageRecord(
            image_id=self.image_id,
            file=file,
            transfer=transfer,
            regions=regions,
            judgements=list(self.judgements),
            constant_shading_polygons=list(self.constant_shading_polygons),
            specular_polygons=[],
        )

    def dataset_scene(self, file: str, transfer: str = "linear") -> dataset.Scene:
        return dataset.Scene(
            scene_id=self.scene_id,
            measurements=self.measurements(),
            images=[self.image_record(file, transfer)],
        )

    def ground_truth_prediction(self) -> AlgorithmPrediction:
        return AlgorithmPrediction(image_id=self.image_id, albedo=self.albedo.copy())


def _region_gray_levels(rng: np.random.Generator, n: int) -> np.ndarray:
    """Grayscale targets for the constant patches.

    Log-spaced between 0.1 and 0.8 with a little jitter, then shuffled.
    The extreme pair always has a ratio near 8, so qualifying unequal
    comparison pairs exist for any n >= 2.
    """
    if n == 1:
        levels = np.array([0.4])
    else:
        levels = np.exp(np.linspace(math.log(0.1), math.log(0.8), n))
    levels = levels * rng.uniform(0.97, 1.03, size=n)
    return rng.permutation(levels)


def _color_around_gray(rng: np.random.Generator, gray: float) -> np.ndarray:
    """Random chromatic color whose channel mean is exactly `gray`.

    The chroma spread is scaled to the headroom so every channel stays
    inside [ALBEDO_LO + margin, ALBEDO_HI - margin].
    """
    spread = 0.5 * min(0.4, (0.88 - gray) / gray, (gray - 0.06) / gray)
    u = rng.uniform(-1.0, 1.0, size=3) * spread
    v = u - u.mean()  # zero-mean perturbation keeps the gray exact
    return gray * (1.0 + v)


def _integer_square(x0: int, y0: int, side: int) -> np.ndarray:
    """Axis-aligned square polygon on integer pixel corners.

    Rasterizing it fills exactly side*side pixels, so region means over the
    mask equal the painted constant with no partial-coverage effects.
    """
    return np.array(
        [
            [x0, y0],
            [x0 + side, y0],
            [x0 + side, y0 + side],
            [x0, y0 + side],
        ],
        dtype=np.float64,
    )


def _pixel_point(px: int, py: int, width: int, height: int) -> tuple:
    """Normalized coordinates that the nearest-pixel lookup maps back to (px, py)."""
    return ((px + 0.5) / width, (py + 0.5) / height)


def generate_scene(
    seed: int,
    width: int = 512,
    height: int = 384,
    n_regions: int = 6,
    n_judgements: int = 12,
    scene_id: str | None = None,
) -> SyntheticScene:
    """Deterministically build one synthetic scene.

    Draw order is fixed: background texture, patch layout, patch colors,
    shading field, constant-shading zone, then comparison pairs.
    """
    if width < 64 or height < 64:
        raise ParameterError("scene must be at least 64x64, got %dx%d" % (width, height))
    if n_regions < 2:
        raise ParameterError("need at least 2 regions, got %d" % n_regions)
    if n_judgements < 0:
        raise ParameterError("n_judgements must be >= 0")
    rng = np.random.default_rng(seed)
    if scene_id is None:
        scene_id = "synth-%08d" % seed
    image_id = scene_id + "-im0"

    # --- reflectance -----------------------------------------------------
    albedo = rng.uniform(ALBEDO_LO, ALBEDO_HI, size=(height, width, 3))

    gx = int(math.ceil(math.sqrt(n_regions)))
    gy = int(math.ceil(n_regions / gx))
    cell_w = width // gx
    cell_h = height // gy
    side = max(8, int(round(0.42 * min(cell_w, cell_h))))

    grays = _region_gray_levels(rng, n_regions)
    region_albedo = []
    region_polygons = []
    region_masks = []
    for i in range(n_regions):
        cx0 = (i % gx) * cell_w
        cy0 = (i // gx) * cell_h
        x0 = cx0 + 2 + int(rng.integers(0, max(cell_w - side - 4, 1)))
        y0 = cy0 + 2 + int(rng.integers(0, max(cell_h - side - 4, 1)))
        color = _color_around_gray(rng, float(grays[i]))
        poly = _integer_square(x0, y0, side)
        mask = rasterize_polygons([poly], width, height)
        albedo[mask] = color
        region_albedo.append(color)
        region_polygons.append(poly)
        region_masks.append(mask)

    # --- shading ----------------------------------------------------------
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    base = rng.uniform(0.45, 0.75)
    ramp_x = rng.uniform(-0.25, 0.25)
    ramp_y = rng.uniform(-0.25, 0.25)
    shading = base + ramp_x * (xs / width - 0.5) + ramp_y * (ys / height - 0.5)
    n_lobes = int(rng.integers(1, 5))
    for _ in range(n_lobes):
        amp = rng.uniform(-0.22, 0.32)
        cx = rng.uniform(0, width)
        cy = rng.uniform(0, height)
        sg = rng.uniform(0.18, 0.45) * min(height, width)
        shading += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * sg * sg))
    shading = np.clip(shading, SHADING_LO, SHADING_HI)

    zone_side = max(40, int(round(0.38 * min(height, width))))
    zx0 = 2 + int(rng.integers(0, max(width - zone_side - 4, 1)))
    zy0 = 2 + int(rng.integers(0, max(height - zone_side - 4, 1)))
    zone_poly = _integer_square(zx0, zy0, zone_side)
    zone_mask = rasterize_polygons([zone_poly], width, height)
    shading_constant = float(rng.uniform(0.45, 0.95))
    shading[zone_mask] = shading_constant

    image = albedo * shading[..., None]

    # --- comparison pairs ---------------------------------------------------
    region_gray = [float(np.mean(c)) for c in region_albedo]

    def point_in_region(r: int) -> tuple:
        poly = region_polygons[r]
        x0, y0 = int(poly[0, 0]), int(poly[0, 1])
        px = x0 + 1 + int(rng.integers(0, side - 2))
        py = y0 + 1 + int(rng.integers(0, side - 2))
        return _pixel_point(px, py, width, height)

    judgements = []
    for j in range(n_judgements):
        weight = float(rng.uniform(0.5, 1.5))
        if j % 3 == 2:
            r = int(rng.integers(0, n_regions))
            p1 = point_in_region(r)
            p2 = point_in_region(r)
            label = "E"  # identical reflectance constants, ratio exactly 1
        else:
            for _ in range(500):
                r1 = int(rng.integers(0, n_regions))
                r2 = int(rng.integers(0, n_regions))
                if r1 == r2:
                    continue
                hi = max(region_gray[r1], region_gray[r2])
                lo = min(region_gray[r1], region_gray[r2])
                if hi / lo >= UNEQUAL_MARGIN:
                    break
            else:  # pragma: no cover - impossible with the ladder above
                raise ParameterError("could not find an unequal region pair")
            p1 = point_in_region(r1)
            p2 = point_in_region(r2)
            label = convert_judgement(region_gray[r1], region_gray[r2])
        judgements.append(dataset.Judgement(p1=p1, p2=p2, label=label, weight=weight))

    return SyntheticScene(
        scene_id=scene_id,
        image_id=image_id,
        seed=int(seed),
        width=width,
        height=height,
        albedo=albedo,
        shading=shading,
        image=image,
        region_albedo=region_albedo,
        region_polygons=region_polygons,
        region_masks=region_masks,
        judgements=judgements,
        constant_shading_polygons=[zone_poly],
        shading_constant=shading_constant,
    )


def gray_card_capture(
    scene: SyntheticScene, region_index: int = 0, proxy_albedo: float = 0.18
) -> GrayCardCapture:
    """Synthesize the two-exposure capture used for reflectance measurement.

    The "with proxy" frame re-renders the scene with the chosen region's
    reflectance replaced by the neutral proxy value; shading is unchanged,
    exactly the assumption the measurement procedure relies on.
    """
    if not (0 <= region_index < len(scene.region_masks)):
        raise ParameterError(
            "region index %d out of range (%d regions)" % (region_index, len(scene.region_masks))
        )
    mask = scene.region_masks[region_index]
    patched = scene.albedo.copy()
    patched[mask] = proxy_albedo
    with_proxy = patched * scene.shading[..., None]
    return GrayCardCapture(
        image_with_proxy=with_proxy,
        image_without_proxy=scene.image,
        proxy_mask=mask,
        proxy_albedo=proxy_albedo,
    )


def corrupt_prediction(scene: SyntheticScene, kind: str, magnitude: float) -> AlgorithmPrediction:
    """Degrade the ground-truth decomposition in one controlled way.

    scale     multiply reflectance by (1 + magnitude), divide shading by it;
              the product is untouched, so every scale-invariant metric
              should stay at its ground-truth value.
    tint      multiply the blue reflectance channel by (1 + magnitude);
              drives the chromaticity error while comparison labels survive.
    contrast  compress per-pixel grayscale toward the image mean by
              1 / (1 + magnitude), preserving chromaticity exactly;
              drives the intensity error.
    blur      Gaussian-blur reflectance with sigma = magnitude; drives the
              texture error.

    magnitude 0 returns the untouched ground truth for every kind.
    """
    if kind not in CORRUPTION_KINDS:
        raise ParameterError(
            "unknown corruption %r; expected one of %s" % (kind, ", ".join(CORRUPTION_KINDS))
        )
    mag = float(magnitude)
    if not np.isfinite(mag) or mag < 0:
        raise ParameterError("magnitude must be finite and >= 0, got %r" % (magnitude,))
    if mag == 0.0:
        return scene.ground_truth_prediction()

    if kind == "scale":
        c = 1.0 + mag
        albedo = scene.albedo * c
        shading = np.repeat((scene.shading / c)[:, :, None], 3, axis=2)
        return AlgorithmPrediction(image_id=scene.image_id, albedo=albedo, shading=shading)
    if kind == "tint":
        albedo = scene.albedo.copy()
        albedo[..., 2] *= 1.0 + mag
        return AlgorithmPrediction(image_id=scene.image_id, albedo=albedo)
    if kind == "contrast":
        gray = scene.albedo.mean(axis=2, keepdims=True)
        center = gray.mean()
        f = 1.0 / (1.0 + mag)
        albedo = scene.albedo * (center + f * (gray - center)) / gray
        return AlgorithmPrediction(image_id=scene.image_id, albedo=albedo)
    # blur
    albedo = gaussian_blur(scene.albedo, sigma=mag)
    return AlgorithmPrediction(image_id=scene.image_id, albedo=albedo)


def _image_ext(image_format: str) -> str:
    if image_format not in ("pfm", "npy", "png"):
        raise ParameterError("image_format must be pfm, npy or png, got %r" % (image_format,))
    return "." + image_format


def write_scenes(
    scenes: list,
    out_dir: str,
    image_format: str = "pfm",
) -> str:
    """Write scene images plus a manifest under `out_dir`; returns manifest path.

    Images land in out_dir/images/, stored linearly (PNG output quantizes
    to 16 bits, which is why float formats are the default).
    """
    ext = _image_ext(image_format)
    img_dir = os.path.join(out_dir, "images")
    os.makedirs(img_dir, exist_ok=True)
    ds_scenes = []
    for scene in scenes:
        rel = os.path.join("images", scene.image_id + ext)
        write_image(os.path.join(out_dir, rel), scene.image)
        ds_scenes.append(scene.dataset_scene(rel))
    manifest = dataset.Manifest(version=1, scenes=ds_scenes, base_dir=out_dir)
    path = os.path.join(out_dir, "manifest.json")
    dataset.save_manifest(manifest, path)
    return path


def write_prediction_set(
    scenes: list,
    pred_dir: str,
    kind: str | None = None,
    magnitude: float = 0.0,
    image_format: str = "pfm",
) -> dict:
    """Write one prediction set (ground truth, optionally corrupted).

    Creates pred_dir/<image_id>.albedo.<ext> (and .shading.<ext> when the
    corruption produces one) plus the index file the evaluator reads.
    """
    ext = _image_ext(image_format)
    os.makedirs(pred_dir, exist_ok=True)
    entries = {}
    for scene in scenes:
        if kind is None:
            pred = scene.ground_truth_prediction()
        else:
            pred = corrupt_prediction(scene, kind, magnitude)
        albedo_file = scene.image_id + ".albedo" + ext
        write_image(os.path.join(pred_dir, albedo_file), pred.albedo)
        shading_file = None
        if pred.shading is not None:
            shading_file = scene.image_id + ".shading" + ext
            write_image(os.path.join(pred_dir, shading_file), pred.shading)
        entries[scene.image_id] = dataset.PredictionEntry(
            albedo_file=albedo_file, transfer="linear", shading_file=shading_file
        )
    dataset.save_prediction_index(entries, pred_dir)
    return entries


def synth_corpus(
    out_dir: str,
    n_scenes: int,
    base_seed: int = 0,
    width: int = 512,
    height: int = 384,
    n_regions: int = 6,
    n_judgements: int = 12,
    corruptions: list | None = None,
    image_format: str = "pfm",
) -> dict:
    """Generate a full benchmark corpus: scenes, manifest, prediction sets.

    Scene i uses seed base_seed + i.  A ground-truth prediction set is
    always written under predictions/gt; each (kind, magnitude) pair in
    `corruptions` adds predictions/<kind>-<magnitude>.  Returns a summary
    dict with the manifest path and the prediction set directories.
    """
    if n_scenes < 1:
        raise ParameterError("n_scenes must be >= 1")
    scenes = [
        generate_scene(
            base_seed + i,
            width=width,
            height=height,
            n_regions=n_regions,
            n_judgements=n_judgements,
            scene_id="synth-%04d" % i,
        )
        for i in range(n_scenes)
    ]
    manifest_path = write_scenes(scenes, out_dir, image_format=image_format)
    sets = {}
    gt_dir = os.path.join(out_dir, "predictions", "gt")
    write_prediction_set(scenes, gt_dir, image_format=image_format)
    sets["gt"] = gt_dir
    for kind, mag in corruptions or []:
        name = "%s-%g" % (kind, mag)
        pdir = os.path.join(out_dir, "predictions", name)
        write_prediction_set(scenes, pdir, kind=kind, magnitude=mag, image_format=image_format)
        sets[name] = pdir
    return {"manifest": manifest_path, "prediction_sets": sets}
