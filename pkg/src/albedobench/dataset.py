"""Dataset manifest: schema, loading, validation, region resolution.

A manifest is a JSON file:

    {
      "version": 1,
      "scenes": [
        {
          "scene_id": "scene_001",
          "measurements": [
            {"measurement_id": "m0", "albedo": [0.4, 0.3, 0.2]}
          ],
          "images": [
            {
              "image_id": "scene_001_view0",
              "file": "images/scene_001_view0.pfm",
              "transfer": "linear",
              "regions": [
                {"measurement_id": "m0", "polygons": [[[x, y], ...], ...]}
              ],
              "judgements": [
                {"p1": [0.2, 0.3], "p2": [0.7, 0.1], "label": "1", "weight": 1.0}
              ],
              "constant_shading_polygons": [...],
              "specular_polygons": [...]
            }
          ]
        }
      ]
    }

A region carries either "polygons" (annotation-resolution pixel coordinates)
or "mask_file" (a PNG whose nonzero pixels form the mask).  File paths are
relative to the manifest's directory.

A prediction set is a directory with an ``index.json`` mapping
image_id -> {"albedo_file": ..., "transfer": ..., "shading_file": optional}.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import imgio
from .errors import DegenerateInputError, ParseError, ValidationError
from .geometry import as_polygon, rasterize_polygons

SUPPORTED_MANIFEST_VERSIONS = (1,)
VALID_TRANSFERS = ("linear", "srgb")
VALID_LABELS = ("E", "1", "2")


@dataclass
class Measurement:
    measurement_id: str
    albedo: np.ndarray  # (3,) linear sRGB reflectance

    def to_dict(self):
        return {"measurement_id": self.measurement_id, "albedo": [float(v) for v in self.albedo]}


@dataclass
class Region:
    measurement_id: str
    polygons: list | None = None  # list of (N, 2) arrays
    mask_file: str | None = None

    def to_dict(self):
        d = {"measurement_id": self.measurement_id}
        if self.polygons is not None:
            d["polygons"] = [np.asarray(p).tolist() for p in self.polygons]
        if self.mask_file is not None:
            d["mask_file"] = self.mask_file
        return d


@dataclass
class Judgement:
    p1: tuple  # normalized (x, y) in [0, 1]^2
    p2: tuple
    label: str  # "E" equal, "1" point 1 darker, "2" point 2 darker
    weight: float

    def to_dict(self):
        return {
            "p1": [float(self.p1[0]), float(self.p1[1])],
            "p2": [float(self.p2[0]), float(self.p2[1])],
            "label": self.label,
            "weight": float(self.weight),
        }


@dataclass
class ImageRecord:
    image_id: str
    file: str
    transfer: str
    regions: list = field(default_factory=list)
    judgements: list = field(default_factory=list)
    constant_shading_polygons: list = field(default_factory=list)
    specular_polygons: list = field(default_factory=list)

    def to_dict(self):
        return {
            "image_id": self.image_id,
            "file": self.file,
            "transfer": self.transfer,
            "regions": [r.to_dict() for r in self.regions],
            "judgements": [j.to_dict() for j in self.judgements],
            "constant_shading_polygons": [np.asarray(p).tolist() for p in self.constant_shading_polygons],
            "specular_polygons": [np.asarray(p).tolist() for p in self.specular_polygons],
        }


@dataclass
class Scene:
    scene_id: str
    measurements: list = field(default_factory=list)
    images: list = field(default_factory=list)

    def measurement_map(self) -> dict:
        return {m.measurement_id: m for m in self.measurements}

    def to_dict(self):
        return {
            "scene_id": self.scene_id,
            "measurements": [m.to_dict() for m in self.measurements],
            "images": [im.to_dict() for im in self.images],
        }


@dataclass
class Manifest:
    version: int
    scenes: list = field(default_factory=list)
    base_dir: str = "."

    def to_dict(self):
        return {"version": self.version, "scenes": [s.to_dict() for s in self.scenes]}

    def resolve_path(self, rel: str) -> str:
        return rel if os.path.isabs(rel) else os.path.join(self.base_dir, rel)

    def iter_images(self):
        for scene in self.scenes:
            for record in scene.images:
                yield scene, record


@dataclass
class ResolvedRegion:
    mask: np.ndarray
    measurement: Measurement
    pixel_count: int


def _parse_polygons(raw, where, problems):
    polys = []
    for k, p in enumerate(raw):
        try:
            polys.append(as_polygon(p))
        except Exception as exc:
            problems.append("%s: polygon %d invalid (%s)" % (where, k, exc))
    return polys


def _parse_manifest_dict(doc: dict, base_dir: str, problems: list) -> Manifest:
    version = doc.get("version")
    if version not in SUPPORTED_MANIFEST_VERSIONS:
        problems.append("unsupported manifest version %r" % (version,))
    manifest = Manifest(version=version if isinstance(version, int) else -1, base_dir=base_dir)

    seen_scenes = set()
    for s_raw in doc.get("scenes", []):
        sid = s_raw.get("scene_id", "<missing scene_id>")
        if not isinstance(sid, str) or not sid:
            problems.append("scene_id must be a non-empty string, got %r" % (sid,))
            sid = str(sid)
        if sid in seen_scenes:
            problems.append("duplicate scene_id %r" % sid)
        seen_scenes.add(sid)
        scene = Scene(scene_id=sid)

        seen_m = set()
        for m_raw in s_raw.get("measurements", []):
            mid = m_raw.get("measurement_id", "<missing measurement_id>")
            where = "scene %s/measurement %s" % (sid, mid)
            if mid in seen_m:
                problems.append("%s: duplicate measurement_id" % where)
            seen_m.add(mid)
            albedo = np.asarray(m_raw.get("albedo", []), dtype=np.float64)
            if albedo.shape != (3,):
                problems.append("%s: albedo must be a 3-vector" % where)
                albedo = np.full(3, np.nan)
            elif not np.all(np.isfinite(albedo)) or np.any(albedo <= 0) or np.any(albedo > 4):
                problems.append("%s: albedo channels must lie in (0, 4]" % where)
            scene.measurements.append(Measurement(measurement_id=mid, albedo=albedo))

        for i_raw in s_raw.get("images", []):
            iid = i_raw.get("image_id", "<missing image_id>")
            if not isinstance(iid, str) or not iid:
                problems.append("scene %s: image_id must be a non-empty string, got %r" % (sid, iid))
                iid = str(iid)
            where = "scene %s/image %s" % (sid, iid)
            rec = ImageRecord(
                image_id=iid,
                file=i_raw.get("file", ""),
                transfer=i_raw.get("transfer", ""),
            )
            if not rec.file:
                problems.append("%s: missing file" % where)
            if rec.transfer not in VALID_TRANSFERS:
                problems.append(
                    "%s: transfer %r not in %r" % (where, rec.transfer, VALID_TRANSFERS)
                )
            for r_raw in i_raw.get("regions", []):
                rmid = r_raw.get("measurement_id")
                if rmid not in seen_m:
                    problems.append("%s: region references unknown measurement_id %r" % (where, rmid))
                has_poly = "polygons" in r_raw
                has_file = "mask_file" in r_raw
                if has_poly == has_file:
                    problems.append(
                        "%s: region %r needs exactly one of polygons/mask_file" % (where, rmid)
                    )
                region = Region(measurement_id=rmid)
                if has_poly:
                    region.polygons = _parse_polygons(
                        r_raw["polygons"], "%s region %s" % (where, rmid), problems
                    )
                if has_file:
                    region.mask_file = r_raw["mask_file"]
                rec.regions.append(region)
            for k, j_raw in enumerate(i_raw.get("judgements", [])):
                jwhere = "%s: judgement %d" % (where, k)
                p1 = tuple(j_raw.get("p1", (np.nan, np.nan)))
                p2 = tuple(j_raw.get("p2", (np.nan, np.nan)))
                label = j_raw.get("label")
                weight = j_raw.get("weight", 1.0)
                for name, pt in (("p1", p1), ("p2", p2)):
                    ok = (
                        len(pt) == 2
                        and all(np.isfinite(v) for v in pt)
                        and all(0.0 <= v <= 1.0 for v in pt)
                    )
                    if not ok:
                        problems.append("%s: %s must be normalized coords in [0,1]^2" % (jwhere, name))
                if label not in VALID_LABELS:
                    problems.append("%s: label %r not in %r" % (jwhere, label, VALID_LABELS))
                if not (np.isfinite(weight) and weight >= 0):
                    problems.append("%s: weight must be finite and >= 0" % jwhere)
                rec.judgements.append(Judgement(p1=p1, p2=p2, label=label, weight=float(weight)))
            rec.constant_shading_polygons = _parse_polygons(
                i_raw.get("constant_shading_polygons", []), where + " constant_shading", problems
            )
            rec.specular_polygons = _parse_polygons(
                i_raw.get("specular_polygons", []), where + " specular", problems
            )
            scene.images.append(rec)
        manifest.scenes.append(scene)
    return manifest


def load_manifest(path: str, deep: bool = True) -> Manifest:
    """Load and validate a manifest.

    Structural validation (ids, ranges, schema) always runs.  With
    ``deep=True`` every image file is additionally opened, mask files are
    size-checked, and regions are rasterized to confirm they are non-empty.
    All problems are collected and raised together as a ValidationError.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError("manifest %s is not valid JSON: %s" % (path, exc)) from exc
    if not isinstance(doc, dict):
        raise ParseError("manifest %s: top level must be an object" % path)

    problems: list = []
    manifest = _parse_manifest_dict(doc, os.path.dirname(os.path.abspath(path)), problems)

    for scene, rec in manifest.iter_images():
        where = "scene %s/image %s" % (scene.scene_id, rec.image_id)
        fpath = manifest.resolve_path(rec.file)
        if not rec.file or not os.path.exists(fpath):
            problems.append("%s: file not found: %s" % (where, rec.file))
            continue
        if deep:
            try:
                img = imgio.read_image(fpath)
            except Exception as exc:
                problems.append("%s: file does not decode (%s)" % (where, exc))
                continue
            h, w = img.shape[:2]
            try:
                resolved = resolve_region_masks(
                    rec, w, h, scene.measurement_map(), base_dir=manifest.base_dir
                )
            except ValidationError as exc:
                problems.extend("%s: %s" % (where, p) for p in exc.problems)

    if problems:
        raise ValidationError(problems)
    return manifest


def save_manifest(manifest: Manifest, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def manifest_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def resolve_region_masks(
    record: ImageRecord,
    width: int,
    height: int,
    measurements: dict,
    base_dir: str = ".",
) -> list:
    """Rasterize/load the region masks of one image at (width, height).

    Overlapping pixels are assigned to the earliest-listed region and removed
    from later ones, so the returned masks are pairwise disjoint.  Raises
    ValidationError (all problems together) when a region is empty after
    rasterization, references an unknown measurement, or a mask file has the
    wrong size.
    """
    problems = []
    taken = np.zeros((height, width), dtype=bool)
    resolved = []
    for region in record.regions:
        meas = measurements.get(region.measurement_id)
        if meas is None:
            problems.append("region references unknown measurement_id %r" % region.measurement_id)
            continue
        if region.polygons is not None:
            mask = rasterize_polygons(region.polygons, width, height)
        else:
            mpath = region.mask_file if os.path.isabs(region.mask_file) else os.path.join(base_dir, region.mask_file)
            try:
                mask = imgio.read_mask(mpath)
            except Exception as exc:
                problems.append("region %r mask file unreadable (%s)" % (region.measurement_id, exc))
                continue
            if mask.shape != (height, width):
                problems.append(
                    "region %r mask file is %r, image is %r"
                    % (region.measurement_id, mask.shape, (height, width))
                )
                continue
        mask = mask & ~taken
        count = int(mask.sum())
        if count == 0:
            problems.append("region %r is empty after rasterization" % region.measurement_id)
            continue
        taken |= mask
        resolved.append(ResolvedRegion(mask=mask, measurement=meas, pixel_count=count))
    if problems:
        raise ValidationError(problems)
    return resolved


def region_mean(pred: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-channel mean of ``pred`` over ``mask`` (the V_i of the metrics)."""
    m = np.asarray(mask, dtype=bool)
    if m.shape != pred.shape[:2]:
        raise DegenerateInputError(
            "mask shape %r does not match image %r" % (m.shape, pred.shape[:2])
        )
    n = int(m.sum())
    if n == 0:
        raise DegenerateInputError("region mask is empty")
    return pred[m].mean(axis=0)


@dataclass
class PredictionEntry:
    albedo_file: str
    transfer: str
    shading_file: str | None = None


def load_prediction_index(pred_dir: str) -> dict:
    """Read ``index.json`` from a prediction directory.

    Returns a dict image_id -> PredictionEntry.  Validates transfer tags and
    file existence, collecting all problems.
    """
    index_path = os.path.join(pred_dir, "index.json")
    try:
        with open(index_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ValidationError(["prediction index not found: %s" % index_path])
    except json.JSONDecodeError as exc:
        raise ParseError("prediction index %s is not valid JSON: %s" % (index_path, exc)) from exc
    if not isinstance(doc, dict):
        raise ParseError("prediction index %s: top level must be an object" % index_path)

    problems = []
    entries = {}
    for image_id, raw in doc.items():
        if not isinstance(raw, dict) or "albedo_file" not in raw:
            problems.append("%s: entry must be an object with albedo_file" % image_id)
            continue
        entry = PredictionEntry(
            albedo_file=raw["albedo_file"],
            transfer=raw.get("transfer", "linear"),
            shading_file=raw.get("shading_file"),
        )
        if entry.transfer not in VALID_TRANSFERS:
            problems.append("%s: transfer %r not in %r" % (image_id, entry.transfer, VALID_TRANSFERS))
        for f in filter(None, (entry.albedo_file, entry.shading_file)):
            if not os.path.exists(os.path.join(pred_dir, f)):
                problems.append("%s: file not found: %s" % (image_id, f))
        entries[image_id] = entry
    if problems:
        raise ValidationError(problems)
    return entries


def save_prediction_index(entries: dict, pred_dir: str) -> None:
    doc = {
        image_id: {
            k: v
            for k, v in (
                ("albedo_file", e.albedo_file),
                ("transfer", e.transfer),
                ("shading_file", e.shading_file),
            )
            if v is not None
        }
        for image_id, e in entries.items()
    }
    with open(os.path.join(pred_dir, "index.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
