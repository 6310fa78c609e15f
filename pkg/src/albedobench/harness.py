"""Evaluation driver: score one prediction set against a manifest.

Runs image-level parallelism with a ProcessPoolExecutor.  Results are
reduced in sorted image_id order regardless of worker count, and the math
itself contains no randomness, so repeated runs produce identical numbers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .config import RunConfig
from .dataset import Manifest, load_manifest, load_prediction_index, manifest_sha256
from .errors import BackendUnavailable, ParseError, PredictionIOError, ValidationError
from .imgio import read_image, read_linear
from .metrics import AlgorithmPrediction, MetricVector, aggregate, evaluate_image
from .perceptual import make_backend


@dataclass
class EvaluationRun:
    """Everything one `evaluate` invocation produced."""

    algorithm: str
    manifest_sha256: str
    config: RunConfig
    per_image: list = field(default_factory=list)  # ImageMetrics, sorted by id
    warnings: list = field(default_factory=list)

    def vector(self) -> MetricVector:
        return aggregate(self.algorithm, self.per_image)


def load_prediction(pred_dir: str, entry, image_id: str) -> AlgorithmPrediction:
    """Read one prediction's albedo (and optional shading) from disk.

    The entry's transfer tag applies to the albedo image; shading files are
    stored linearly (they are illumination factors, not display colors).
    """
    try:
        albedo = read_linear(os.path.join(pred_dir, entry.albedo_file), entry.transfer)
        shading = None
        if entry.shading_file is not None:
            shading = read_image(os.path.join(pred_dir, entry.shading_file))
    except (OSError, ParseError, ValueError) as exc:
        raise PredictionIOError("prediction for %r: %s" % (image_id, exc)) from exc
    return AlgorithmPrediction(image_id=image_id, albedo=albedo, shading=shading)


def load_index(pred_dir: str) -> dict:
    try:
        return load_prediction_index(pred_dir)
    except (OSError, ParseError, ValidationError) as exc:
        raise PredictionIOError("prediction index in %r: %s" % (pred_dir, exc)) from exc


def evaluate_single(manifest: Manifest, pred_dir: str, index: dict, image_id: str,
                    config: RunConfig, backend):
    """Score one image; shared by the inline path and pool workers."""
    for scene, record in manifest.iter_images():
        if record.image_id == image_id:
            break
    else:  # pragma: no cover - callers iterate manifest ids
        raise ParseError("image %r not in manifest" % image_id)
    image = read_linear(manifest.resolve_path(record.file), record.transfer)
    prediction = load_prediction(pred_dir, index[image_id], image_id)
    return evaluate_image(
        scene, record, image, prediction,
        config=config, backend=backend, base_dir=manifest.base_dir,
    )


# --- worker-process state ---------------------------------------------------

_worker: dict = {}


def _init_worker(manifest_path: str, pred_dir: str, config_dict: dict, backend_spec: str):
    # structural validation only; the parent already did the deep pass
    manifest = load_manifest(manifest_path, deep=False)
    _worker["manifest"] = manifest
    _worker["pred_dir"] = pred_dir
    _worker["index"] = load_index(pred_dir)
    _worker["config"] = RunConfig.from_dict(config_dict)
    _worker["backend"] = make_backend(backend_spec)


def _evaluate_in_worker(image_id: str):
    return evaluate_single(
        _worker["manifest"], _worker["pred_dir"], _worker["index"],
        image_id, _worker["config"], _worker["backend"],
    )


def resolve_backend_spec(config: RunConfig, warnings_out: list) -> str:
    """Probe an external backend; fall back to builtin when unreachable."""
    spec = config.texture_backend
    if spec == "builtin":
        return spec
    try:
        backend = make_backend(spec)
        backend.probe()
        backend.close()
        return spec
    except BackendUnavailable as exc:
        warnings_out.append(
            "texture backend %r unreachable (%s); falling back to builtin" % (spec, exc)
        )
        return "builtin"


def run_evaluation(
    manifest_path: str,
    pred_dir: str,
    algorithm: str,
    config: RunConfig | None = None,
    manifest: Manifest | None = None,
) -> EvaluationRun:
    """Evaluate every image that has a prediction; skip the rest with warnings.

    Raises ValidationError/ParseError for a bad manifest, PredictionIOError
    when the index or a referenced prediction file cannot be read.
    """
    config = config or RunConfig()
    if manifest is None:
        # structural checks only: evaluation opens every referenced file
        # itself, and the deep pass belongs to explicit validation
        manifest = load_manifest(manifest_path, deep=False)
    run = EvaluationRun(
        algorithm=algorithm,
        manifest_sha256=manifest_sha256(manifest_path),
        config=config,
    )
    index = load_index(pred_dir)

    manifest_ids = [record.image_id for _, record in manifest.iter_images()]
    todo = sorted(i for i in manifest_ids if i in index)
    for image_id in sorted(set(manifest_ids) - set(todo)):
        run.warnings.append("no prediction for image %r; skipped" % image_id)
    for image_id in sorted(set(index) - set(manifest_ids)):
        run.warnings.append("prediction for unknown image %r ignored" % image_id)

    backend_spec = resolve_backend_spec(config, run.warnings)

    if config.workers == 1 or len(todo) <= 1:
        backend = make_backend(backend_spec)
        results = [
            evaluate_single(manifest, pred_dir, index, image_id, config, backend)
            for image_id in todo
        ]
    else:
        with ProcessPoolExecutor(
            max_workers=config.workers,
            initializer=_init_worker,
            initargs=(manifest_path, pred_dir, config.to_dict(), backend_spec),
        ) as pool:
            results = list(pool.map(_evaluate_in_worker, todo, chunksize=4))

    run.per_image = sorted(results, key=lambda m: m.image_id)
    return run
