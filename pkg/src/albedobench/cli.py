"""Command-line interface.

Subcommands: validate, measure, derive-shading, evaluate, rank, synth,
report.  Exit codes: 0 success, 2 validation failure, 3 prediction I/O
failure, 4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import RunConfig
from .dataset import load_manifest, load_prediction_index, resolve_region_masks
from .errors import (
    AnnotationError,
    BackendUnavailable,
    DegenerateInputError,
    MeasurementError,
    ParameterError,
    ParseError,
    PredictionIOError,
    RankingError,
    ValidationError,
)
from .harness import run_evaluation
from .imgio import read_linear, read_mask, write_image, write_mask
from .measure import GrayCardCapture, build_shading_mask, derive_shading, measure_region_albedo, paint_albedo
from .ranking import DEFAULT_RANKING_METRICS, Leaderboard, scatter_svg
from .report import (
    build_report,
    load_report,
    render_summary_text,
    report_vector,
    write_metrics_csv,
    write_report,
)
from .synthkit import synth_corpus

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PREDICTION_IO = 3
EXIT_CONFIG = 4

# Short spellings accepted anywhere a metric name is expected.
METRIC_ALIASES = {
    "whdr": "whdr",
    "intensity": "intensity_si_mse",
    "intensity_si_mse": "intensity_si_mse",
    "chroma": "chroma_error",
    "chromaticity": "chroma_error",
    "chroma_error": "chroma_error",
    "texture": "texture_error",
    "texture_error": "texture_error",
    "shading": "shading_si_mse",
    "shading_si_mse": "shading_si_mse",
}


def canonical_metric(name: str) -> str:
    key = name.strip().lower()
    if key not in METRIC_ALIASES:
        raise ParameterError(
            "unknown metric %r; expected one of %s" % (name, ", ".join(sorted(set(METRIC_ALIASES))))
        )
    return METRIC_ALIASES[key]


def _err(msg: str) -> None:
    print("error: %s" % msg, file=sys.stderr)


# --- shared config flags ------------------------------------------------------

_DEFAULTS = RunConfig()


def add_config_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("metric configuration")
    g.add_argument("--delta", type=float, default=_DEFAULTS.delta,
                   help="relative-albedo ratio margin (default %(default)s)")
    g.add_argument("--sigma", type=float, default=_DEFAULTS.sigma,
                   help="shading comparison blur sigma in pixels (default %(default)s)")
    g.add_argument("--upsample", type=int, default=_DEFAULTS.upsample,
                   help="texture-metric upsampling factor (default %(default)s)")
    g.add_argument("--min-rect-side", type=int, default=_DEFAULTS.min_rect_side,
                   help="minimum texture crop side in pixels (default %(default)s)")
    g.add_argument("--saturation-threshold", type=int, default=_DEFAULTS.saturation_threshold,
                   help="8-bit level at which a pixel counts as saturated (default %(default)s)")
    g.add_argument("--texture-backend", default=_DEFAULTS.texture_backend,
                   help="'builtin' or 'external:HOST:PORT' (default %(default)s)")
    g.add_argument("--no-encode-texture-crops", dest="encode_texture_crops",
                   action="store_false", default=_DEFAULTS.encode_texture_crops,
                   help="hand linear rather than gamma-encoded crops to the backend")
    g.add_argument("--intensity-scale-target", choices=("gt", "pred"),
                   default=_DEFAULTS.intensity_scale_target,
                   help="which side the intensity fit rescales (default %(default)s)")
    g.add_argument("--shading-scale-target", choices=("gt", "pred"),
                   default=_DEFAULTS.shading_scale_target,
                   help="which side the shading fit rescales (default %(default)s)")
    g.add_argument("--hinge-tau", type=float, default=_DEFAULTS.hinge_tau,
                   help="hinge surrogate margin (default %(default)s)")
    g.add_argument("--loss-beta", type=float, default=_DEFAULTS.loss_beta,
                   help="hinge term weight in the training loss (default %(default)s)")
    g.add_argument("--loss-gamma", type=float, default=_DEFAULTS.loss_gamma,
                   help="texture term weight in the training loss (default %(default)s)")
    g.add_argument("--workers", type=int, default=_DEFAULTS.workers,
                   help="parallel evaluation workers (default %(default)s)")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        delta=args.delta,
        sigma=args.sigma,
        upsample=args.upsample,
        min_rect_side=args.min_rect_side,
        saturation_threshold=args.saturation_threshold,
        texture_backend=args.texture_backend,
        encode_texture_crops=args.encode_texture_crops,
        intensity_scale_target=args.intensity_scale_target,
        shading_scale_target=args.shading_scale_target,
        hinge_tau=args.hinge_tau,
        loss_beta=args.loss_beta,
        loss_gamma=args.loss_gamma,
        workers=args.workers,
    )


# --- subcommands --------------------------------------------------------------

def cmd_validate(args) -> int:
    manifest = load_manifest(args.manifest, deep=not args.fast)
    n_images = sum(1 for _ in manifest.iter_images())
    print("manifest OK: %d scene(s), %d image(s)" % (len(manifest.scenes), n_images))
    if args.predictions:
        index = load_prediction_index(args.predictions)
        ids = [rec.image_id for _, rec in manifest.iter_images()]
        missing = sorted(set(ids) - set(index))
        extra = sorted(set(index) - set(ids))
        print("predictions cover %d/%d image(s)" % (len(ids) - len(missing), len(ids)))
        for image_id in missing:
            print("  missing: %s" % image_id)
        for image_id in extra:
            print("  unknown: %s" % image_id)
    return EXIT_OK


def cmd_measure(args) -> int:
    with_proxy = read_linear(args.with_proxy, args.transfer)
    without_proxy = read_linear(args.without_proxy, args.transfer)
    mask = read_mask(args.mask)
    cap = GrayCardCapture(
        image_with_proxy=with_proxy,
        image_without_proxy=without_proxy,
        proxy_mask=mask,
        proxy_albedo=args.proxy_albedo,
    )
    albedo = measure_region_albedo(cap)
    print("measured albedo: %.8f %.8f %.8f" % tuple(albedo))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(
                {"albedo": [float(v) for v in albedo], "proxy_albedo": args.proxy_albedo},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
    return EXIT_OK


def cmd_derive_shading(args) -> int:
    config = config_from_args(args)
    manifest = load_manifest(args.manifest)
    for scene, record in manifest.iter_images():
        if record.image_id == args.image_id:
            break
    else:
        raise ValidationError(["image %r not found in manifest" % args.image_id])
    image = read_linear(manifest.resolve_path(record.file), record.transfer)
    h, w = image.shape[:2]
    resolved = resolve_region_masks(record, w, h, scene.measurement_map(), manifest.base_dir)
    if not resolved:
        raise ValidationError(["image %r has no usable regions" % args.image_id])
    sparse = resolved[0].mask.copy()
    for rr in resolved[1:]:
        sparse |= rr.mask
    painted = paint_albedo(resolved, w, h)
    mask = build_shading_mask(sparse, record.specular_polygons, image, config.saturation_threshold)
    gt = derive_shading(image, painted, config.sigma, region_mask=mask)
    os.makedirs(args.out_dir, exist_ok=True)
    shading_path = os.path.join(args.out_dir, "%s.shading.pfm" % record.image_id)
    mask_path = os.path.join(args.out_dir, "%s.mask.png" % record.image_id)
    write_image(shading_path, gt.shading)
    write_mask(mask_path, gt.mask)
    print("wrote %s (sigma=%g, %d/%d pixels in mask)" % (
        shading_path, gt.sigma, int(gt.mask.sum()), gt.mask.size))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = config_from_args(args)
    run = run_evaluation(args.manifest, args.predictions, args.algorithm, config)
    report = build_report(run)
    write_report(report, args.out)
    if args.csv:
        write_metrics_csv(report, args.csv)
    sys.stdout.write(render_summary_text(report))
    print("report written to %s" % args.out)
    return EXIT_OK


def _scores_file_vectors(path: str) -> list:
    from .metrics import MetricVector

    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError("scores file %s is not valid JSON: %s" % (path, exc)) from exc
    rows = doc.get("algorithms")
    if not isinstance(rows, list):
        raise ParseError("scores file %s: expected top-level key 'algorithms'" % path)
    vectors = []
    for row in rows:
        if "name" not in row:
            raise ParseError("scores file %s: every row needs a 'name'" % path)
        means = {
            canonical_metric(k): float(v)
            for k, v in row.items()
            if k != "name" and v is not None
        }
        vectors.append(MetricVector(algorithm=row["name"], means=means, counts={}))
    return vectors


def cmd_rank(args) -> int:
    vectors = []
    seen_hash = None
    for path in args.reports:
        rep = load_report(path)
        if seen_hash is None:
            seen_hash = rep["manifest_sha256"]
        elif rep["manifest_sha256"] != seen_hash:
            raise ValidationError([
                "report %s was scored against a different manifest (%s != %s)"
                % (path, rep["manifest_sha256"], seen_hash)
            ])
        vectors.append(report_vector(rep))
    if args.scores_file:
        vectors.extend(_scores_file_vectors(args.scores_file))
    if args.metrics:
        metrics = tuple(canonical_metric(m) for m in args.metrics.split(","))
    else:
        metrics = DEFAULT_RANKING_METRICS
    board = Leaderboard.build(vectors, metrics)
    sys.stdout.write(board.render_text())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(board.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.scatter:
        if not args.scatter_out:
            raise ParameterError("--scatter requires --scatter-out FILE")
        try:
            mx, my = args.scatter.split(":")
        except ValueError:
            raise ParameterError("--scatter wants METRIC_X:METRIC_Y, got %r" % args.scatter)
        svg = scatter_svg(board.vectors, canonical_metric(mx), canonical_metric(my))
        with open(args.scatter_out, "w", encoding="utf-8") as fh:
            fh.write(svg)
        print("scatter written to %s" % args.scatter_out)
    return EXIT_OK


def parse_corruptions(specs) -> list:
    out = []
    for spec in specs or []:
        for item in spec.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise ParameterError("corruption %r is not KIND=MAGNITUDE" % item)
            kind, _, mag = item.partition("=")
            try:
                out.append((kind.strip(), float(mag)))
            except ValueError:
                raise ParameterError("corruption magnitude %r is not a number" % mag)
    return out


def cmd_synth(args) -> int:
    corruptions = parse_corruptions(args.corrupt)
    out = synth_corpus(
        args.out_dir,
        n_scenes=args.scenes,
        base_seed=args.seed,
        width=args.width,
        height=args.height,
        n_regions=args.regions,
        n_judgements=args.judgements,
        corruptions=corruptions,
        image_format=args.format,
    )
    print("manifest: %s" % out["manifest"])
    for name in sorted(out["prediction_sets"]):
        print("predictions[%s]: %s" % (name, out["prediction_sets"][name]))
    return EXIT_OK


def cmd_report(args) -> int:
    rep = load_report(args.report)
    sys.stdout.write(render_summary_text(rep))
    if args.csv:
        write_metrics_csv(rep, args.csv)
        print("csv written to %s" % args.csv)
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="albedobench",
        description="Measured-albedo benchmark: dataset tools, metrics, ranking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a manifest (and optional prediction dir)")
    p.add_argument("manifest")
    p.add_argument("--predictions", help="prediction directory to cross-check coverage")
    p.add_argument("--fast", action="store_true", help="skip opening image files")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("measure", help="measure region albedo from a proxy-card capture pair")
    p.add_argument("--with-proxy", required=True, help="capture with the proxy card in place")
    p.add_argument("--without-proxy", required=True, help="capture of the bare surface")
    p.add_argument("--mask", required=True, help="proxy-region mask image")
    p.add_argument("--proxy-albedo", type=float, default=0.18)
    p.add_argument("--transfer", choices=("linear", "srgb"), default="linear")
    p.add_argument("--out", help="write the measurement as JSON")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("derive-shading", help="compute blurred ground-truth shading for one image")
    p.add_argument("manifest")
    p.add_argument("--image-id", required=True)
    p.add_argument("--out-dir", required=True)
    add_config_args(p)
    p.set_defaults(func=cmd_derive_shading)

    p = sub.add_parser("evaluate", help="score one prediction set against a manifest")
    p.add_argument("manifest")
    p.add_argument("predictions", help="directory with index.json and prediction images")
    p.add_argument("--algorithm", required=True, help="name recorded in the report")
    p.add_argument("--out", required=True, help="path for the JSON report")
    p.add_argument("--csv", help="also write a per-image CSV table")
    add_config_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="aggregate reports into a relative-improvement leaderboard")
    p.add_argument("reports", nargs="*", help="JSON reports from `evaluate`")
    p.add_argument("--scores-file", help="JSON fixture with published per-algorithm metric means")
    p.add_argument("--metrics", help="comma-separated metric subset (default: %s)" %
                   ",".join(DEFAULT_RANKING_METRICS))
    p.add_argument("--out", help="write leaderboard JSON here")
    p.add_argument("--scatter", metavar="MX:MY", help="emit an SVG scatter for a metric pair")
    p.add_argument("--scatter-out", help="SVG output path for --scatter")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("out_dir")
    p.add_argument("--scenes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=384)
    p.add_argument("--regions", type=int, default=6)
    p.add_argument("--judgements", type=int, default=12)
    p.add_argument("--format", choices=("pfm", "npy", "png"), default="pfm")
    p.add_argument("--corrupt", action="append", metavar="KIND=MAG[,KIND=MAG...]",
                   help="add corrupted prediction sets (scale, tint, contrast, blur)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="render an existing JSON report as text/CSV")
    p.add_argument("report")
    p.add_argument("--csv", help="write a per-image CSV table")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except PredictionIOError as exc:
        _err(str(exc))
        return EXIT_PREDICTION_IO
    except (ValidationError, ParseError, AnnotationError, MeasurementError,
            DegenerateInputError, RankingError, BackendUnavailable) as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    except OSError as exc:
        _err(str(exc))
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
