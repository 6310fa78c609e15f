"""Machine-readable evaluation reports: canonical JSON, CSV tables.

Reports are written with sorted keys, fixed indentation and no timestamps,
so running the same evaluation twice yields byte-identical files.  Every
report embeds the sha256 of the manifest it was scored against and a full
echo of the configuration, which lets `rank` refuse to compare runs from
different datasets or settings.
"""

from __future__ import annotations

import csv
import io
import json

from . import __version__
from .errors import ParseError
from .harness import EvaluationRun
from .metrics import METRIC_NAMES, MetricVector

REPORT_SCHEMA = 1

_REQUIRED_KEYS = ("schema", "algorithm", "manifest_sha256", "config", "summary", "images")


def build_report(run: EvaluationRun) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "toolkit_version": __version__,
        "algorithm": run.algorithm,
        "manifest_sha256": run.manifest_sha256,
        "config": run.config.to_dict(),
        "n_images_scored": len(run.per_image),
        "warnings": list(run.warnings),
        "summary": run.vector().to_dict(),
        "images": [m.to_dict() for m in run.per_image],
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_report(report))


def load_report(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError("report %s is not valid JSON: %s" % (path, exc)) from exc
    if not isinstance(doc, dict):
        raise ParseError("report %s: expected a JSON object" % path)
    missing = [k for k in _REQUIRED_KEYS if k not in doc]
    if missing:
        raise ParseError("report %s missing keys: %s" % (path, ", ".join(missing)))
    if doc["schema"] != REPORT_SCHEMA:
        raise ParseError("report %s has schema %r, expected %r" % (path, doc["schema"], REPORT_SCHEMA))
    return doc


def report_vector(report: dict) -> MetricVector:
    """Per-algorithm metric means as consumed by the ranking stage."""
    summary = report["summary"]
    return MetricVector(
        algorithm=report["algorithm"],
        means={k: v for k, v in summary.get("means", {}).items() if v is not None},
        counts=dict(summary.get("counts", {})),
    )


def metrics_csv(report: dict) -> str:
    """Per-image metric table plus a MEAN row, one column per metric."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("image_id",) + METRIC_NAMES)
    for image in report["images"]:
        writer.writerow(
            [image["image_id"]]
            + ["" if image.get(k) is None else repr(image[k]) for k in METRIC_NAMES]
        )
    means = report["summary"].get("means", {})
    writer.writerow(
        ["MEAN"] + ["" if means.get(k) is None else repr(means[k]) for k in METRIC_NAMES]
    )
    return buf.getvalue()


def write_metrics_csv(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(metrics_csv(report))


def render_summary_text(report: dict) -> str:
    """Short human-readable digest of one report."""
    lines = []
    lines.append("algorithm: %s" % report["algorithm"])
    lines.append("images scored: %d" % report.get("n_images_scored", len(report["images"])))
    lines.append("manifest sha256: %s" % report["manifest_sha256"])
    means = report["summary"].get("means", {})
    counts = report["summary"].get("counts", {})
    width = max(len(n) for n in METRIC_NAMES)
    for name in METRIC_NAMES:
        value = means.get(name)
        shown = "n/a" if value is None else "%.6g" % value
        lines.append("  %-*s  %12s  (n=%d)" % (width, name, shown, counts.get(name, 0)))
    for w in report.get("warnings", []):
        lines.append("warning: %s" % w)
    return "\n".join(lines) + "\n"
