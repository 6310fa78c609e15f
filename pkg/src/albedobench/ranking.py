"""Cross-algorithm aggregation: relative improvement and leaderboards.

Error metrics live on incompatible scales (a WHDR point is not a ΔE00
unit), so algorithms are compared through the pairwise relative-improvement
measure

    R_{i,k}(m) = (A_k(m) - A_i(m)) * (1/A_i(m) + 1/A_k(m))

which is antisymmetric, dimensionless, and invariant to rescaling metric m
by a common positive factor.  An algorithm's overall score averages R over
all opponents and all selected metrics and is reported as a percentage:

    P(A_i) = 100 / (L-1) * sum_{k != i} 1/M * sum_j R_{i,k}(m_j)

Lower metric values are better, so positive P means algorithm i improves on
the field.  By default only the four albedo metrics enter the ranking; the
shading metric is excluded because most algorithms do not submit shading.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import RankingError
from .metrics import MetricVector

DEFAULT_RANKING_METRICS = ("whdr", "intensity_si_mse", "chroma_error", "texture_error")


def relative_improvement_pair(a_i, a_k, algorithm: str = "?", metric: str = "?") -> float:
    """Pairwise relative improvement of algorithm i over k on one metric.

    Positive when a_i < a_k (algorithm i has the lower error).  Both values
    must be strictly positive; ``algorithm``/``metric`` only decorate the
    error message.
    """
    if a_i is None or not a_i > 0.0:
        raise RankingError(
            "metric %r of algorithm %r must be positive to rank, got %r" % (metric, algorithm, a_i)
        )
    if a_k is None or not a_k > 0.0:
        raise RankingError(
            "opponent value on metric %r must be positive to rank, got %r" % (metric, a_k)
        )
    a_i = float(a_i)
    a_k = float(a_k)
    return (a_k - a_i) * (1.0 / a_i + 1.0 / a_k)


def overall_relative_improvement(vectors, metrics=DEFAULT_RANKING_METRICS) -> dict:
    """P(A_i) per algorithm, in percent.

    ``vectors`` are MetricVector instances (or anything with ``algorithm``
    and ``means``).  Every ranked algorithm must have a positive value for
    every selected metric.
    """
    if len(vectors) < 2:
        raise RankingError("ranking needs at least 2 algorithms, got %d" % len(vectors))
    if not metrics:
        raise RankingError("ranking needs at least 1 metric")
    names = [v.algorithm for v in vectors]
    if len(set(names)) != len(names):
        raise RankingError("duplicate algorithm names: %r" % names)
    for v in vectors:
        for m in metrics:
            value = v.means.get(m)
            if value is None or not value > 0.0:
                raise RankingError(
                    "metric %r of algorithm %r must be positive to rank, got %r"
                    % (m, v.algorithm, value)
                )
    n = len(vectors)
    scores = {}
    for i, vi in enumerate(vectors):
        total = 0.0
        for k, vk in enumerate(vectors):
            if k == i:
                continue
            pair = sum(
                relative_improvement_pair(vi.means[m], vk.means[m], vi.algorithm, m)
                for m in metrics
            ) / len(metrics)
            total += pair
        scores[vi.algorithm] = 100.0 * total / (n - 1)
    return scores


@dataclass
class Leaderboard:
    """Ranked cross-algorithm comparison over a metric subset."""

    vectors: list
    metrics: tuple
    scores: dict  # algorithm -> P(A_i) in percent

    @classmethod
    def build(cls, vectors, metrics=DEFAULT_RANKING_METRICS) -> "Leaderboard":
        return cls(
            vectors=list(vectors),
            metrics=tuple(metrics),
            scores=overall_relative_improvement(vectors, metrics),
        )

    def ranked(self):
        """Vectors sorted by score, best first (name breaks exact ties)."""
        return sorted(self.vectors, key=lambda v: (-self.scores[v.algorithm], v.algorithm))

    def to_dict(self):
        return {
            "metrics": list(self.metrics),
            "scores": {name: float(p) for name, p in sorted(self.scores.items())},
            "ranking": [v.algorithm for v in self.ranked()],
            "vectors": [v.to_dict() for v in self.ranked()],
        }

    def render_text(self) -> str:
        """Fixed-width leaderboard table, one decimal on the percentage."""
        header = ["rank", "algorithm", "rel.improv.%"] + list(self.metrics)
        rows = []
        for pos, v in enumerate(self.ranked(), start=1):
            rows.append(
                [str(pos), v.algorithm, "%+.1f" % self.scores[v.algorithm]]
                + ["%.4g" % v.means[m] for m in self.metrics]
            )
        widths = [max(len(r[c]) for r in [header] + rows) for c in range(len(header))]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
            "  ".join("-" * w for w in widths),
        ]
        for r in rows:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"


def scatter_svg(vectors, metric_x: str, metric_y: str, width: int = 640, height: int = 480) -> str:
    """Labeled scatter plot of two metrics across algorithms, as an SVG string.

    Deterministic output: algorithms are drawn in name order and all
    coordinates are formatted with fixed precision.
    """
    pts = []
    for v in sorted(vectors, key=lambda v: v.algorithm):
        x = v.means.get(metric_x)
        y = v.means.get(metric_y)
        if x is None or y is None:
            raise RankingError(
                "algorithm %r lacks metric %r" % (v.algorithm, metric_x if x is None else metric_y)
            )
        pts.append((v.algorithm, float(x), float(y)))
    if not pts:
        raise RankingError("no algorithms to plot")

    margin = 60.0
    xs = [p[1] for p in pts]
    ys = [p[2] for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = (x_hi - x_lo) * 0.1 or max(abs(x_hi), 1e-8) * 0.1
    y_pad = (y_hi - y_lo) * 0.1 or max(abs(y_hi), 1e-8) * 0.1
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def sx(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    out = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (width, height, width, height),
        '<rect width="%d" height="%d" fill="white"/>' % (width, height),
        '<line x1="%.1f" y1="%.1f" x2="%.1f" y2="%.1f" stroke="black"/>'
        % (margin, height - margin, width - margin, height - margin),
        '<line x1="%.1f" y1="%.1f" x2="%.1f" y2="%.1f" stroke="black"/>'
        % (margin, margin, margin, height - margin),
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        out.append(
            '<text x="%.1f" y="%.1f" font-size="11" text-anchor="middle">%.3g</text>'
            % (sx(xv), height - margin + 18, xv)
        )
        out.append(
            '<text x="%.1f" y="%.1f" font-size="11" text-anchor="end">%.3g</text>'
            % (margin - 6, sy(yv) + 4, yv)
        )
    out.append(
        '<text x="%.1f" y="%.1f" font-size="13" text-anchor="middle">%s</text>'
        % (width / 2, height - 16, metric_x)
    )
    out.append(
        '<text x="16" y="%.1f" font-size="13" text-anchor="middle" '
        'transform="rotate(-90 16 %.1f)">%s</text>' % (height / 2, height / 2, metric_y)
    )
    for name, x, y in pts:
        out.append('<circle cx="%.2f" cy="%.2f" r="4" fill="#1f6fb2"/>' % (sx(x), sy(y)))
        out.append(
            '<text x="%.2f" y="%.2f" font-size="11">%s</text>' % (sx(x) + 6, sy(y) - 6, name)
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
