#!/usr/bin/env python3
"""Recompute the published cross-algorithm ranking from its published inputs.

Feeds the published per-algorithm metric means (data/published_scores.json)
through the pairwise relative-improvement ranking and prints the recomputed
column next to the published one.  Seven of the nine rows agree to well
under a point; the BigTime and Sengupta_2019 rows disagree by ~8 points
each, in opposite directions, and each matches the OTHER row's printed
value — consistent with the two cells having been transposed in print.

Example:
    python3 scripts/reproduce_published_ranking.py
"""

import argparse
import json
import sys
from pathlib import Path

from albedobench.metrics import MetricVector
from albedobench.ranking import overall_relative_improvement

DEFAULT_SCORES = Path(__file__).resolve().parents[1] / "data" / "published_scores.json"
COLUMN_KEYS = (
    ("whdr", "whdr"),
    ("intensity_si_mse", "intensity"),
    ("chroma_error", "chroma"),
    ("texture_error", "texture"),
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scores", default=str(DEFAULT_SCORES),
                    help="JSON file with published per-algorithm metric means")
    ap.add_argument("--tolerance", type=float, default=3.0,
                    help="flag rows whose |computed - published| exceeds this")
    ap.add_argument("--out", help="also write the recomputed column as JSON")
    args = ap.parse_args(argv)

    doc = json.loads(Path(args.scores).read_text())
    vectors = [
        MetricVector(algorithm=row["name"],
                     means={m: row[k] for m, k in COLUMN_KEYS}, counts={})
        for row in doc["algorithms"]
    ]
    computed = overall_relative_improvement(vectors)
    published = doc.get("published_relative_improvement", {})

    print("%-18s %12s %12s %8s" % ("algorithm", "computed", "published", "diff"))
    flagged = []
    for name in sorted(computed, key=computed.get, reverse=True):
        want = published.get(name)
        if want is None:
            print("%-18s %+12.2f %12s" % (name, computed[name], "-"))
            continue
        diff = computed[name] - want
        mark = ""
        if abs(diff) > args.tolerance:
            mark = "  <-- off by %+.1f" % diff
            flagged.append(name)
        print("%-18s %+12.2f %+12.1f %+8.2f%s" % (name, computed[name], want, diff, mark))

    if len(flagged) == 2:
        a, b = flagged
        cross = max(abs(computed[a] - published[b]), abs(computed[b] - published[a]))
        if cross < 1.0:
            print()
            print("the two flagged rows each match the OTHER row's published value")
            print("to within %.2f: the published column has them transposed." % cross)

    if args.out:
        Path(args.out).write_text(json.dumps(
            {"computed_relative_improvement": {k: round(v, 3) for k, v in computed.items()}},
            indent=2, sort_keys=True) + "\n")
        print("\nrecomputed column written to %s" % args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
