"""Real-data experiment: TR median and contours, outliers, and both measure rows.

    python scripts/real_data_pipeline.py data/olsson_poincare.csv --outdir results/real

Writes contours.svg, outliers.svg and real.json to ``--outdir``.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hyperquantile import io  # noqa: E402
from hyperquantile.experiments import MEASURES, REAL_EXTREME, REAL_MODERATE, real_data_pipeline, row_values  # noqa: E402
from hyperquantile.svg import contour_figure  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("--outdir", default="results/real")
    ns = ap.parse_args()
    data, _ = io.read_csv(ns.csv)
    out = real_data_pipeline(data)
    od = Path(ns.outdir)
    od.mkdir(parents=True, exist_ok=True)

    contours = [(0.0, out["tr_median"][None])] + [(b, c.contour.points) for b, c in out["contours"].items()]
    io.atomic_write(od / "contours.svg", contour_figure(data.points, contours, labels=data.labels))
    half = out["outliers_fence"].contour.contour
    extra = [("fence", out["outliers_fence"].boundary, "#d7191c"),
             ("extreme", out["outliers_extreme"].boundary, "#1a9641")]
    io.atomic_write(od / "outliers.svg", contour_figure(data.points, [(0.5, half.points)], labels=data.labels,
                                                        extra=extra))

    rows = {}
    for name, rep, ref in (("moderate", out["moderate"], REAL_MODERATE), ("extreme", out["extreme"], REAL_EXTREME)):
        got = row_values(rep)
        rows[name] = {"values": dict(zip(MEASURES, got.tolist())), "published": dict(zip(MEASURES, ref.tolist()))}
        print(name + ": " + "  ".join(f"{m}={g:.3f} [{r:.3f}]" for m, g, r in zip(MEASURES, got, ref)))
    print("outliers (extreme contour):", out["outliers_extreme"].outliers)
    print("outliers (fence):", out["outliers_fence"].outliers)
    io.write_json(od / "real.json", {
        "tr_median": io.point_json(out["tr_median"]),
        "median": io.point_json(out["median"]),
        "frame": {"A": out["frame"].A.tolist(), "indices": list(out["frame"].indices)},
        "outliers_extreme": out["outliers_extreme"].outliers,
        "outliers_fence": out["outliers_fence"].outliers,
        "measures": rows,
        "seconds": out["seconds"],
    })
    print(f"done in {out['seconds']:.1f}s; artifacts in {od}")


if __name__ == "__main__":
    main()
