"""Convert the published Olsson Poincare-disk embedding (.npz) to the CSV contract.

Usage:
    python scripts/ingest_olsson.py olsson_poincare_embedding.npz data/olsson_poincare.csv

Output columns: ``x,y,label`` (Poincare disk), one row per cell.

Preprocessing is inferred, not documented upstream. The archive is split
into several sets; every 2-column float array is taken as a block of disk
coordinates and paired with the integer/string array whose key shares its
suffix (``x_train``/``y_train`` style) or, failing that, has the same
length. Blocks are concatenated in sorted key order. The combined set must
have 319 rows with eight distinct labels; anything else aborts rather than
silently producing a different data set. Points on or outside the unit
circle (possible after float32 storage) are pulled inside by 1e-12.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hyperquantile import io  # noqa: E402
from hyperquantile.geometry import from_ball  # noqa: E402
from hyperquantile.solver import Dataset  # noqa: E402

EXPECTED_ROWS = 319
EXPECTED_LABELS = 8


def _suffix(key):
    return key.split("_", 1)[1] if "_" in key else ""


def combine(arrays):
    coords = {k: np.asarray(v, dtype=float) for k, v in arrays.items()
              if np.ndim(v) == 2 and np.shape(v)[1] == 2 and np.issubdtype(np.asarray(v).dtype, np.floating)}
    if not coords:
        raise SystemExit("no (n, 2) coordinate arrays found; keys: " + ", ".join(arrays))
    others = {k: np.asarray(v) for k, v in arrays.items() if k not in coords and np.ndim(v) == 1}
    blocks, labels = [], []
    for k in sorted(coords):
        X = coords[k]
        match = [o for o in others if _suffix(o) == _suffix(k) and len(others[o]) == len(X)]
        if not match:
            match = [o for o in others if len(others[o]) == len(X)]
        blocks.append(X)
        labels.extend(str(v) for v in others[match[0]]) if match else labels.extend(["na"] * len(X))
        print(f"  block {k}: {len(X)} rows, labels from {match[0] if match else 'none'}")
    return np.vstack(blocks), labels


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("npz")
    ap.add_argument("out")
    ns = ap.parse_args(argv)
    arrays = dict(np.load(ns.npz, allow_pickle=False))
    print("keys:", ", ".join(f"{k}{np.shape(v)}" for k, v in arrays.items()))
    B, labels = combine(arrays)
    r = np.linalg.norm(B, axis=1)
    B[r >= 1] *= ((1 - 1e-12) / r[r >= 1])[:, None]
    if len(B) != EXPECTED_ROWS:
        raise SystemExit(f"combined set has {len(B)} rows, expected {EXPECTED_ROWS}")
    if len(set(labels)) != EXPECTED_LABELS:
        print(f"warning: {len(set(labels))} distinct labels, expected {EXPECTED_LABELS}", file=sys.stderr)
    Path(ns.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_csv(ns.out, Dataset(from_ball(B), labels), "poincare")
    print(f"wrote {len(B)} rows to {ns.out}")


if __name__ == "__main__":
    main()
