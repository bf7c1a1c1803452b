"""Convert a MATLAB cube + ground-truth pair to the hstc on-disk format.

    python3 tools/mat_to_hstc.py PaviaU.mat PaviaU_gt.mat data/pavia

writes data/pavia.json, data/pavia.raw (BSQ little-endian f32) and
data/pavia.labels.raw (row-major little-endian u16, 0 = unlabeled).
"""

import argparse
import json
from pathlib import Path

import numpy as np
from scipy.io import loadmat


def only_array(path, key):
    data = loadmat(path)
    if key:
        return data[key]
    arrays = [v for k, v in data.items() if not k.startswith("__") and isinstance(v, np.ndarray)]
    if len(arrays) != 1:
        raise SystemExit(f"{path}: expected one array, found {len(arrays)}; pass --cube-key/--labels-key")
    return arrays[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("cube")
    ap.add_argument("labels")
    ap.add_argument("stem")
    ap.add_argument("--cube-key")
    ap.add_argument("--labels-key")
    args = ap.parse_args()

    cube = np.asarray(only_array(args.cube, args.cube_key), dtype="<f4")
    labels = np.asarray(only_array(args.labels, args.labels_key), dtype="<u2")
    if cube.ndim != 3 or labels.shape != cube.shape[:2]:
        raise SystemExit(f"shape mismatch: cube {cube.shape}, labels {labels.shape}")
    h, w, b = cube.shape

    stem = Path(args.stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    header = {"magic": "HSTC1", "height": h, "width": w, "bands": b,
              "dtype": "f32", "order": "bsq", "endianness": "little"}
    Path(f"{stem}.json").write_text(json.dumps(header))
    # band-sequential: B planes of H×W, row-major within a plane
    np.ascontiguousarray(cube.transpose(2, 0, 1)).tofile(f"{stem}.raw")
    np.ascontiguousarray(labels).tofile(f"{stem}.labels.raw")
    print(f"{h}x{w}x{b}, classes 1..{labels.max()}, {int((labels > 0).sum())} labeled pixels")


if __name__ == "__main__":
    main()
