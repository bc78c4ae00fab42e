#!/usr/bin/env python3
"""Regenerate the bundled benchmark datasets under data/ as libsvm files.

The raw files come from the KEEL repository copies shipped inside the
``keel-ds`` wheel (https://pypi.org/project/keel-ds/), which mirror the UCI
originals. Usage:

    pip download keel-ds --no-deps -d /tmp/keel
    python3 tools/fetch_datasets.py --wheel /tmp/keel/keel_ds-*.whl --out data

Labels are written as +1/-1. The positive class of each set is listed in
POSITIVE below; wine is turned into "class 2 vs. classes 1 and 3".
"""

import argparse
import glob
import zipfile
from pathlib import Path

RAW_PREFIX = "keel_ds/data/balanced/raw/"

# bundled name -> (keel file, positive class token)
POSITIVE = {
    "australian": ("australian", "1"),
    "breast": ("wisconsin", "4"),
    "heart": ("heart", "2"),
    "ionosphere": ("ionosphere", "g"),
    "pima": ("pima", "tested_positive"),
    "sonar": ("sonar", "M"),
    "wdbc": ("wdbc", "M"),
    "wine": ("wine", "2"),
}


def parse_keel(text):
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@") or line.startswith("%"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if "?" in fields:
            continue
        rows.append(([float(v) for v in fields[:-1]], fields[-1]))
    return rows


def write_libsvm(path, rows, positive):
    with open(path, "w", newline="\n") as out:
        for features, label in rows:
            y = "+1" if label == positive else "-1"
            cols = " ".join(f"{i + 1}:{v:.17g}" for i, v in enumerate(features))
            out.write(f"{y} {cols}\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--wheel", required=True, help="path or glob of the keel-ds wheel")
    parser.add_argument("--out", default="data")
    args = parser.parse_args()

    wheel = sorted(glob.glob(args.wheel))[-1]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(wheel) as z:
        for name, (keel_name, positive) in sorted(POSITIVE.items()):
            rows = parse_keel(z.read(RAW_PREFIX + keel_name + ".dat").decode())
            write_libsvm(out_dir / f"{name}.libsvm", rows, positive)
            n_pos = sum(1 for _, label in rows if label == positive)
            print(f"{name}: n={len(rows)} d={len(rows[0][0])} positive={n_pos}")


if __name__ == "__main__":
    main()
