"""Write the UCI Wine data bundled with scikit-learn to data/wine.csv."""
import argparse
import csv
from pathlib import Path

from sklearn.datasets import load_wine


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "wine.csv"))
    args = ap.parse_args()
    bunch = load_wine()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*bunch.feature_names, "class"])
        for row, y in zip(bunch.data, bunch.target):
            w.writerow([*(repr(float(v)) for v in row), int(y) + 1])
    print(f"wrote {len(bunch.target)} rows to {args.out}")


if __name__ == "__main__":
    main()
