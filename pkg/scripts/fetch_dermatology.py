"""Download the UCI Dermatology data and write data/dermatology.csv.

Rows with a missing age ('?') are dropped, leaving 358 of 366.
"""
import argparse
import csv
import io
import urllib.request
from pathlib import Path

URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/dermatology/dermatology.data"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--url", default=URL)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "dermatology.csv"))
    args = ap.parse_args()
    with urllib.request.urlopen(args.url, timeout=60) as resp:
        text = resp.read().decode()
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    kept = [r for r in rows if "?" not in r]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*(f"f{j}" for j in range(1, 34)), "age", "class"])
        w.writerows(kept)
    print(f"wrote {len(kept)} rows ({len(rows) - len(kept)} with missing values dropped) to {args.out}")


if __name__ == "__main__":
    main()
