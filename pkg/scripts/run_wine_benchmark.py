"""Five-fold Wine benchmark of none / ros / smote / rcs, with and without standardization."""
import argparse
import time
from dataclasses import replace
from pathlib import Path

from rcs.dataset import load_csv
from rcs.evaluation import RunConfig, benchmark, dumps, format_table

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default=str(ROOT / "data" / "wine.csv"))
    ap.add_argument("--out-dir", default=str(ROOT / "out" / "wine"))
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    ds = load_csv(args.data, "class")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = RunConfig(eta=1.3, k=3, seed=args.seed)
    for tag, cfg in (("standardized", base), ("raw", replace(base, standardize=False))):
        t0 = time.perf_counter()
        bench = benchmark(ds, cfg)
        (out / f"benchmark_{tag}.json").write_text(dumps(bench))
        print(f"[{tag}] {time.perf_counter() - t0:.1f}s")
        print(format_table(bench))


if __name__ == "__main__":
    main()
