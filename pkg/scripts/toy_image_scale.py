"""MNIST-shaped 10-class Gaussian toy: hold-out BACC of none / smote / rcs with the embedder on.

Sweeps data seeds, run seeds and the space the classifier is trained in, to show how
stable the comparison is.
"""
import argparse
import itertools
import logging
import time

from rcs.evaluation import MNIST_TRAIN_COUNTS, RunConfig, holdout, imbalanced_toy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-seeds", type=int, nargs="+", default=[0, 1])
    ap.add_argument("--seeds", type=int, nargs="+", default=[42, 7])
    ap.add_argument("--spaces", nargs="+", default=["latent", "input"], choices=["latent", "input"])
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--spread", type=float, default=1.0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)
    counts = [c // 10 for c in MNIST_TRAIN_COUNTS]
    print("data_seed  seed  space   none   smote  rcs    ok   secs")
    for dseed, space, seed in itertools.product(args.data_seeds, args.spaces, args.seeds):
        train, test = imbalanced_toy(counts, 100, args.dim, seed=dseed, spread=args.spread)
        cfg = RunConfig(eta=7, k=5, use_embedder=True, classify_in=space, seed=seed)
        t0 = time.perf_counter()
        r = {m: v["bacc"] for m, v in holdout(train, test, cfg, ["none", "smote", "rcs"]).items()}
        ok = r["rcs"] >= r["none"] and r["rcs"] >= r["smote"] - 0.02
        print(f"{dseed:9d}  {seed:4d}  {space:6s}  {r['none']:.3f}  {r['smote']:.3f}  {r['rcs']:.3f}  "
              f"{'yes' if ok else 'no ':3s}  {time.perf_counter() - t0:.0f}")


if __name__ == "__main__":
    main()
