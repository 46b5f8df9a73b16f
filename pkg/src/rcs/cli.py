"""Command-line entry point: ``rcs <command> [flags]``.

Settings come from, in increasing priority: built-in defaults, the
``[common]`` section of ``--config``, the command's own section, and flags.
"""
from __future__ import annotations

import argparse
import configparser
import itertools
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import compute_threshold, partition_classes
from .dataset import class_counts, load_csv, standardize_fit_transform, write_csv
from .embedder import encode, train_autoencoder
from .errors import RcsError
from .evaluation import METHODS, RunConfig, benchmark, dumps, evaluate, format_table, oversample
from .gmm import component_count
from .nn import AutoencoderNets, LossSpec, backward, finite_diff_gradcheck, mlp_init

log = logging.getLogger("rcs")

COMMANDS = ("inspect", "oversample", "embed", "evaluate", "benchmark", "gradcheck")

GRAD_TOL = 1e-4
GRAD_TOL_MSE = 1e-6


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise RcsError(f"not a boolean: {s!r}")


def _ints(s) -> tuple[int, ...]:
    if isinstance(s, (tuple, list)):
        return tuple(int(v) for v in s)
    return tuple(int(v) for v in str(s).replace(",", " ").split())


def _words(s) -> tuple[str, ...]:
    if isinstance(s, (tuple, list)):
        return tuple(s)
    return tuple(v for v in str(s).replace(",", " ").split())


def _opt_int(s):
    return None if s in (None, "", "none", "None") else int(s)


CASTS = {
    "data": str, "label_col": str, "has_header": _bool, "method": str, "methods": _words, "eta": float,
    "k": int, "smote_k": int, "temp": float, "latent_dim": _opt_int, "use_embedder": _bool,
    "classify_in": str, "ae_epochs": int, "ae_lr": float, "classifier_hidden": _ints, "epochs": int,
    "lr": float, "batch": int, "folds": int, "standardize": _bool, "seed": int, "workers": int,
    "out_dir": str,
}
EM_CASTS = {"em_max_iters": ("max_iters", int), "em_tol": ("tol", float), "em_restarts": ("restarts", int),
            "em_init": ("init", str)}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("shared")
    g.add_argument("--config", help="key = value file with [common] and per-command sections")
    g.add_argument("--data", help="input CSV")
    g.add_argument("--label-col", dest="label_col", help="label column name or zero-based index (default -1)")
    g.add_argument("--no-header", dest="has_header", action="store_const", const=False, default=None)
    g.add_argument("--method", choices=METHODS)
    g.add_argument("--methods", help="comma-separated methods for benchmark")
    g.add_argument("--eta", type=float)
    g.add_argument("--k", type=int)
    g.add_argument("--smote-k", dest="smote_k", type=int)
    g.add_argument("--temp", type=float)
    g.add_argument("--latent-dim", dest="latent_dim", type=int)
    g.add_argument("--use-embedder", dest="use_embedder", action="store_const", const=True, default=None)
    g.add_argument("--classify-in", dest="classify_in", choices=("input", "latent"))
    g.add_argument("--ae-epochs", dest="ae_epochs", type=int)
    g.add_argument("--epochs", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--batch", type=int)
    g.add_argument("--hidden", dest="classifier_hidden", help="classifier hidden widths, e.g. 64,32")
    g.add_argument("--folds", type=int)
    g.add_argument("--no-standardize", dest="standardize", action="store_const", const=False, default=None)
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--out-dir", dest="out_dir")
    g.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="rcs", description="Oversampling with calibrated sub-classes.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("inspect", parents=[common], help="class counts, threshold and generation plan")
    sub.add_parser("oversample", parents=[common], help="write a balanced CSV and a run report")
    sub.add_parser("embed", parents=[common], help="train the autoencoder and write latent CSV")
    sub.add_parser("evaluate", parents=[common], help="stratified k-fold evaluation of one method")
    sub.add_parser("benchmark", parents=[common], help="evaluate several methods on the same folds")
    gc = sub.add_parser("gradcheck", parents=[common], help="finite-difference check of all loss gradients")
    gc.add_argument("--corrupt-gradient", dest="corrupt", type=float, default=0.0,
                    help=argparse.SUPPRESS)
    return ap


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    em: dict = {}
    if args.config:
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        if not cp.read(args.config):
            raise RcsError(f"cannot read config file {args.config}")
        for section in ("common", args.command):
            if cp.has_section(section):
                for key, raw in cp.items(section, raw=True):
                    key = key.replace("-", "_")
                    if key in CASTS:
                        values[key] = CASTS[key](raw)
                    elif key in EM_CASTS:
                        name, cast = EM_CASTS[key]
                        em[name] = cast(raw)
                    elif key not in ("config",):
                        raise RcsError(f"unknown config key {key!r} in [{section}]")
    for f in CASTS:
        v = getattr(args, f, None)
        if v is not None:
            values[f] = CASTS[f](v)
    cfg = RunConfig(**values)
    if em:
        cfg = replace(cfg, em=replace(cfg.em, **em))
    return cfg


def _load(cfg: RunConfig):
    if not cfg.data:
        raise RcsError("--data is required")
    return load_csv(cfg.data, cfg.label_col, cfg.has_header)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_inspect(cfg: RunConfig) -> dict:
    ds = _load(cfg)
    counts = class_counts(ds)
    zeta = compute_threshold(counts.N1, cfg.eta)
    part = partition_classes(counts, zeta)
    role = {part.majority: "majority", **{c: "intermediate" for c in part.intermediate},
            **{c: "minority" for c in part.minority}}
    per_class = []
    for c, n in counts.ordered:
        modelled = role[c] == "intermediate" and n < counts.N1 or role[c] == "majority" and part.minority
        per_class.append({"label": ds.label_names[c], "N": n, "group": role[c],
                          "xi": component_count(n, counts.NK) if modelled else 0,
                          "n_planned": counts.N1 - n})
    report = {"n": len(ds), "d": ds.dim, "K": len(counts.ordered), "N1": counts.N1, "NK": counts.NK,
              "eta": cfg.eta, "zeta": zeta, "partition": part.to_json(),
              "partition_sizes": [1, len(part.intermediate), len(part.minority)], "per_class": per_class,
              "generation_needed": counts.N1 != counts.NK}
    lines = [f"rows={len(ds)} features={ds.dim} classes={len(counts.ordered)}",
             f"N1={counts.N1} NK={counts.NK} eta={cfg.eta} zeta={zeta:.2f}"]
    lines += [f"  {r['label']:>12}  N={r['N']:<6} {r['group']:<12} xi={r['xi']:<4} generate={r['n_planned']}"
              for r in per_class]
    if not report["generation_needed"]:
        lines.append("no generation needed")
    print("\n".join(lines))
    _write(Path(cfg.out_dir) / "inspect.json", dumps(report))
    return report


def cmd_oversample(cfg: RunConfig) -> dict:
    ds = _load(cfg)
    data = ds
    scaler = None
    if cfg.standardize and cfg.method != "none":
        scaler, data = standardize_fit_transform(ds)
    out, report = oversample(data, cfg.method, cfg, cfg.seed)
    if scaler is not None:
        out = out.with_features(scaler.inverse_transform(out.features))
        out = type(out)(np.vstack([ds.features, out.features[len(ds):]]), out.labels, out.label_names,
                        ds.feature_names, out.synthetic)
    out_dir = Path(cfg.out_dir)
    write_csv(out, out_dir / "oversampled.csv", _label_header(cfg, ds))
    doc = {"method": cfg.method, "seed": cfg.seed, "n_in": len(ds), "n_out": len(out),
           "class_counts": {ds.label_names[c]: n for c, n in class_counts(out).ordered},
           "rcs": None if report is None else report.to_json()}
    _write(out_dir / "report.json", dumps(doc))
    print(f"wrote {len(out)} rows ({int(out.synthetic.sum())} synthetic) to {out_dir / 'oversampled.csv'}")
    return doc


def _label_header(cfg: RunConfig, ds) -> str:
    lc = cfg.label_col
    return lc if not lc.lstrip("-").isdigit() else "label"


def cmd_embed(cfg: RunConfig) -> dict:
    ds = _load(cfg)
    data = standardize_fit_transform(ds)[1] if cfg.standardize else ds
    bundle = train_autoencoder(data, cfg.latent_dim, cfg.temp, cfg.ae_epochs, cfg.ae_lr, cfg.seed, cfg.batch)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(encode(bundle, data), out_dir / "latent.csv", _label_header(cfg, ds))
    bundle.save(out_dir / "autoencoder.json")
    last = bundle.loss_trace[-1] if bundle.loss_trace else {}
    print(f"latent_dim={bundle.latent_dim} epochs={len(bundle.loss_trace)} final_loss={last}")
    return {"latent_dim": bundle.latent_dim, "final": last}


def cmd_evaluate(cfg: RunConfig) -> dict:
    ds = _load(cfg)
    res = evaluate(ds, cfg)
    res["config"] = cfg.public()
    _write(Path(cfg.out_dir) / f"metrics_{cfg.method}.json", dumps(res))
    for m, v in res["aggregate"].items():
        print(f"{m:9s} {v['mean']:.3f} ± {v['std']:.3f}")
    return res


def cmd_benchmark(cfg: RunConfig) -> dict:
    ds = _load(cfg)
    bench = benchmark(ds, cfg)
    out_dir = Path(cfg.out_dir)
    _write(out_dir / "benchmark.json", dumps(bench))
    table = format_table(bench)
    _write(out_dir / "benchmark.txt", table)
    print(table, end="")
    return bench


def gradcheck_matrix(seed: int = 0, corrupt: float = 0.0) -> list[dict]:
    """Finite-difference check of every non-empty combination of the three loss terms."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(10, 5))
    y = np.array([0, 1, 2, 0, 1, 2, 0, 1, 2, 0])
    rows = []
    for combo in itertools.product((True, False), repeat=3):
        if not any(combo):
            continue
        spec = LossSpec(*combo, temperature=0.07)
        nets = AutoencoderNets(mlp_init([5, 6, 3], seed + 1), mlp_init([3, 6, 5], seed + 2),
                               mlp_init([3, 4, 3], seed + 3, head="softmax"))
        # Random biases keep every latent row away from the origin, where normalization is not differentiable.
        nets = nets.with_arrays([a if a.ndim == 2 else rng.normal(0, 0.1, a.shape) for a in nets.arrays()])
        grads = None
        if corrupt:
            grads = [g * (1.0 + corrupt) for g in backward(nets, X, y, spec)]
        err = finite_diff_gradcheck(nets, X, y, spec, grads=grads)
        tol = GRAD_TOL_MSE if combo == (True, False, False) else GRAD_TOL
        rows.append({"loss": spec.name, "max_rel_error": err, "tolerance": tol, "ok": bool(err < tol)})
    return rows


def cmd_gradcheck(cfg: RunConfig, corrupt: float = 0.0) -> dict:
    rows = gradcheck_matrix(cfg.seed, corrupt)
    for r in rows:
        print(f"{r['loss']:10s} max rel err {r['max_rel_error']:.3e}  (< {r['tolerance']:.0e})  "
              f"{'ok' if r['ok'] else 'FAIL'}")
    doc = {"rows": rows, "ok": all(r["ok"] for r in rows)}
    _write(Path(cfg.out_dir) / "gradcheck.json", dumps(doc))
    return doc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args).validate()
        log.info("seed=%d", cfg.seed)
        if args.command == "inspect":
            cmd_inspect(cfg)
        elif args.command == "oversample":
            cmd_oversample(cfg)
        elif args.command == "embed":
            cmd_embed(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg)
        elif args.command == "benchmark":
            cmd_benchmark(cfg)
        elif args.command == "gradcheck":
            return 0 if cmd_gradcheck(cfg, args.corrupt)["ok"] else 1
    except (RcsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
