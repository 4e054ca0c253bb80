"""Command line entry point: ``graphssl {single,sweep,embed,metrics}``.

Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
failures (including any failed trial in a sweep).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import ConfigError, GraphSSLError, InputError
from .evaluation import evaluate
from .plotting import emit_plots

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--laplacian", help="one name, or a comma list for sweep/embed")
    p.add_argument("--method", choices=ex.METHODS)
    p.add_argument("--out-dir")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphssl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("single", help="run one configuration")
    _common(p)

    p = sub.add_parser("sweep", help="trials over a list of parameter values")
    _common(p)
    p.add_argument("--sweep-param")
    p.add_argument("--sweep-values", help="comma separated values")

    p = sub.add_parser("embed", help="spectral embeddings under several Laplacians")
    _common(p)

    p = sub.add_parser("metrics", help="NMI and ACC of two label files")
    p.add_argument("true_labels")
    p.add_argument("predicted")
    return parser


def _resolve(args) -> tuple[ex.ExperimentConfig, list[str]]:
    values = ex.load_config_file(args.config) if args.config else {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = ex.parse_value(v)
    for key in ("seed", "trials", "method", "out_dir"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    laplacians = []
    if args.laplacian:
        laplacians = [s.strip() for s in args.laplacian.split(",") if s.strip()]
        values["laplacian"] = laplacians[0]
    config = ex.build_config(values)
    return config, laplacians or [config.laplacian]


def _write_config(config: ex.ExperimentConfig, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


def cmd_single(args) -> int:
    config, _ = _resolve(args)
    report = ex.run_sweep(config.replace(trials=1))
    out = Path(config.out_dir)
    ex.write_report(report, out)
    rec = report.records[0]
    if rec.failed:
        print(rec.error, file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps({"nmi": rec.nmi, "acc": rec.acc, "seed": rec.seed, "sigma": rec.sigma}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    config, laplacians = _resolve(args)
    if args.sweep_param and not args.sweep_values:
        raise ConfigError("--sweep-param needs --sweep-values")
    values = [ex.parse_value(v) for v in args.sweep_values.split(",")] if args.sweep_values else None
    out = Path(config.out_dir)
    curves, failed = {}, 0
    for lap in laplacians:
        c = config.replace(laplacian=lap)
        report = ex.run_sweep(c, args.sweep_param, values)
        target = out if len(laplacians) == 1 else out / f"{c.method}_{lap}"
        ex.write_report(report, target)
        curves[f"{c.method} {lap}"] = report.aggregates()
        failed += len(report.failed)
        for row in report.aggregates():
            if row["n"] == 0:
                print(f"{lap}\t{args.sweep_param}={row['sweep_value']}\tall trials failed")
                continue
            print(f"{lap}\t{args.sweep_param}={row['sweep_value']}\tn={row['n']}\t"
                  f"NMI {row['nmi_mean']:.4f}\tACC {row['acc_mean']:.4f}")
    if args.sweep_param and any(r["n"] for rows in curves.values() for r in rows):
        emit_plots("sweep-lines", out, curves=curves, xlabel=args.sweep_param)
    if failed:
        print(f"{failed} trial(s) failed; see summary.json", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_embed(args) -> int:
    config, laplacians = _resolve(args)
    if not args.laplacian:
        laplacians = list(ex.EMBEDDING_LAPLACIANS)
    data, S, embs = ex.embed_variants(config, laplacians)
    out = Path(config.out_dir)
    _write_config(config, out)
    for name, emb in embs.items():
        np.savetxt(out / f"embedding_{name}.csv", emb.coordinates, delimiter=",", fmt="%.17g")
    emit_plots(
        "scatter-embedding",
        out,
        embeddings={k: e.coordinates for k, e in embs.items()},
        labels=data.true_labels,
        labeled=S.indices,
    )
    print(f"wrote {len(embs)} embeddings to {out}")
    return EXIT_OK


def _read_labels(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=1).ravel()


def cmd_metrics(args) -> int:
    rep = evaluate(_read_labels(args.true_labels), _read_labels(args.predicted))
    print(json.dumps({"nmi": rep.nmi, "acc": rep.acc, "permutation": rep.permutation.tolist()}))
    return EXIT_OK


COMMANDS = {"single": cmd_single, "sweep": cmd_sweep, "embed": cmd_embed, "metrics": cmd_metrics}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, InputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GraphSSLError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
