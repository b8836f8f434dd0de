"""Command-line entry point: select, eval, synth and ablate subcommands.

Options may also come from a key=value config file (--config); flags given
on the command line win. Exit status is 0 on success, 1 when a run fails and
2 for usage errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from . import dataio, evaluation, graph, pipeline, surrogate, synth
from .dataio import LabeledDataset

log = logging.getLogger("ssfs")

THREADS_ENV = "SSFS_THREADS"
GENERATORS = ("blobs", "manifold", "interval")

# defaults applied after flags and config file are merged
DEFAULTS = {
    "seed": 0,
    "threads": None,
    "label_column": None,
    "no_header": False,
    "features": None,
    "d": None,
    "resamples": 500,
    "fraction": 0.95,
    "laplacian": graph.SYMMETRIC,
    "neighbor_k": 2,
    "bandwidth": None,
    "variant": pipeline.FULL,
    "selector": surrogate.LOGISTIC,
    "scorer": surrogate.GBT_CLASSIFIER,
    "report": None,
    "counts": "2,5,10,20,30,40,50,100,150,200,250,300",
    "kmeans_runs": 20,
    "stability": False,
    "runs": 500,
    "stability_features": None,
    "n": 500,
    "nuisance": synth.GAUSSIAN_BLOCKS,
    "num_nuisance": 45,
    "num_blocks": 3,
    "latents": 2,
    "features_per_latent": 3,
    "degrees": "3",
    "variants": ",".join(pipeline.VARIANTS),
    "top": 5,
}


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        values = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return values


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _flag(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _common(p, needs_input=True):
    p.set_defaults(subparser=p)
    if needs_input:
        p.add_argument("--input", help="comma-delimited data file")
    p.add_argument("--out", help="output path")
    p.add_argument("--seed", type=int, help="master random seed (default 0)")
    p.add_argument("--threads", type=_positive_int,
                   help=f"worker threads; falls back to ${THREADS_ENV}")
    p.add_argument("--config", help="key=value file; command-line flags override it")


def _data_flags(p):
    p.add_argument("--label-column", help="header name of a label column to set aside")
    p.add_argument("--no-header", action="store_const", const=True,
                   help="the input has no header row")


def _ssfs_flags(p):
    p.add_argument("--k", type=_positive_int, help="number of eigenvectors to keep")
    p.add_argument("--d", type=_positive_int, help="eigenvectors to compute (default 2k)")
    p.add_argument("--resamples", type=_positive_int, help="subsamples per eigenvector (default 500)")
    p.add_argument("--fraction", type=float, help="subsample fraction (default 0.95)")
    p.add_argument("--laplacian", choices=graph.LAPLACIAN_VARIANTS)
    p.add_argument("--neighbor-k", type=_positive_int, help="neighbor used for the adaptive scale")
    p.add_argument("--bandwidth", type=float, help="fixed kernel scale instead of the adaptive one")
    p.add_argument("--selector", choices=(surrogate.LOGISTIC, surrogate.RIDGE))
    p.add_argument("--scorer", choices=surrogate.KINDS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssfs", description="Spectral self-supervised feature selection")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="rank features of a dataset")
    _common(p)
    _data_flags(p)
    _ssfs_flags(p)
    p.add_argument("--variant", choices=pipeline.VARIANTS)
    p.add_argument("--features", type=_positive_int, help="write only the top N features")
    p.add_argument("--report", help="run report path (default: <out>.report.json)")

    p = sub.add_parser("eval", help="clustering accuracy of a ranking")
    _common(p)
    _data_flags(p)
    p.add_argument("--ranking", help="ranking file written by select")
    p.add_argument("--counts", type=_int_list, help="comma-separated feature counts")
    p.add_argument("--kmeans-runs", type=_positive_int, help="k-means runs per count (default 20)")
    p.add_argument("--stability", action="store_const", const=True,
                   help="also write a variation-of-information summary")
    p.add_argument("--runs", type=_positive_int, help="k-means runs for the stability summary")
    p.add_argument("--stability-features", type=_positive_int,
                   help="top features used for the stability summary (default: largest count)")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("generator", help=f"one of {', '.join(GENERATORS)}")
    _common(p, needs_input=False)
    p.add_argument("--n", type=_positive_int, help="number of samples")
    p.add_argument("--nuisance", help=f"one of {', '.join(synth.NUISANCE_KINDS)}")
    p.add_argument("--num-nuisance", type=int, help="nuisance feature count (default 45)")
    p.add_argument("--num-blocks", type=_positive_int, help="nuisance correlation blocks (default 3)")
    p.add_argument("--latents", type=_positive_int, help="latent variables (manifold)")
    p.add_argument("--features-per-latent", type=_positive_int)
    p.add_argument("--degrees", type=_int_list, help="polynomial degrees, cycled per feature")

    p = sub.add_parser("ablate", help="compare the method's variants")
    _common(p)
    _data_flags(p)
    _ssfs_flags(p)
    p.add_argument("--variants", help="comma-separated variant names")
    p.add_argument("--top", type=_positive_int, help="recall cutoff (default 5)")
    return parser


def read_config(path) -> dict:
    """key=value lines; blank lines and '#' comments are skipped."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _merge(args) -> argparse.Namespace:
    actions = {a.dest: a for a in args.subparser._actions}
    if args.config:
        try:
            cfg = read_config(args.config)
        except OSError as e:
            raise UsageError(f"cannot read config file: {e}")
        for key, raw in cfg.items():
            if key not in actions or key in ("help", "config"):
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if getattr(args, key) is not None:
                continue
            action = actions[key]
            try:
                if action.const is True:
                    value = _flag(raw)
                elif action.type is not None:
                    value = action.type(raw)
                else:
                    value = raw
            except (ValueError, argparse.ArgumentTypeError) as e:
                raise UsageError(f"config key {key}: {e}")
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config key {key}: {value!r} not in {list(action.choices)}")
            setattr(args, key, value)
    for key, value in DEFAULTS.items():
        if key in actions and getattr(args, key) is None:
            if key in ("counts", "degrees"):
                value = _int_list(value)
            setattr(args, key, value)
    if args.threads is None and os.environ.get(THREADS_ENV):
        try:
            args.threads = _positive_int(os.environ[THREADS_ENV])
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"${THREADS_ENV} must be a positive integer")
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _load(args):
    """(DataMatrix, labels or None, class names)."""
    loaded = dataio.load_matrix(args.input, has_header=not args.no_header,
                                label_column=args.label_column)
    if isinstance(loaded, LabeledDataset):
        return loaded.data, loaded
    return loaded, None


def _config(args, variant=None) -> pipeline.SsfsConfig:
    return pipeline.SsfsConfig(
        num_select_k=args.k,
        num_compute_d=args.d,
        selector_spec=surrogate.make_spec(args.selector),
        scorer_spec=surrogate.make_spec(args.scorer),
        resamples=args.resamples,
        subsample_fraction=args.fraction,
        laplacian_variant=args.laplacian,
        neighbor_k=args.neighbor_k,
        bandwidth=args.bandwidth,
        seed=args.seed,
        variant=variant or args.variant,
        threads=args.threads,
    )


def _report(result: pipeline.SsfsResult, cfg: pipeline.SsfsConfig) -> dict:
    st = result.stability
    return {
        "variant": cfg.variant,
        "k": cfg.num_select_k,
        "d": cfg.num_compute_d,
        "seed": cfg.seed,
        "resamples": cfg.resamples,
        "subsample_fraction": cfg.subsample_fraction,
        "laplacian": cfg.laplacian_variant,
        "eigenvalues": result.pseudo_labels.source_eigenvalues,
        "eigenvector_indices": result.pseudo_labels.source_indices,
        "selected_eigenvectors": list(result.ranking.selected_eigenvectors),
        "stability_scores": None if st is None else st.per_vector_variance_sum,
        "timings_seconds": result.timings,
    }


def _report_path(args):
    if args.report:
        return args.report
    root, _ = os.path.splitext(args.out)
    return root + ".report.json"


def cmd_select(args) -> int:
    _require(args, "input", "out", "k")
    x, _ = _load(args)
    cfg = _config(args)
    result = pipeline.run_ssfs(x, cfg)
    dataio.write_ranking(result.ranking, args.out, limit=args.features)
    dataio.write_json(_report_path(args), _report(result, cfg))
    log.info("wrote %s", args.out)
    return 0


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_eval(args) -> int:
    _require(args, "input", "out", "ranking")
    if args.label_column is None:
        args.label_column = "label"
    x, ds = _load(args)
    ranking = dataio.read_ranking(args.ranking, num_features=x.n_features)
    curve = evaluation.accuracy_curve(ds, ranking, counts=args.counts,
                                      kmeans_runs=args.kmeans_runs, rng_seed=args.seed)
    _write_rows(args.out, ("num_features", "mean_acc", "std_acc"),
                [(c, dataio.format_score(m), dataio.format_score(s))
                 for c, m, s in zip(curve.feature_counts, curve.mean_acc, curve.std_acc)])
    if args.stability:
        count = args.stability_features or (max(curve.feature_counts) if curve.feature_counts else None)
        if count is None:
            raise ValueError("no usable feature count for the stability summary")
        cols = ranking.order[:count]
        summary = evaluation.stability_analysis(x.values[:, cols], ds.num_classes,
                                                runs=args.runs, rng_seed=args.seed)
        root, _ = os.path.splitext(args.out)
        _write_rows(root + ".vi.csv", ("vi",), [(dataio.format_score(v),) for v in summary.vi_values])
        dataio.write_json(root + ".stability.json", {
            "num_features": int(len(cols)),
            "runs": args.runs,
            "mean_vi": summary.mean_vi,
            "std_vi": summary.std_vi,
            "vi_values": summary.vi_values,
        })
    return 0


def cmd_synth(args) -> int:
    _require(args, "out")
    if args.generator not in GENERATORS:
        raise UsageError(f"unknown generator {args.generator!r}; valid generators: {', '.join(GENERATORS)}")
    meta_path = dataio.sidecar_path(args.out)
    if args.generator == "blobs":
        if args.nuisance not in synth.NUISANCE_KINDS:
            raise UsageError(f"unknown nuisance {args.nuisance!r}; valid kinds: {', '.join(synth.NUISANCE_KINDS)}")
        ds = synth.gen_blobs_with_nuisance(args.n, args.nuisance, args.num_nuisance,
                                           rng_seed=args.seed, num_blocks=args.num_blocks)
        dataio.write_matrix(args.out, ds.data, labels=ds.true_labels)
        meta = {"generator_params": ds.generator_params,
                "informative_features": list(ds.informative_features),
                "label_column": "label"}
    elif args.generator == "manifold":
        ms = synth.gen_product_manifold(args.n, args.latents, args.features_per_latent,
                                        args.degrees, rng_seed=args.seed)
        dataio.write_matrix(args.out, ms.data)
        meta = {"generator_params": ms.generator_params,
                "feature_owner": ms.feature_owner,
                "latents": ms.latents}
    else:
        x = synth.gen_interval_samples(args.n, rng_seed=args.seed)
        dataio.write_matrix(args.out, x)
        meta = {"generator_params": {"generator": "interval", "n": args.n, "seed": args.seed}}
    dataio.write_json(meta_path, meta)
    return 0


def _informative(args):
    path = dataio.sidecar_path(args.input)
    if not os.path.exists(path):
        return None
    meta = dataio.read_json(path)
    truth = meta.get("informative_features")
    return None if truth is None else [int(t) for t in truth]


def cmd_ablate(args) -> int:
    _require(args, "input", "out", "k")
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    if not variants:
        raise UsageError("--variants is empty")
    unknown = [v for v in variants if v not in pipeline.VARIANTS]
    if unknown:
        raise UsageError(f"unknown variant(s) {', '.join(unknown)}; valid: {', '.join(pipeline.VARIANTS)}")
    if args.label_column is None and os.path.exists(dataio.sidecar_path(args.input)):
        args.label_column = dataio.read_json(dataio.sidecar_path(args.input)).get("label_column")
    x, _ = _load(args)
    truth = _informative(args)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for variant in variants:
        cfg = _config(args, variant)
        result = pipeline.run_ssfs(x, cfg)
        dataio.write_ranking(result.ranking, os.path.join(args.out, f"ranking_{variant}.csv"))
        top = result.ranking.order[:args.top]
        recall = "" if truth is None else dataio.format_score(synth.recall_at_k(result.ranking, truth, args.top))
        rows.append((variant, " ".join(str(i) for i in result.ranking.selected_eigenvectors),
                     " ".join(str(int(j)) for j in top), recall))
    _write_rows(os.path.join(args.out, "ablation.csv"),
                ("variant", "selected_eigenvectors", f"top_{args.top}", f"recall_at_{args.top}"), rows)
    return 0


COMMANDS = {"select": cmd_select, "eval": cmd_eval, "synth": cmd_synth, "ablate": cmd_ablate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args = _merge(args)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"ssfs {args.command}: usage error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001  any module failure becomes exit 1
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"ssfs {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
