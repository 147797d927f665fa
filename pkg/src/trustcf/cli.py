"""Command-line driver for the benchmark pipeline.

Verbs mirror the pipeline stages: load-check, split, embed, recommend,
evaluate, grid, compare, report, and reproduce. Options can come from a
flat key=value config file (--config); explicit flags win. Exit codes:
0 success, 1 configuration error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .datasets import RATING_PRESETS, TRUST_PRESETS, load_ratings, load_trust
from .embeddings import export_embedding, import_embedding, write_meta_sidecar
from .errors import ConfigError, DataError, NumericalError, TrustcfError
from .evaluation import load_records
from .experiment import (
    DEFAULT_GRIDS,
    METHOD_FAMILIES,
    ExperimentConfig,
    GridSpec,
    compare_methods,
    compute_embedding,
    emit_report,
    grid_search,
    prepare,
    reproduce,
    resolve_dataset_paths,
    run_experiment,
)
from .recommend import (
    dump_recommendations,
    knn_from_embedding,
    score_items,
)

__all__ = ["main", "build_parser", "read_config"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through the
    # config-error path so the documented exit codes hold
    def error(self, message):
        raise ConfigError(message)


def read_config(path: str) -> dict[str, str]:
    """Flat key=value file; '#' starts a comment, blank lines ignored."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _coerce(value: str):
    low = value.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


_CONFIG_KEYS = {
    "dataset": str,
    "ratings": str,
    "trust": str,
    "data_root": str,
    "method": str,
    "mode": str,
    "k": int,
    "n": int,
    "threshold": int,
    "trust_degree": str,
    "filter_rated": bool,
    "seed": int,
    "out": str,
}


def _merge_config(args: argparse.Namespace) -> tuple[dict, dict, dict]:
    """Config-file values, overridden by explicit CLI flags.

    Returns (settings, method params, grid candidates). Param keys are
    written 'param.<name>'; grid keys 'grid.<name>' with comma lists.
    """
    settings: dict = {}
    params: dict = {}
    grid: dict = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        for key, value in read_config(cfg_path).items():
            if key.startswith("param."):
                params[key[len("param.") :]] = _coerce(value)
            elif key.startswith("grid."):
                grid[key[len("grid.") :]] = [_coerce(v.strip()) for v in value.split(",") if v.strip()]
            elif key in _CONFIG_KEYS:
                caster = _CONFIG_KEYS[key]
                settings[key] = _coerce(value) if caster is bool else caster(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    for item in getattr(args, "param", None) or []:
        if "=" not in item:
            raise ConfigError(f"--param expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        params[name.strip()] = _coerce(value.strip())
    for item in getattr(args, "grid", None) or []:
        if "=" not in item:
            raise ConfigError(f"--grid expects name=v1,v2,..., got {item!r}")
        name, values = item.split("=", 1)
        grid[name.strip()] = [_coerce(v.strip()) for v in values.split(",") if v.strip()]
    return settings, params, grid


def _experiment_config(settings: dict, params: dict, default_mode: str = "test") -> ExperimentConfig:
    return ExperimentConfig(
        method=settings.get("method", "mp"),
        dataset=settings.get("dataset"),
        ratings_path=settings.get("ratings"),
        trust_path=settings.get("trust"),
        data_root=settings.get("data_root"),
        params=params,
        mode=settings.get("mode", default_mode),
        knn_k=settings.get("k", 40),
        top_n=settings.get("n", 10),
        threshold=settings.get("threshold", 10),
        trust_degree=settings.get("trust_degree", "any"),
        filter_rated=settings.get("filter_rated", True),
        seed=settings.get("seed", 0),
    )


def _prepare_from(cfg: ExperimentConfig):
    return prepare(
        cfg.dataset,
        cfg.ratings_path,
        cfg.trust_path,
        cfg.data_root,
        threshold=cfg.threshold,
        trust_degree=cfg.trust_degree,
    )


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_load_check(args) -> int:
    settings, _, _ = _merge_config(args)
    name = settings.get("dataset")
    rpath, tpath = settings.get("ratings"), settings.get("trust")
    if name and (rpath is None or tpath is None):
        rpath, tpath = resolve_dataset_paths(name, settings.get("data_root"))
    if rpath is None or tpath is None:
        raise ConfigError("load-check needs --dataset or --ratings/--trust")
    rfmt = RATING_PRESETS.get(name or "", RATING_PRESETS["epinions"])
    tfmt = TRUST_PRESETS.get(name or "", TRUST_PRESETS["epinions"])
    ratings, r_report = load_ratings(rpath, rfmt)
    graph, t_report = load_trust(tpath, tfmt)
    _emit(
        {
            "ratings": {
                "path": rpath,
                "users": ratings.num_users,
                "items": ratings.num_items,
                "entries": int(ratings.values.size),
                **r_report.to_dict(),
            },
            "trust": {
                "path": tpath,
                "nodes": graph.num_nodes,
                "arcs": graph.num_arcs,
                **t_report.to_dict(),
            },
        }
    )
    return 0


def _cmd_split(args) -> int:
    settings, params, _ = _merge_config(args)
    cfg = _experiment_config(settings, params)
    prep = _prepare_from(cfg)
    counts = prep.split.counts()
    _emit(
        {
            "dataset": prep.name,
            "threshold": cfg.threshold,
            "trust_degree": cfg.trust_degree,
            "users_in_universe": prep.graph.num_nodes,
            "undirected_edges": prep.graph.num_edges,
            **counts,
        }
    )
    return 0


def _cmd_embed(args) -> int:
    settings, params, _ = _merge_config(args)
    cfg = _experiment_config(settings, params)
    if cfg.method in ("mp", "trust_dir", "trust_undir", "trust_jaccard", "trust_katz"):
        raise ConfigError(f"{cfg.method!r} is a baseline, not an embedding method")
    cfg.validate()
    prep = _prepare_from(cfg)
    t0 = time.perf_counter()
    emb = compute_embedding(cfg.method, prep.graph, cfg.params, cfg.seed)
    emb.meta.setdefault("method", cfg.method)
    emb.meta["wall_time"] = time.perf_counter() - t0
    out = settings.get("out") or f"{cfg.method}.emb"
    export_embedding(emb, prep.graph, out)
    write_meta_sidecar(emb, out + ".meta.json")
    _emit({"method": cfg.method, "nodes": emb.num_nodes, "dim": emb.dim, "out": out})
    return 0


def _cmd_recommend(args) -> int:
    settings, params, _ = _merge_config(args)
    cfg = _experiment_config(settings, params)
    cfg.validate()
    prep = _prepare_from(cfg)
    targets = prep.split.validation_users if cfg.mode == "validate" else prep.split.cold_users
    source = prep.warm_view if cfg.mode == "validate" else prep.ratings
    if cfg.method == "mp":
        from .experiment import _mp_recommendations

        recs = _mp_recommendations(prep.warm_view, targets, cfg.top_n, None)
    elif cfg.method == "trust_dir":
        from .recommend import neighbors_direct

        nls = neighbors_direct(prep.graph_directed, targets, cfg.knn_k)
        recs = score_items(nls, source, cfg.top_n)
    elif cfg.method in ("trust_undir", "trust_jaccard", "trust_katz"):
        from .recommend import neighbors_jaccard, neighbors_katz, neighbors_undirected

        fn = {
            "trust_undir": neighbors_undirected,
            "trust_jaccard": neighbors_jaccard,
            "trust_katz": neighbors_katz,
        }[cfg.method]
        nls = fn(prep.graph, targets, cfg.knn_k)
        recs = score_items(nls, source, cfg.top_n)
    else:
        emb_path = getattr(args, "embedding", None)
        if emb_path:
            emb = import_embedding(emb_path, prep.graph)
        else:
            emb = compute_embedding(cfg.method, prep.graph, cfg.params, cfg.seed)
        nls = knn_from_embedding(emb.values, targets, cfg.knn_k)
        recs = score_items(nls, source, cfg.top_n)
    out = settings.get("out") or f"{cfg.method}.recs.txt"
    dump_recommendations(recs, prep.ratings, prep.graph, out)
    covered = sum(1 for r in recs if len(r))
    _emit({"method": cfg.method, "targets": len(recs), "covered": covered, "out": out})
    return 0


def _cmd_evaluate(args) -> int:
    settings, params, _ = _merge_config(args)
    cfg = _experiment_config(settings, params)
    row, _ = run_experiment(cfg, out_dir=settings.get("out"))
    _emit(row)
    return 0


def _cmd_grid(args) -> int:
    settings, params, grid_spec = _merge_config(args)
    cfg = _experiment_config(settings, params, default_mode="validate")
    if cfg.mode != "validate":
        raise ConfigError("grid runs in validate mode")
    cfg.validate()
    prep = _prepare_from(cfg)
    grid = GridSpec(grid_spec) if grid_spec else GridSpec(DEFAULT_GRIDS.get(cfg.method, {}))
    sys.stderr.write(f"grid size: {grid.size} point(s) for {cfg.method}\n")
    result = grid_search(prep, cfg.method, grid, base=cfg, workers=args.workers)
    _emit(
        {
            "method": cfg.method,
            "best_params": result.best_params,
            "best_ndcg": result.best_score,
            "leaderboard": result.leaderboard,
        }
    )
    return 0


def _cmd_compare(args) -> int:
    records_by_method = {}
    for path in args.records:
        method, records = load_records(path)
        if not method:
            raise DataError(f"{path} holds no records")
        records_by_method[method] = records
    result = compare_methods(records_by_method)
    payload = {
        "methods": result["methods"],
        "m_comparisons": result["m_comparisons"],
        "flags": result["flags"],
        "pairs": {f"{a}|{b}": v for (a, b), v in result["pairs"].items()},
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        _emit(payload)
    return 0


def _cmd_report(args) -> int:
    rows = []
    for path in args.rows:
        with open(path, encoding="utf-8") as fh:
            loaded = json.load(fh)
        rows.extend(loaded if isinstance(loaded, list) else [loaded])
    text = emit_report(rows, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_reproduce(args) -> int:
    settings, _, _ = _merge_config(args)
    methods = args.methods.split(",") if args.methods else None
    rows = reproduce(
        args.dataset,
        settings.get("out") or f"reproduce-{args.dataset}",
        methods=methods,
        data_root=settings.get("data_root"),
        seed=settings.get("seed", 0),
        knn_k=settings.get("k", 40),
        top_n=settings.get("n", 10),
    )
    sys.stdout.write(emit_report(rows, "markdown"))
    return 0


def _add_common(p: argparse.ArgumentParser, with_method: bool = True) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--dataset", help="dataset preset name (epinions|ciao|filmtrust)")
    p.add_argument("--ratings", help="explicit ratings file path")
    p.add_argument("--trust", help="explicit trust file path")
    p.add_argument("--data-root", dest="data_root", help="dataset root directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threshold", type=int, default=None, help="cold-start rating threshold")
    p.add_argument("--trust-degree", dest="trust_degree", choices=["any", "out", "in"], default=None)
    p.add_argument("--out", help="output path (file or directory, verb-dependent)")
    if with_method:
        p.add_argument("--method", choices=sorted(METHOD_FAMILIES), default=None)
        p.add_argument("--mode", choices=["validate", "test"], default=None)
        p.add_argument("--k", type=int, default=None, help="neighbor count")
        p.add_argument("--n", type=int, default=None, help="recommendation list length")
        p.add_argument(
            "--param",
            action="append",
            metavar="NAME=VALUE",
            help="method hyperparameter, repeatable",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trustcf", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("load-check", help="parse a dataset and report drop counts")
    _add_common(p, with_method=False)
    p.set_defaults(func=_cmd_load_check)

    p = sub.add_parser("split", help="print warm/cold/validation/test counts")
    _add_common(p)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("embed", help="train one embedding and export it")
    _add_common(p)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("recommend", help="write top-n recommendations per target")
    _add_common(p)
    p.add_argument("--embedding", help="reuse an exported embedding instead of retraining")
    p.set_defaults(func=_cmd_recommend)

    p = sub.add_parser("evaluate", help="run one method end to end and print its row")
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("grid", help="hyperparameter sweep on validation users")
    _add_common(p)
    p.add_argument(
        "--grid",
        action="append",
        metavar="NAME=V1,V2,...",
        help="candidate list, repeatable; default grid used if omitted",
    )
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("compare", help="pairwise significance over record CSVs")
    p.add_argument("records", nargs="+", help="per-user record CSVs from evaluate")
    p.add_argument("--out", help="write the comparison JSON here instead of stdout")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("report", help="render row JSONs as csv/json/markdown")
    p.add_argument("rows", nargs="+", help="row JSON files from evaluate")
    p.add_argument("--format", choices=["csv", "json", "markdown"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("reproduce", help="run the published per-dataset configurations")
    p.add_argument("dataset", choices=["epinions", "ciao", "filmtrust"])
    p.add_argument("--methods", help="comma-separated subset of methods")
    _add_common(p, with_method=False)
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as e:
        sys.stderr.write(f"config error: {e}\n")
        return 1
    except DataError as e:
        sys.stderr.write(f"data error: {e}\n")
        return 2
    except NumericalError as e:
        sys.stderr.write(f"numerical failure: {e}\n")
        return 3
    except TrustcfError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
