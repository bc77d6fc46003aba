"""Command-line entry point: ``speakeasy {cluster,consensus,eval,bench,diff}``.

Every subcommand that writes files also writes ``runconfig.json`` with the
resolved flags and derived seeds. Output bytes depend only on inputs, flags
and seed; ``--jobs`` changes scheduling, never results, so it is left out of
the echoed config.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .benchgen import BenchmarkSpec, InfeasibleSpecError, generate, summary
from .consensus import (
    DEFAULT_MAX_COMMUNITIES,
    DEFAULT_REPLICATES,
    co_occurrence,
    multi_community_nodes,
    replicate,
    replicate_seeds,
    representative_partition,
    subcluster,
    write_cooccurrence,
    derive_seed,
)
from .difftest import DEFAULT_PERMUTATIONS, default_null_replicates, load_manifest, permutation_test
from .graph import (
    Cover,
    GraphFormatError,
    Partition,
    from_dense_matrix,
    load_edge_list,
    read_cover,
    read_partition,
    write_cover,
    write_partition,
)
from .labelprop import EXPECTATION_MODES, EngineParams, run_labels
from .metrics import cover_report, partition_report

RUNCONFIG = "runconfig.json"

# sweepable benchmark parameters: flag name -> BenchmarkSpec field
SWEEP_FIELDS = {
    "mu": "mu",
    "k": "avg_degree",
    "gamma": "gamma",
    "beta": "beta",
    "overlap-fraction": "overlap_fraction",
}


class CliError(Exception):
    """Runtime failure reported as ``error: ...`` with exit code 1."""


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _dump_json(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _engine(args) -> EngineParams:
    return EngineParams(
        num_history_labels=args.history,
        max_iterations=args.max_iterations,
        patience=args.patience,
        seed=args.seed,
        expectation=args.expectation,
    )


def _engine_config(p: EngineParams) -> dict:
    return {
        "num_history_labels": p.num_history_labels,
        "max_iterations": p.max_iterations,
        "patience": p.patience,
        "seed": p.seed,
        "expectation": p.expectation,
    }


def _load_graph(args):
    if args.edges is not None:
        return load_edge_list(args.edges, directed=args.directed)
    return from_dense_matrix(args.matrix, zero_diagonal=True, directed=args.directed)


def _input_config(args) -> dict:
    if getattr(args, "edges", None) is not None:
        return {"edges": str(args.edges), "directed": args.directed}
    return {"matrix": str(args.matrix), "directed": args.directed}


def _base_config(args) -> dict:
    return {"subcommand": args.command, "version": __version__}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_cluster(args) -> int:
    g = _load_graph(args)
    p = _engine(args)
    labels, iterations = run_labels(g, p)
    part = Partition(labels)
    out = _out_dir(args)
    write_partition(part, out / "partition.tsv")
    cfg = _base_config(args)
    cfg.update(input=_input_config(args), engine=_engine_config(p),
               iterations=int(iterations), num_communities=part.num_communities)
    _dump_json(cfg, out / RUNCONFIG)
    return 0


def cmd_consensus(args) -> int:
    if args.replicates < 1:
        raise CliError("-R must be >= 1")
    if args.subcluster_depth < 1:
        raise CliError("--subcluster-depth must be >= 1")
    g = _load_graph(args)
    p = _engine(args)
    out = _out_dir(args)
    ens = replicate(g, p, args.replicates, jobs=args.jobs)
    rep = representative_partition(ens)
    co = co_occurrence(ens)
    write_partition(rep, out / "partition.tsv")
    write_cooccurrence(co, out / "cooccurrence.tsv")
    cfg = _base_config(args)
    cfg.update(
        input=_input_config(args),
        engine=_engine_config(p),
        replicates=args.replicates,
        replicate_seeds=[int(s) for s in ens.seeds],
        representative_index=next(i for i, q in enumerate(ens.partitions) if q is rep),
        num_communities=rep.num_communities,
        overlap=args.overlap,
        subcluster_depth=args.subcluster_depth,
    )
    if args.overlap:
        cover = multi_community_nodes(co, rep, args.max_communities)
        write_cover(cover, out / "cover.tsv")
        cfg.update(max_communities=args.max_communities,
                   num_multi_community_nodes=len(cover.multi_nodes()))
    if args.subcluster_depth > 1:
        levels = subcluster(g, p, args.subcluster_depth, R=args.replicates, jobs=args.jobs)
        for i, level in enumerate(levels, start=1):
            write_partition(level, out / f"partition_level{i}.tsv")
        cfg["level_num_communities"] = [lv.num_communities for lv in levels]
    _dump_json(cfg, out / RUNCONFIG)
    return 0


def _looks_like_cover(path) -> bool:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            parts = line.rstrip("\r\n").split("\t")
            if len(parts) > 1 and "," in parts[1]:
                return True
    return False


def cmd_eval(args) -> int:
    fmt = args.format
    if fmt == "auto":
        fmt = "cover" if (_looks_like_cover(args.pred) or _looks_like_cover(args.truth)) else "partition"
    if fmt == "cover":
        report = cover_report(read_cover(args.pred), read_cover(args.truth))
    else:
        graph = None
        if args.edges is not None or args.matrix is not None:
            graph = _load_graph(args)
        report = partition_report(read_partition(args.pred), read_partition(args.truth), graph)
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False)
    sys.stdout.write(text + "\n")
    if args.out is not None:
        out = _out_dir(args)
        _dump_json(report, out / "metrics.json")
        cfg = _base_config(args)
        cfg.update(pred=str(args.pred), truth=str(args.truth), format=fmt)
        if args.edges is not None or args.matrix is not None:
            cfg["input"] = _input_config(args)
        _dump_json(cfg, out / RUNCONFIG)
    return 0


def _parse_sweep(text: str | None):
    if text is None:
        return None, [None]
    key, sep, rng = text.partition("=")
    key = key.strip()
    if not sep or key not in SWEEP_FIELDS:
        raise CliError(f"--sweep must look like NAME=start:stop:step with NAME in {sorted(SWEEP_FIELDS)}")
    try:
        start, stop, step = (float(x) for x in rng.split(":"))
    except ValueError:
        raise CliError(f"--sweep range {rng!r} is not start:stop:step") from None
    if step <= 0 or stop < start:
        raise CliError("--sweep needs step > 0 and stop >= start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return SWEEP_FIELDS[key], [round(start + i * step, 10) for i in range(count)]


def _bench_spec(args, field, value, seed) -> BenchmarkSpec:
    kw = dict(
        n=args.n,
        avg_degree=args.k,
        max_degree=args.kmax,
        gamma=args.gamma,
        beta=args.beta,
        mu=args.mu,
        overlap_fraction=args.overlap_fraction,
        om=args.om,
        min_community_size=args.min_community,
        max_community_size=args.max_community,
        seed=seed,
    )
    if field is not None:
        kw[field] = value
    return BenchmarkSpec(**kw)


def _self_test(args, g, truth: Cover, seed: int) -> dict:
    p = _engine(args).with_seed(seed)
    ens = replicate(g, p, args.replicates, jobs=args.jobs)
    rep = representative_partition(ens)
    if truth.is_disjoint():
        return partition_report(rep, truth.to_partition(), g)
    pred = multi_community_nodes(co_occurrence(ens), rep, args.max_communities)
    return cover_report(pred, truth)


def cmd_bench(args) -> int:
    if args.instances < 1:
        raise CliError("--instances must be >= 1")
    field, values = _parse_sweep(args.sweep)
    out = _out_dir(args)
    rows = []
    seeds = {}
    for pi, value in enumerate(values):
        for inst in range(args.instances):
            seed = derive_seed(args.seed, pi, inst)
            spec = _bench_spec(args, field, value, seed)
            g, truth = generate(spec)
            stem = f"p{pi:02d}_i{inst:02d}"
            with open(out / f"{stem}.edges.tsv", "w", encoding="utf-8", newline="\n") as fh:
                for u, v in zip(g.src.tolist(), g.dst.tolist()):
                    fh.write(f"{u}\t{v}\n")
            write_cover(truth, out / f"{stem}.truth.tsv")
            stats = summary(g, truth)
            row = {"point": pi, "instance": inst, "seed": seed}
            if field is not None:
                row[field] = value
            row.update(stats)
            side = {"spec": spec.to_dict(), "summary": stats}
            if args.self_test:
                scores = _self_test(args, g, truth, derive_seed(seed, 1))
                row.update(scores)
                side["scores"] = scores
            _dump_json(side, out / f"{stem}.json")
            seeds[stem] = seed
            rows.append(row)
    fields = list(rows[0].keys())
    with open(out / "bench.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    cfg = _base_config(args)
    cfg.update(
        spec=_bench_spec(args, None, None, args.seed).to_dict(),
        sweep={"field": field, "values": values} if field is not None else None,
        instances=args.instances,
        instance_seeds=seeds,
        self_test=args.self_test,
    )
    if args.self_test:
        cfg.update(engine=_engine_config(_engine(args)), replicates=args.replicates,
                   max_communities=args.max_communities)
    _dump_json(cfg, out / RUNCONFIG)
    return 0


def cmd_diff(args) -> int:
    if args.permutations < 1:
        raise CliError("--permutations must be >= 1")
    if args.replicates < 1:
        raise CliError("-R must be >= 1")
    a, b = load_manifest(args.manifest)
    p = _engine(args)
    null_r = args.null_replicates if args.null_replicates is not None else default_null_replicates(args.replicates)
    report = permutation_test(a, b, p, R=args.replicates, n_perm=args.permutations,
                              null_replicates=null_r, jobs=args.jobs)
    out = _out_dir(args)
    _dump_json(report.to_dict(), out / "diff_report.json")
    write_cooccurrence(report.cooccurrence_a, out / "cooccurrence_a.tsv")
    write_cooccurrence(report.cooccurrence_b, out / "cooccurrence_b.tsv")
    cfg = _base_config(args)
    cfg.update(
        manifest=str(args.manifest),
        cohorts={"a": {"name": a.label, "subjects": len(a)}, "b": {"name": b.label, "subjects": len(b)}},
        engine=_engine_config(p),
        replicates=args.replicates,
        null_replicates=null_r,
        permutations=args.permutations,
        permutation_seeds={
            "shuffle": [derive_seed(p.seed, 1, i) for i in range(args.permutations)],
            "engine": [derive_seed(p.seed, 2, i) for i in range(args.permutations)],
        },
        replicate_seeds=[int(s) for s in replicate_seeds(p.seed, args.replicates)],
    )
    _dump_json(cfg, out / RUNCONFIG)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return v


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0 or v >= 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _add_engine(sp, jobs=True):
    d = EngineParams()
    g = sp.add_argument_group("engine")
    g.add_argument("--seed", type=_seed, default=d.seed, help="master seed (default %(default)s)")
    g.add_argument("--history", type=_positive_int, default=d.num_history_labels,
                   help="labels kept per node (default %(default)s)")
    g.add_argument("--max-iterations", type=_positive_int, default=d.max_iterations,
                   help="update rounds cap (default %(default)s)")
    g.add_argument("--patience", type=_positive_int, default=d.patience,
                   help="stop after this many rounds without change (default %(default)s)")
    g.add_argument("--expectation", choices=EXPECTATION_MODES, default=d.expectation,
                   help="scale of the expected label count (default %(default)s)")
    if jobs:
        g.add_argument("--jobs", type=_positive_int, default=1,
                       help="worker threads; does not change results (default %(default)s)")


def _add_graph_input(sp, required=True):
    g = sp.add_mutually_exclusive_group(required=required)
    g.add_argument("--edges", type=Path, help="edge-list TSV: src, dst, optional weight")
    g.add_argument("--matrix", type=Path, help="dense matrix TSV, optional header row")
    sp.add_argument("--directed", action="store_true", help="treat input as directed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speakeasy", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sp = sub.add_parser("cluster", help="one label-propagation run")
    _add_graph_input(sp)
    _add_engine(sp, jobs=False)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("consensus", help="replicate runs, representative partition, co-occurrence")
    _add_graph_input(sp)
    _add_engine(sp)
    sp.add_argument("-R", "--replicates", type=_positive_int, default=DEFAULT_REPLICATES,
                    help="number of runs (default %(default)s)")
    sp.add_argument("--overlap", action="store_true", help="also write the multi-community cover")
    sp.add_argument("--max-communities", type=_positive_int, default=DEFAULT_MAX_COMMUNITIES,
                    help="membership threshold is 1/this (default %(default)s)")
    sp.add_argument("--subcluster-depth", type=_positive_int, default=1,
                    help="levels of recursive clustering (default %(default)s)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_consensus)

    sp = sub.add_parser("eval", help="compare a prediction with a ground truth")
    sp.add_argument("--pred", type=Path, required=True, help="predicted partition or cover TSV")
    sp.add_argument("--truth", type=Path, required=True, help="reference partition or cover TSV")
    _add_graph_input(sp, required=False)
    sp.add_argument("--format", choices=("auto", "partition", "cover"), default="auto",
                    help="how to read pred/truth (default %(default)s)")
    sp.add_argument("--out", help="optional directory for metrics.json and runconfig.json")
    sp.set_defaults(func=cmd_eval)

    d = BenchmarkSpec()
    sp = sub.add_parser("bench", help="generate planted-community benchmark graphs")
    sp.add_argument("-n", type=_positive_int, default=d.n, help="nodes (default %(default)s)")
    sp.add_argument("-k", type=float, default=d.avg_degree, help="mean degree (default %(default)s)")
    sp.add_argument("--kmax", type=_positive_int, default=d.max_degree, help="max degree (default %(default)s)")
    sp.add_argument("--gamma", type=float, default=d.gamma, help="degree exponent (default %(default)s)")
    sp.add_argument("--beta", type=float, default=d.beta, help="community size exponent (default %(default)s)")
    sp.add_argument("--mu", type=float, default=d.mu, help="mixing parameter (default %(default)s)")
    sp.add_argument("--om", type=_positive_int, default=d.om,
                    help="communities per overlapping node (default %(default)s)")
    sp.add_argument("--overlap-fraction", type=float, default=d.overlap_fraction,
                    help="fraction of overlapping nodes (default %(default)s)")
    sp.add_argument("--min-community", type=_positive_int, default=d.min_community_size,
                    help="smallest community (default %(default)s)")
    sp.add_argument("--max-community", type=_positive_int, default=d.max_community_size,
                    help="largest community (default %(default)s)")
    sp.add_argument("--instances", type=_positive_int, default=1, help="instances per point (default %(default)s)")
    sp.add_argument("--sweep", help="NAME=start:stop:step, e.g. mu=0.05:0.95:0.05")
    sp.add_argument("--self-test", action="store_true", help="cluster every instance and score it")
    sp.add_argument("-R", "--replicates", type=_positive_int, default=DEFAULT_REPLICATES,
                    help="runs per self-test (default %(default)s)")
    sp.add_argument("--max-communities", type=_positive_int, default=DEFAULT_MAX_COMMUNITIES,
                    help="self-test cover threshold is 1/this (default %(default)s)")
    _add_engine(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("diff", help="permutation test between two cohorts")
    sp.add_argument("--manifest", type=Path, required=True, help="cohort manifest JSON")
    sp.add_argument("--permutations", type=_positive_int, default=DEFAULT_PERMUTATIONS,
                    help="null rounds (default %(default)s)")
    sp.add_argument("-R", "--replicates", type=_positive_int, default=DEFAULT_REPLICATES,
                    help="runs per real cohort (default %(default)s)")
    sp.add_argument("--null-replicates", type=_positive_int, default=None,
                    help="runs per pseudo-cohort (default max(20, R/2))")
    _add_engine(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_diff)
    return parser


RUNTIME_ERRORS = (CliError, OSError, ValueError, GraphFormatError, InfeasibleSpecError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RUNTIME_ERRORS as exc:
        msg = str(exc)
        if isinstance(exc, OSError) and exc.filename is not None:
            msg = f"{exc.filename}: {exc.strerror}"
        print(f"speakeasy {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
