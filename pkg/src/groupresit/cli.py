"""Command-line interface for synthetic-data generation, structure
discovery, evaluation, standalone group-sparse parent selection, and
benchmark sweeps.

Every subcommand is deterministic given its flags: identical invocations
produce byte-identical JSON and CSV outputs.  Wall-clock timings, the
one non-reproducible quantity, are always written to a separate
``timings.json`` next to the other outputs and never mixed into them.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from ._seeds import derive_seed
from .data import load_dataset, save_dataset
from .discovery import (
    DiscoveryConfig,
    discover,
    murgs_parent_selection,
    random_order_baseline,
)
from .graphs import CausalOrder, GroupDag, graph_from_dict, graph_to_dict
from .metrics import compute_metrics
from .mlp import RegressorConfig
from .synth import GanmSpec, generate

__all__ = ["BenchmarkCell", "BenchmarkConfig", "main"]

BENCHMARK_METHODS = ("gresit-murgs", "gresit-ind", "grandreg")
WORKERS_ENV = "GROUPRESIT_WORKERS"

# CLI pruning flag values -> library pruning method names.
_PRUNING_FLAG = {"murgs": "murgs", "ind": "greedy_ind", "none": "none"}

# Seed-path tags for the benchmark's per-task random streams.
_PATH_BENCH_DATA = 201
_PATH_BENCH_ALGO = 202

_METRIC_FIELDS = ("precision", "recall", "f1", "shd", "sid", "aaid", "oaid")


# --------------------------------------------------------------------------
# Output bookkeeping: files written by one invocation are tracked so a
# failure part-way through removes everything already written instead of
# leaving a directory that looks complete.


class _Outputs:
    def __init__(self) -> None:
        self.paths: list[Path] = []

    def write_json(self, path: Union[str, Path], obj) -> None:
        path = Path(path)
        self.paths.append(path)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(
        self, path: Union[str, Path], header: Sequence[str], rows
    ) -> None:
        path = Path(path)
        self.paths.append(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([_cell_text(v) for v in row])

    def track(self, *paths: Union[str, Path]) -> None:
        self.paths.extend(Path(p) for p in paths)

    def cleanup(self) -> None:
        for path in self.paths:
            try:
                path.unlink()
            except OSError:
                pass


def _cell_text(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


# --------------------------------------------------------------------------
# On-disk graphs use the package's name-based JSON mapping; the CLI adds
# an "order" list of node names when a causal order is known.


def _graph_payload(
    graph: GroupDag,
    names: Sequence[str],
    order: Optional[CausalOrder] = None,
) -> dict:
    obj = graph_to_dict(graph, names)
    if order is not None:
        obj["order"] = [names[g] for g in order.sequence]
    return obj


def _graph_from_file(
    path, names: Optional[Sequence[str]] = None
) -> tuple[GroupDag, list[str], Optional[CausalOrder]]:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    dag, node_names = graph_from_dict(obj, names)
    order = None
    if obj.get("order") is not None:
        index = {name: i for i, name in enumerate(node_names)}
        order = CausalOrder(tuple(index[name] for name in obj["order"]))
    return dag, node_names, order


def _resolve_group(names: Sequence[str], token: str) -> int:
    """A group reference on the command line: index or name."""
    try:
        index = int(token)
    except ValueError:
        try:
            return list(names).index(token)
        except ValueError:
            raise KeyError(f"unknown group {token!r}") from None
    if not 0 <= index < len(names):
        raise ValueError(
            f"group index {index} out of range for p={len(names)}"
        )
    return index


def _parse_edge_probability(text: str) -> Union[float, str]:
    if text == "proportional":
        return text
    return float(text)


def _regressor_from_args(args) -> RegressorConfig:
    return RegressorConfig(
        epochs=args.n_epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
    )


def _add_regressor_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--n-epochs", type=int, default=500,
        help="training epochs for the neural-network regressions",
    )
    parser.add_argument(
        "--lr", type=float, default=0.01, help="learning rate"
    )
    parser.add_argument(
        "--batch-size", type=int, default=500, help="minibatch size"
    )


# --------------------------------------------------------------------------
# generate


def cmd_generate(args, outputs: _Outputs) -> None:
    if args.group_dims is not None:
        dims = tuple(int(d) for d in args.group_dims.split(","))
        if len(dims) != args.p:
            raise ValueError(
                f"--group-dims lists {len(dims)} entries but --p is {args.p}"
            )
    else:
        dims = (args.group_dim,) * args.p
    spec = GanmSpec(
        p=args.p,
        group_dims=dims,
        edge_probability=_parse_edge_probability(args.edge_prob),
        n=args.n,
        seed=args.seed,
        snr=args.snr,
    )
    ds, truth = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data_path = out / "data.csv"
    spec_path = out / "spec.json"
    outputs.track(data_path, spec_path)
    save_dataset(ds, data_path, spec_path)
    outputs.write_json(
        out / "truth.json",
        _graph_payload(truth.dag, truth.group_names, CausalOrder(truth.order)),
    )
    outputs.write_json(
        out / "provenance.json",
        {"generation_spec": spec.to_dict(), **truth.provenance()},
    )


# --------------------------------------------------------------------------
# discover


def cmd_discover(args, outputs: _Outputs) -> None:
    ds = load_dataset(args.data, args.spec)
    cfg = DiscoveryConfig(
        regressor=_regressor_from_args(args),
        sink_criterion=args.sink_criterion,
        pruning=_PRUNING_FLAG[args.pruning],
        alpha=args.alpha,
        test_fraction=args.test_fraction,
        seed=args.seed,
    )
    result = discover(ds, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs.write_json(
        out / "graph.json",
        _graph_payload(result.graph, ds.spec.names, result.order),
    )
    outputs.write_json(
        out / "report.json",
        {"config": asdict(cfg), **result.to_dict()},
    )
    outputs.write_json(out / "timings.json", result.timings)


# --------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args, outputs: _Outputs) -> None:
    est, names, est_order = _graph_from_file(args.est)
    truth, _, _ = _graph_from_file(args.truth, names)
    order = est_order
    if args.order is not None:
        order = CausalOrder(
            tuple(_resolve_group(names, tok) for tok in args.order.split(","))
        )
    report = compute_metrics(est, truth, order=order)
    outputs.write_json(args.out, report.to_dict())
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))


# --------------------------------------------------------------------------
# murgs


def cmd_murgs(args, outputs: _Outputs) -> None:
    ds = load_dataset(args.data, args.spec)
    names = ds.spec.names
    response = _resolve_group(names, args.response)
    if args.candidates is not None:
        candidates = tuple(
            _resolve_group(names, tok) for tok in args.candidates.split(",")
        )
    else:
        candidates = tuple(g for g in range(ds.spec.p) if g != response)
    selection = murgs_parent_selection(
        ds, response, candidates, grid_size=args.grid_size
    )
    outputs.write_json(
        args.out,
        {
            "response": names[response],
            "response_index": response,
            "candidates": [names[g] for g in selection.candidates],
            "candidate_indices": list(selection.candidates),
            "lambda": selection.lam,
            "selected": [names[g] for g in selection.parents],
            "selected_indices": list(selection.parents),
        },
    )


# --------------------------------------------------------------------------
# benchmark


@dataclass(frozen=True)
class BenchmarkCell:
    """One experimental grid point: graph size, group dims, sample size."""

    p: int
    group_dims: tuple[int, ...]
    n: int

    def __post_init__(self):
        if len(self.group_dims) != self.p:
            raise ValueError("group_dims length must equal p")
        if self.p < 1 or self.n < 2:
            raise ValueError("cell needs p >= 1 and n >= 2")
        if any(d < 1 for d in self.group_dims):
            raise ValueError("group dimensions must be positive")

    @property
    def dims_label(self) -> str:
        if len(set(self.group_dims)) == 1:
            return str(self.group_dims[0])
        return "-".join(str(d) for d in self.group_dims)

    @classmethod
    def parse(cls, text: str) -> "BenchmarkCell":
        """``p=5,d=2,n=400`` (uniform dims) or ``p=3,dims=2-1-3,n=400``."""
        fields = {}
        for part in text.split(","):
            key, _, value = part.partition("=")
            if not value:
                raise ValueError(f"bad cell fragment {part!r} in {text!r}")
            fields[key.strip()] = value.strip()
        unknown = set(fields) - {"p", "d", "dims", "n"}
        if unknown:
            raise ValueError(f"unknown cell keys {sorted(unknown)} in {text!r}")
        if "p" not in fields or "n" not in fields:
            raise ValueError(f"cell {text!r} needs both p= and n=")
        p = int(fields["p"])
        if "dims" in fields:
            dims = tuple(int(d) for d in fields["dims"].split("-"))
        elif "d" in fields:
            dims = (int(fields["d"]),) * p
        else:
            raise ValueError(f"cell {text!r} needs d= or dims=")
        return cls(p=p, group_dims=dims, n=int(fields["n"]))


@dataclass(frozen=True)
class BenchmarkConfig:
    """A full sweep: cells x methods x repetitions from one base seed."""

    cells: tuple[BenchmarkCell, ...]
    methods: tuple[str, ...]
    repetitions: int
    seed: int
    alpha: float = 0.01
    regressor: Optional[RegressorConfig] = None

    def __post_init__(self):
        if not self.cells:
            raise ValueError("benchmark needs at least one cell")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        bad = set(self.methods) - set(BENCHMARK_METHODS)
        if bad or not self.methods:
            raise ValueError(
                f"methods must be a nonempty subset of {BENCHMARK_METHODS}"
            )


def _benchmark_job(payload: tuple) -> dict:
    (
        method,
        cell_index,
        rep,
        p,
        dims,
        n,
        data_seed,
        algo_seed,
        alpha,
        regressor_kwargs,
    ) = payload
    spec = GanmSpec(
        p=p,
        group_dims=dims,
        edge_probability="proportional",
        n=n,
        seed=data_seed,
    )
    ds, truth = generate(spec)
    if method == "grandreg":
        result = random_order_baseline(ds, seed=algo_seed)
    else:
        pruning = "murgs" if method == "gresit-murgs" else "greedy_ind"
        cfg = DiscoveryConfig(
            regressor=RegressorConfig(**regressor_kwargs),
            pruning=pruning,
            alpha=alpha,
            seed=algo_seed,
        )
        result = discover(ds, cfg)
    report = compute_metrics(result.graph, truth.dag, order=result.order)
    row = {
        "method": method,
        "cell": cell_index,
        "p": p,
        "d": BenchmarkCell(p, dims, n).dims_label,
        "n": n,
        "rep": rep,
        "data_seed": data_seed,
        "algo_seed": algo_seed,
    }
    row.update({m: getattr(report, m) for m in _METRIC_FIELDS})
    return row


def run_benchmark(config: BenchmarkConfig) -> list[dict]:
    """All (method, cell, repetition) jobs; rows in deterministic order.

    Worker count comes from the environment so scripted sweeps can scale
    without changing flags; every job carries its own derived seeds, so
    the result is identical at any parallelism.
    """
    regressor = config.regressor or RegressorConfig()
    regressor_kwargs = asdict(regressor)
    jobs = []
    for cell_index, cell in enumerate(config.cells):
        for rep in range(config.repetitions):
            data_seed = derive_seed(
                config.seed, _PATH_BENCH_DATA, cell_index, rep
            )
            for method_index, method in enumerate(config.methods):
                algo_seed = derive_seed(
                    config.seed, _PATH_BENCH_ALGO, cell_index, rep, method_index
                )
                jobs.append(
                    (
                        method,
                        cell_index,
                        rep,
                        cell.p,
                        cell.group_dims,
                        cell.n,
                        data_seed,
                        algo_seed,
                        config.alpha,
                        regressor_kwargs,
                    )
                )
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_benchmark_job, jobs))
    else:
        rows = [_benchmark_job(job) for job in jobs]
    rows.sort(key=lambda r: (r["method"], r["cell"], r["rep"]))
    return rows


def _aggregate_rows(rows: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(
            (row["method"], row["p"], row["d"], row["n"]), []
        ).append(row)
    aggregated = []
    for (method, p, d, n), members in sorted(groups.items()):
        entry = {"method": method, "p": p, "d": d, "n": n,
                 "repetitions": len(members)}
        for metric in _METRIC_FIELDS:
            values = [float(m[metric]) for m in members]
            entry[f"{metric}_mean"] = statistics.fmean(values)
            entry[f"{metric}_sd"] = (
                statistics.stdev(values) if len(values) > 1 else 0.0
            )
        aggregated.append(entry)
    return aggregated


def cmd_benchmark(args, outputs: _Outputs) -> None:
    config = BenchmarkConfig(
        cells=tuple(BenchmarkCell.parse(text) for text in args.cell),
        methods=tuple(args.methods.split(",")),
        repetitions=args.repetitions,
        seed=args.seed,
        alpha=args.alpha,
        regressor=_regressor_from_args(args),
    )
    start = time.perf_counter()
    rows = run_benchmark(config)
    elapsed = time.perf_counter() - start
    aggregated = _aggregate_rows(rows)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_header = [
        "method", "cell", "p", "d", "n", "rep", "data_seed", "algo_seed",
        *_METRIC_FIELDS,
    ]
    outputs.write_csv(
        out / "runs.csv",
        run_header,
        ([row[k] for k in run_header] for row in rows),
    )
    agg_header = ["method", "p", "d", "n", "repetitions"]
    for metric in _METRIC_FIELDS:
        agg_header += [f"{metric}_mean", f"{metric}_sd"]
    outputs.write_csv(
        out / "aggregated.csv",
        agg_header,
        ([entry[k] for k in agg_header] for entry in aggregated),
    )
    tidy_rows = [
        [entry["method"], metric, entry["p"], entry["d"], entry["n"],
         entry[f"{metric}_mean"], entry[f"{metric}_sd"]]
        for entry in aggregated
        for metric in _METRIC_FIELDS
    ]
    outputs.write_csv(
        out / "tidy.csv",
        ["method", "metric", "p", "d", "n", "mean", "sd"],
        tidy_rows,
    )
    outputs.write_json(out / "timings.json", {"total_seconds": elapsed})


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupresit",
        description=(
            "Causal discovery over variable groups: synthetic data, "
            "order learning with pruning, evaluation, and benchmarks."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser(
        "generate", help="sample a synthetic grouped dataset with known truth"
    )
    gen.add_argument("--p", type=int, required=True, help="number of groups")
    gen.add_argument(
        "--group-dim", type=int, default=2,
        help="uniform group dimension (ignored when --group-dims is given)",
    )
    gen.add_argument(
        "--group-dims", type=str, default=None,
        help="comma-separated per-group dimensions, e.g. 2,1,3",
    )
    gen.add_argument("--n", type=int, required=True, help="sample size")
    gen.add_argument(
        "--edge-prob", type=str, default="proportional",
        help="edge probability in [0, 1] or 'proportional'",
    )
    gen.add_argument("--snr", type=float, default=2.0,
                     help="per-coordinate signal-to-noise variance ratio")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=str, required=True, help="output directory")
    gen.set_defaults(func=cmd_generate)

    dis = sub.add_parser(
        "discover", help="learn a causal order and pruned graph from data"
    )
    dis.add_argument("--data", type=str, required=True, help="dataset CSV")
    dis.add_argument("--spec", type=str, required=True, help="group-spec JSON")
    dis.add_argument(
        "--pruning", choices=sorted(_PRUNING_FLAG), default="murgs"
    )
    dis.add_argument(
        "--sink-criterion", choices=("statistic", "p_value"),
        default="statistic",
    )
    dis.add_argument("--alpha", type=float, default=0.01,
                     help="level of the residual-independence tests")
    dis.add_argument("--test-fraction", type=float, default=0.25)
    dis.add_argument("--seed", type=int, default=0)
    _add_regressor_flags(dis)
    dis.add_argument("--out", type=str, required=True, help="output directory")
    dis.set_defaults(func=cmd_discover)

    ev = sub.add_parser(
        "evaluate", help="score an estimated graph against a known truth"
    )
    ev.add_argument("--est", type=str, required=True, help="estimate JSON")
    ev.add_argument("--truth", type=str, required=True, help="truth JSON")
    ev.add_argument(
        "--order", type=str, default=None,
        help="comma-separated causal order overriding the estimate's own",
    )
    ev.add_argument("--out", type=str, required=True, help="output JSON file")
    ev.set_defaults(func=cmd_evaluate)

    mu = sub.add_parser(
        "murgs",
        help="group-sparse parent selection for one response group",
    )
    mu.add_argument("--data", type=str, required=True, help="dataset CSV")
    mu.add_argument("--spec", type=str, required=True, help="group-spec JSON")
    mu.add_argument("--response", type=str, required=True,
                    help="response group (name or index)")
    mu.add_argument(
        "--candidates", type=str, default=None,
        help="comma-separated candidate groups (default: all others)",
    )
    mu.add_argument("--grid-size", type=int, default=10,
                    help="number of penalty values on the search grid")
    mu.add_argument("--out", type=str, required=True, help="output JSON file")
    mu.set_defaults(func=cmd_murgs)

    be = sub.add_parser(
        "benchmark",
        help="sweep methods over synthetic grid cells and aggregate metrics",
    )
    be.add_argument(
        "--cell", action="append", required=True,
        help="grid point, e.g. p=5,d=2,n=400 or p=3,dims=2-1-3,n=400 "
             "(repeatable)",
    )
    be.add_argument(
        "--methods", type=str, default=",".join(BENCHMARK_METHODS),
        help=f"comma-separated subset of {BENCHMARK_METHODS}",
    )
    be.add_argument("--repetitions", type=int, default=1)
    be.add_argument("--alpha", type=float, default=0.01)
    be.add_argument("--seed", type=int, default=0)
    _add_regressor_flags(be)
    be.add_argument("--out", type=str, required=True, help="output directory")
    be.set_defaults(func=cmd_benchmark)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    outputs = _Outputs()
    try:
        args.func(args, outputs)
    except Exception as exc:  # CLI boundary: report and clean up
        outputs.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
