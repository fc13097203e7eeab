"""Benchmark harness and command-line entry point.

One invocation runs one method on one dataset/constraint cell and emits a
schema-stable report (json, csv, or an aligned table).  All randomness
flows from the single ``--seed`` flag.  Exit codes: 0 success, 2 infeasible
instance, 3 no solution found, 4 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .centroids import cop_kmeans
from .data import (
    ConstraintSet,
    Dataset,
    generate_blobs,
    load_constraints,
    load_dataset,
    load_labels,
    sample_constraints,
)
from .driver import PassConfig, evaluate, run_pass
from .errors import DataFormatError, InfeasibleInstanceError

METHODS = ("pass-ca", "pass-ig", "cop", "qaoa-refine")

REPORT_FIELDS = (
    "dataset", "method", "scenario", "k", "seed", "status", "sse",
    "violations", "iterations", "wall_time", "selection_share", "ilp_share",
    "centroid_share", "other_share", "max_binaries",
)


@dataclass(frozen=True)
class RunSpec:
    """One benchmark cell: dataset, constraint source, method, and knobs."""

    data_path: str
    k: int
    method: str
    constraints_path: str | None = None
    sample_ml: int = 0
    sample_cl: int = 0
    truth_path: str | None = None
    header: bool = False
    selector_p: float = 20.0
    alpha: float = 0.2
    beta: float = 3.0
    temperature: float | None = None
    candidate_width: int = 4
    max_iters: int = 30
    seed: int = 0
    solver: str = "exact"
    time_limit: float = 10.0
    report: str = "json"
    out: str | None = None
    trace_path: str | None = None
    restarts: int = 100
    shots: int = 2048

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        file_source = self.constraints_path is not None
        sampled = self.sample_ml > 0 or self.sample_cl > 0
        if file_source and sampled:
            raise ValueError("give either --constraints or --sample-ml/--sample-cl")

    @property
    def scenario(self) -> str:
        if self.constraints_path is not None:
            return "file"
        if self.sample_ml > 0 and self.sample_cl > 0:
            return "Both"
        if self.sample_ml > 0:
            return "ML"
        if self.sample_cl > 0:
            return "CL"
        return "none"


def _resolve_constraints(spec: RunSpec, data: Dataset) -> ConstraintSet:
    if spec.constraints_path is not None:
        return load_constraints(spec.constraints_path, n=data.n)
    if spec.sample_ml or spec.sample_cl:
        truth = load_labels(spec.truth_path) if spec.truth_path else None
        return sample_constraints(
            data, truth=truth, n_ml=spec.sample_ml, n_cl=spec.sample_cl,
            seed=spec.seed,
        )
    return ConstraintSet()


def _pass_config(spec: RunSpec) -> PassConfig:
    return PassConfig(
        k=spec.k,
        selector="ca" if spec.method == "pass-ca" else "ig",
        percentile=spec.selector_p,
        alpha=spec.alpha,
        beta=spec.beta,
        temperature=spec.temperature,
        candidate_width=spec.candidate_width,
        max_iters=spec.max_iters,
        seed=spec.seed,
        solver=spec.solver,
        time_limit=spec.time_limit,
        refine="qaoa" if spec.method == "qaoa-refine" else "none",
        qaoa_shots=spec.shots,
    )


def run_benchmark(spec: RunSpec) -> dict:
    """Execute one cell and return the full report object."""
    data = load_dataset(spec.data_path, header=spec.header)
    constraints = _resolve_constraints(spec, data)
    row: dict = {f: None for f in REPORT_FIELDS}
    row.update(dataset=spec.data_path, method=spec.method, scenario=spec.scenario,
               k=spec.k, seed=spec.seed, max_binaries=0)
    trace: list = []
    start = time.perf_counter()

    if spec.method == "cop":
        state = cop_kmeans(data, constraints, spec.k, restarts=spec.restarts,
                           seed=spec.seed)
        wall = time.perf_counter() - start
        if state is None:
            row.update(status="no solution found", wall_time=wall,
                       selection_share=0.0, ilp_share=0.0,
                       centroid_share=0.0, other_share=1.0)
        else:
            metrics = evaluate(state.labels, data, constraints, state.model)
            row.update(
                status="ok", sse=metrics["sse"],
                violations=metrics["ml_violations"] + metrics["cl_violations"],
                iterations=spec.restarts, wall_time=wall,
                selection_share=0.0, ilp_share=0.0, centroid_share=0.0,
                other_share=1.0,
            )
    else:
        result = run_pass(data, constraints, _pass_config(spec))
        wall = time.perf_counter() - start
        shares = _phase_shares(result.phase_times, wall)
        row.update(
            status="ok", sse=result.sse, violations=result.violations,
            iterations=result.iterations, wall_time=wall,
            max_binaries=result.max_binaries, **shares,
        )
        trace = [dict(t) for t in result.trace]

    return {
        "spec": _spec_dict(spec),
        "result": {**row, "phase_times": None, "trace": trace},
        "env": {"version": __version__, "seed": spec.seed},
    }


def _phase_shares(phase_times: dict, wall: float) -> dict:
    wall = max(wall, 1e-12)
    sel = phase_times.get("selection", 0.0)
    ilp = phase_times.get("ilp", 0.0)
    cen = phase_times.get("centroids", 0.0)
    other = max(0.0, wall - sel - ilp - cen)
    return {
        "selection_share": sel / wall,
        "ilp_share": ilp / wall,
        "centroid_share": cen / wall,
        "other_share": other / wall,
    }


def _spec_dict(spec: RunSpec) -> dict:
    d = dict(spec.__dict__)
    d["scenario"] = spec.scenario
    return d


def scaling_sweep(sizes, k: int = 3, d: int = 2, seed: int = 0,
                  constraint_fraction: float = 0.25,
                  method: str = "pass-ig") -> dict:
    """Time the pipeline on synthetic blobs of growing size.

    Each size gets balanced Gaussian blobs with truth-consistent sampled
    constraints (ML and CL quotas are ``constraint_fraction * n`` each), and
    the log-log slope of runtime versus n is fitted across sizes.
    """
    rows = []
    for n in sizes:
        n = int(n)
        data, truth = generate_blobs(n, k, d=d, seed=seed)
        quota = int(constraint_fraction * n)
        constraints = sample_constraints(
            data, truth=truth, n_ml=quota, n_cl=quota, seed=seed
        )
        config = PassConfig(
            k=k, selector="ig" if method == "pass-ig" else "ca", seed=seed
        )
        start = time.perf_counter()
        result = run_pass(data, constraints, config)
        wall = time.perf_counter() - start
        rows.append({
            "n": n, "runtime": wall, "sse": result.sse,
            "violations": result.violations, "iterations": result.iterations,
            "max_binaries": result.max_binaries,
        })
    report: dict = {"rows": rows, "slope": None, "r_squared": None}
    if len(rows) >= 2:
        x = np.log(np.array([r["n"] for r in rows], dtype=float))
        y = np.log(np.array([max(r["runtime"], 1e-9) for r in rows]))
        slope, intercept = np.polyfit(x, y, 1)
        fitted = slope * x + intercept
        ss_res = float(((y - fitted) ** 2).sum())
        ss_tot = float(((y - y.mean()) ** 2).sum())
        report["slope"] = float(slope)
        report["r_squared"] = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return report


def _emit(report: dict, fmt: str, out_path: str | None) -> None:
    if fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=True, default=str) + "\n"
    elif fmt == "csv":
        row = report["result"]
        header = ",".join(REPORT_FIELDS)
        values = ",".join(str(row.get(f)) for f in REPORT_FIELDS)
        text = header + "\n" + values + "\n"
    else:  # table
        row = report["result"]
        width = max(len(f) for f in REPORT_FIELDS)
        lines = [f"{f.ljust(width)}  {row.get(f)}" for f in REPORT_FIELDS]
        text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="passclust",
        description="Constrained-clustering benchmark harness",
    )
    p.add_argument("--data", help="dataset CSV path")
    p.add_argument("--header", action="store_true", help="skip one header line")
    p.add_argument("--constraints", help="constraint file (ML/CL lines)")
    p.add_argument("--sample-ml", type=int, default=0, metavar="N")
    p.add_argument("--sample-cl", type=int, default=0, metavar="N")
    p.add_argument("--truth", help="truth labels file for constraint sampling")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=METHODS, default="pass-ig")
    p.add_argument("--selector-p", type=float, default=20.0)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--temp", type=float, default=None)
    p.add_argument("--cand-width", type=int, default=4, metavar="G")
    p.add_argument("--max-iters", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver", choices=("exact", "local"), default="exact")
    p.add_argument("--time-limit", type=float, default=10.0)
    p.add_argument("--restarts", type=int, default=100, help="COP restarts")
    p.add_argument("--shots", type=int, default=2048, help="QAOA shots")
    p.add_argument("--report", choices=("json", "csv", "table"), default="json")
    p.add_argument("--out", help="report output path (default stdout)")
    p.add_argument("--trace", help="write the per-iteration trace JSON here")
    p.add_argument("--jobs", type=int, default=1,
                   help="reserved for parallel cells; single runs ignore it")
    p.add_argument("--sweep-sizes",
                   help="comma-separated sizes: run the scaling sweep instead")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.sweep_sizes:
            sizes = [int(float(s)) for s in args.sweep_sizes.split(",")]
            report = scaling_sweep(sizes, k=args.k, seed=args.seed)
            text = json.dumps(report, indent=2, sort_keys=True) + "\n"
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0
        if not args.data:
            print("error: --data is required", file=sys.stderr)
            return 4
        spec = RunSpec(
            data_path=args.data, k=args.k, method=args.method,
            constraints_path=args.constraints, sample_ml=args.sample_ml,
            sample_cl=args.sample_cl, truth_path=args.truth,
            header=args.header, selector_p=args.selector_p, alpha=args.alpha,
            beta=args.beta, temperature=args.temp,
            candidate_width=args.cand_width, max_iters=args.max_iters,
            seed=args.seed, solver=args.solver, time_limit=args.time_limit,
            report=args.report, out=args.out, trace_path=args.trace,
            restarts=args.restarts, shots=args.shots,
        )
        report = run_benchmark(spec)
        _emit(report, spec.report, spec.out)
        if spec.trace_path:
            with open(spec.trace_path, "w") as fh:
                json.dump(report["result"]["trace"], fh, indent=2)
        if report["result"]["status"] == "no solution found":
            return 3
        return 0
    except InfeasibleInstanceError as exc:
        print(f"error: infeasible instance: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
