"""Command-line harness: scenario generation, optimization runs, the
exhaustive oracle, SLA-requirement sweeps and the GA convergence study.

Every command writes plain CSV/JSON result files with a ``# key=value``
provenance header (scenario seed, GA seed, grid point, artifact version)
and is byte-for-byte reproducible for identical inputs, regardless of the
worker count (``IOV_OFFLOAD_THREADS`` caps it). ``--plots`` additionally
renders the matching figures next to the delimited output.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .domain import DomainError, Scenario, load_scenario, save_scenario
from .evaluation import EvaluationReport
from .ga import (GaParams, GaTrace, Mode, default_population_size, run,
                 trace_to_csv)
from .oracle import load_oracle, oracle_to_dict, solve_exhaustive
from .workload import (WorkloadSpec, generate_scenario, ingest_trajectories,
                       load_workload_spec)

LATENCY_GRID = (0.1, 0.3, 0.5, 0.7, 0.9, 1.1)
PROC_GRID = (0.9, 1.1, 1.3, 1.5, 1.7, 1.9)
DEADLINE_GRID = (1.0, 1.2, 1.4, 1.6, 1.8, 2.0)
REQUESTS_GRID = (20, 25, 30, 35, 40, 45, 50)
CROSSOVER_GRID = (0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95)
MUTATION_GRID = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10)
POPULATION_MULTIPLIERS = (2, 4, 6, 8, 10)

ALL_MODES = (Mode.SLA_AWARE, Mode.QOS_ONLY, Mode.RANDOM)


def worker_count(n_tasks: int) -> int:
    """Worker pool size, capped by IOV_OFFLOAD_THREADS."""
    cap = os.environ.get("IOV_OFFLOAD_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, n_tasks))


def derive_seed(*keys: int) -> int:
    """Deterministic child seed from an ordered key tuple."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, provenance: dict, header: Sequence[str],
              rows: Sequence[Sequence]) -> None:
    lines = [f"# {k}={v}" for k, v in provenance.items()]
    lines.append(",".join(header))
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _violations_doc(report: EvaluationReport) -> dict:
    v = report.violations
    return {
        "lat_s": v.lat_s, "proc_s": v.proc_s, "deadline_s": v.deadline_s,
        "cpu": v.cpu, "mem": v.mem,
        "n_lat": v.n_lat, "n_proc": v.n_proc, "n_deadline": v.n_deadline,
        "n_cpu": v.n_cpu, "n_mem": v.n_mem, "n_distinct": v.n_distinct,
    }


def _per_request_doc(report: EvaluationReport) -> list[dict]:
    rows = []
    for rb in report.breakdown.per_request:
        rows.append({
            "request_id": rb.request_id,
            "server_id": rb.server_id,
            "comm_s": rb.comm_s,
            "proc_s": rb.proc_s,
            "io_s": rb.io_s,
            "total_s": rb.total_s,
            "comm_pattern": rb.comm.scenario if rb.comm is not None else None,
            "uncovered": rb.uncovered,
        })
    return rows


def _load_spec(path: Optional[str]) -> WorkloadSpec:
    return load_workload_spec(path) if path else WorkloadSpec()


def spec_for_grid(base: WorkloadSpec, vary: str, value: float) -> WorkloadSpec:
    """Apply one sweep grid point.

    The deadline bound tracks latency + processing while either of those
    is being varied, since a deadline covers both phases.
    """
    if vary == "latency":
        return replace(base, latency_max_s=value,
                       deadline_max_s=value + base.proc_max_s)
    if vary == "proc":
        return replace(base, proc_max_s=value,
                       deadline_max_s=base.latency_max_s + value)
    if vary == "deadline":
        return replace(base, deadline_max_s=value)
    if vary == "requests":
        return replace(base, n_requests=int(value))
    raise ValueError(f"unknown sweep dimension {vary!r}")


def grid_for(vary: str) -> tuple[float, ...]:
    return {"latency": LATENCY_GRID, "proc": PROC_GRID,
            "deadline": DEADLINE_GRID, "requests": REQUESTS_GRID}[vary]


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    spec = _load_spec(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    vehicles = None
    if args.trajectories:
        ingest = ingest_trajectories(
            args.trajectories, sample_period_s=args.sample_period,
            id_column=args.id_column, scale=args.traj_scale,
            origin_x=spec.rsu_origin_x)
        vehicles = ingest.vehicles
        write_json(out / "trajectory_mapping.json", ingest.mapping)
    scenario = generate_scenario(spec, args.seed, vehicles=vehicles)
    path = out / args.name
    save_scenario(scenario, path)
    print(f"wrote {path} ({len(scenario.requests)} requests, "
          f"{len(scenario.edges)} edges, {len(scenario.clouds)} clouds)")
    return 0


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def _ga_params(args, scenario: Scenario, mode: Mode, seed: int,
               known_optimum: Optional[float] = None) -> GaParams:
    population = args.population_size or default_population_size(
        len(scenario.requests))
    return GaParams(
        population_size=population,
        crossover_rate=args.crossover_rate,
        mutation_rate=args.mutation_rate,
        max_generations=args.max_generations,
        rng_seed=seed, mode=mode, known_optimum=known_optimum)


def cmd_optimize(args) -> int:
    scenario = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    known = None
    if args.known_optimum:
        oracle = load_oracle(args.known_optimum)
        if oracle.best_feasible is not None:
            known = oracle.best_feasible[1]
    mode = Mode(args.mode)
    params = _ga_params(args, scenario, mode, args.seed, known)
    trace = run(scenario, params, on_uncovered="mark",
                cpu_mem_rule=args.cpu_mem_rule)

    provenance = {
        "kind": "trace", "artifact": f"iov-offload {__version__}",
        "mode": mode.value, "scenario_seed": scenario.seed,
        "ga_seed": params.rng_seed,
        "population_size": params.population_size,
        "crossover_rate": params.crossover_rate,
        "mutation_rate": params.mutation_rate,
        "max_generations": params.max_generations,
        "known_optimum": "" if known is None else repr(known),
    }
    stem = f"{mode.value}_seed{args.seed}"
    trace_path = out / f"trace_{stem}.csv"
    trace_path.write_text(trace_to_csv(trace, provenance))

    summary = {
        "schema": 1,
        "artifact_version": __version__,
        "mode": mode.value,
        "scenario_seed": scenario.seed,
        "ga_seed": params.rng_seed,
        "params": {
            "population_size": params.population_size,
            "crossover_rate": params.crossover_rate,
            "mutation_rate": params.mutation_rate,
            "max_generations": params.max_generations,
            "known_optimum": known,
        },
        "generations_run": trace.generations_run,
        "best": {
            "genes": list(trace.best.assignment.genes),
            "total_time_s": trace.best.total_time_s,
            "feasible": trace.best.feasible,
            "violations": _violations_doc(trace.best),
            "per_request": _per_request_doc(trace.best),
        },
    }
    summary_path = out / f"summary_{stem}.json"
    write_json(summary_path, summary)
    if args.plots:
        from . import report
        report.render(trace_path, out)
    feas = "feasible" if trace.best.feasible else "infeasible"
    print(f"{mode.value}: best total {trace.best.total_time_s:.6f} s ({feas}) "
          f"after {trace.generations_run} generations -> {summary_path}")
    return 0


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def cmd_oracle(args) -> int:
    scenario = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = solve_exhaustive(scenario, limit=args.limit,
                              on_uncovered="mark",
                              cpu_mem_rule=args.cpu_mem_rule)
    doc = oracle_to_dict(result)
    doc["provenance"] = {"artifact_version": __version__,
                         "scenario_seed": scenario.seed}
    path = out / args.name
    write_json(path, doc)
    if result.best_feasible is not None:
        print(f"oracle: best feasible total {result.best_feasible[1]:.6f} s "
              f"over {result.enumeration_count} assignments -> {path}")
    else:
        print(f"oracle: no feasible assignment among "
              f"{result.enumeration_count} -> {path}")
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _run_sweep_task(payload: dict) -> list:
    spec = WorkloadSpec.from_dict(payload["spec"])
    scenario = generate_scenario(spec, payload["scenario_seed"])
    params = GaParams(
        population_size=default_population_size(len(scenario.requests)),
        crossover_rate=payload["crossover_rate"],
        mutation_rate=payload["mutation_rate"],
        max_generations=payload["max_generations"],
        rng_seed=payload["ga_seed"], mode=Mode(payload["mode"]))
    trace = run(scenario, params, on_uncovered="mark")
    best = trace.best
    v = best.violations
    return [payload["vary"], payload["value"], payload["mode"],
            payload["rep"], payload["scenario_seed"], payload["ga_seed"],
            best.total_time_s, best.feasible,
            v.n_lat, v.n_proc, v.n_deadline, v.n_cpu, v.n_mem, v.n_distinct,
            trace.generations_run]


SWEEP_HEADER = ("vary", "grid_value", "mode", "seed_index", "scenario_seed",
                "ga_seed", "total_time_s", "feasible", "n_lat", "n_proc",
                "n_deadline", "n_cpu", "n_mem", "n_distinct",
                "generations_run")


def _map_tasks(fn, payloads: list[dict]) -> list:
    workers = worker_count(len(payloads))
    if workers <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads))


def cmd_sweep(args) -> int:
    base = _load_spec(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    modes = [Mode(m) for m in args.modes.split(",")] if args.modes else list(ALL_MODES)
    grid = grid_for(args.vary)

    payloads = []
    for value in grid:
        spec = spec_for_grid(base, args.vary, value)
        for mode in modes:
            for rep in range(args.seeds):
                payloads.append({
                    "spec": spec.to_dict(), "vary": args.vary, "value": value,
                    "mode": mode.value, "rep": rep,
                    "scenario_seed": derive_seed(args.seed, 0, rep),
                    "ga_seed": derive_seed(args.seed, 1, rep),
                    "crossover_rate": args.crossover_rate,
                    "mutation_rate": args.mutation_rate,
                    "max_generations": args.max_generations,
                })
    rows = _map_tasks(_run_sweep_task, payloads)

    provenance = {
        "kind": "sweep", "artifact": f"iov-offload {__version__}",
        "vary": args.vary, "base_seed": args.seed, "seeds": args.seeds,
        "modes": ",".join(m.value for m in modes),
        "max_generations": args.max_generations,
        "workload": json.dumps(base.to_dict(), sort_keys=True,
                               separators=(",", ":")),
    }
    path = out / f"sweep_{args.vary}.csv"
    write_csv(path, provenance, SWEEP_HEADER, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    if args.plots:
        from . import report
        for fig in report.render(path, out):
            print(f"wrote {fig}")
    return 0


# ---------------------------------------------------------------------------
# converge
# ---------------------------------------------------------------------------

def _run_converge_task(payload: dict) -> dict:
    from .domain import scenario_from_dict
    scenario = scenario_from_dict(payload["scenario"])
    params = GaParams(
        population_size=payload["population_size"],
        crossover_rate=payload["crossover_rate"],
        mutation_rate=payload["mutation_rate"],
        max_generations=payload["max_generations"],
        rng_seed=payload["ga_seed"], mode=Mode.SLA_AWARE)
    trace = run(scenario, params, on_uncovered="mark")
    best_fs = [row.best_F for row in trace.rows]
    return {
        "stage": payload["stage"], "value": payload["value"],
        "rep": payload["rep"], "ga_seed": payload["ga_seed"],
        "final_best_F": trace.rows[-1].best_F,
        "mean_best_F": sum(best_fs) / len(best_fs),
        "best_total_time_s": trace.best.total_time_s,
        "best_feasible": trace.best.feasible,
        "generations_run": trace.generations_run,
        "trace": [(row.generation, row.best_F, row.mean_F, row.n_f,
                   row.best_feasible_time_s) for row in trace.rows],
    }


CONVERGE_HEADER = ("stage", "value", "seed_index", "ga_seed", "final_best_F",
                   "mean_best_F", "best_total_time_s", "best_feasible",
                   "generations_run")
CONVERGE_TRACE_HEADER = ("stage", "value", "seed_index", "generation",
                         "best_F", "mean_F", "n_f", "best_feasible_time_s")


def _parse_grid(text: Optional[str], default: tuple) -> tuple:
    if not text:
        return default
    return tuple(float(v) for v in text.split(","))


def cmd_converge(args) -> int:
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        scenario = generate_scenario(_load_spec(args.config), args.scenario_seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_requests = len(scenario.requests)
    scenario_doc = None
    from .domain import scenario_to_dict
    scenario_doc = scenario_to_dict(scenario)

    stages = []
    if args.stage in ("all", "crossover"):
        stages.append(("crossover_rate",
                       _parse_grid(args.crossover_grid, CROSSOVER_GRID)))
    if args.stage in ("all", "mutation"):
        stages.append(("mutation_rate",
                       _parse_grid(args.mutation_grid, MUTATION_GRID)))
    if args.stage in ("all", "population"):
        stages.append(("population_multiplier",
                       _parse_grid(args.population_grid,
                                   POPULATION_MULTIPLIERS)))

    selected = {"crossover_rate": 0.95, "mutation_rate": 0.01,
                "population_multiplier": 2}
    result_rows, trace_rows, stage_tables = [], [], {}
    for stage, grid in stages:
        payloads = []
        for value in grid:
            knobs = dict(selected)
            knobs[stage] = value
            multiplier = int(knobs["population_multiplier"])
            for rep in range(args.seeds):
                payloads.append({
                    "scenario": scenario_doc, "stage": stage, "value": value,
                    "rep": rep, "ga_seed": derive_seed(args.seed, 2, rep),
                    "population_size": multiplier * n_requests,
                    "crossover_rate": knobs["crossover_rate"],
                    "mutation_rate": knobs["mutation_rate"],
                    "max_generations": args.max_generations,
                })
        results = _map_tasks(_run_converge_task, payloads)

        by_value: dict[float, list[dict]] = {}
        for res in results:
            by_value.setdefault(res["value"], []).append(res)
            result_rows.append([res["stage"], res["value"], res["rep"],
                                res["ga_seed"], res["final_best_F"],
                                res["mean_best_F"], res["best_total_time_s"],
                                res["best_feasible"], res["generations_run"]])
            for gen, best_f, mean_f, n_f, feas_t in res["trace"]:
                trace_rows.append([res["stage"], res["value"], res["rep"],
                                   gen, best_f, mean_f, n_f, feas_t])

        # "Fastest convergence": highest per-run mean of the per-generation
        # best fitness, averaged over seeds. Ties prefer the cheaper knob
        # (more crossover, less mutation, smaller population).
        def mean_score(value: float) -> float:
            runs = by_value[value]
            return sum(r["mean_best_F"] for r in runs) / len(runs)

        table = {value: mean_score(value) for value in by_value}
        stage_tables[stage] = table
        if stage == "crossover_rate":
            selected[stage] = max(table, key=lambda v: (table[v], v))
        else:
            selected[stage] = max(table, key=lambda v: (table[v], -v))

    provenance = {
        "kind": "converge_results", "artifact": f"iov-offload {__version__}",
        "scenario_seed": scenario.seed, "base_seed": args.seed,
        "seeds": args.seeds, "stage": args.stage,
        "max_generations": args.max_generations,
    }
    results_path = out / "converge_results.csv"
    write_csv(results_path, provenance, CONVERGE_HEADER, result_rows)
    traces_path = out / "converge_traces.csv"
    write_csv(traces_path, {**provenance, "kind": "converge_traces"},
              CONVERGE_TRACE_HEADER, trace_rows)
    summary = {
        "schema": 1,
        "artifact_version": __version__,
        "scenario_seed": scenario.seed,
        "seeds": args.seeds,
        "selection_rule": "highest mean over seeds of the per-run mean "
                          "per-generation best fitness",
        "selected": selected,
        "population_size": int(selected["population_multiplier"]) * n_requests,
        "stage_scores": {stage: {repr(v): s for v, s in table.items()}
                         for stage, table in stage_tables.items()},
    }
    summary_path = out / "converge_summary.json"
    write_json(summary_path, summary)
    print(f"wrote {results_path} ({len(result_rows)} rows)")
    print(f"selected: " + ", ".join(f"{k}={v}" for k, v in selected.items()))
    if args.plots:
        from . import report
        for fig in report.render(traces_path, out):
            print(f"wrote {fig}")
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args) -> int:
    from . import report
    for fig in report.render(args.csv, args.out):
        print(f"wrote {fig}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iov-offload",
        description="Edge-cloud offloading simulator and GA optimizer "
                    "for vehicular requests")
    parser.add_argument("--version", action="version",
                        version=f"iov-offload {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a scenario file")
    gen.add_argument("--config", help="workload spec JSON")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=".")
    gen.add_argument("--name", default="scenario.json")
    gen.add_argument("--trajectories", help="trajectory CSV (x_est/y_est)")
    gen.add_argument("--sample-period", type=float, default=0.5)
    gen.add_argument("--traj-scale", type=float, default=1.0)
    gen.add_argument("--id-column")
    gen.set_defaults(func=cmd_generate)

    opt = sub.add_parser("optimize", help="run one offloading optimizer")
    opt.add_argument("--scenario", required=True)
    opt.add_argument("--mode", choices=[m.value for m in ALL_MODES],
                     default=Mode.SLA_AWARE.value)
    opt.add_argument("--seed", type=int, default=0)
    opt.add_argument("--out", default=".")
    opt.add_argument("--max-generations", type=int, default=1000)
    opt.add_argument("--population-size", type=int)
    opt.add_argument("--crossover-rate", type=float, default=0.95)
    opt.add_argument("--mutation-rate", type=float, default=0.01)
    opt.add_argument("--known-optimum", help="oracle JSON for early stop")
    opt.add_argument("--cpu-mem-rule", choices=["aggregate", "per_request"],
                     default="aggregate")
    opt.add_argument("--plots", action="store_true")
    opt.set_defaults(func=cmd_optimize)

    orc = sub.add_parser("oracle", help="exhaustive optimum for small scenarios")
    orc.add_argument("--scenario", required=True)
    orc.add_argument("--out", default=".")
    orc.add_argument("--name", default="oracle.json")
    orc.add_argument("--limit", type=int, default=10 ** 6)
    orc.add_argument("--cpu-mem-rule", choices=["aggregate", "per_request"],
                     default="aggregate")
    orc.set_defaults(func=cmd_oracle)

    swp = sub.add_parser("sweep", help="SLA requirement / request-count sweep")
    swp.add_argument("--config", help="base workload spec JSON")
    swp.add_argument("--vary", required=True,
                     choices=["latency", "proc", "deadline", "requests"])
    swp.add_argument("--seeds", type=int, default=10)
    swp.add_argument("--seed", type=int, default=0, help="base seed")
    swp.add_argument("--modes", help="comma list (default: all three)")
    swp.add_argument("--out", default=".")
    swp.add_argument("--max-generations", type=int, default=1000)
    swp.add_argument("--crossover-rate", type=float, default=0.95)
    swp.add_argument("--mutation-rate", type=float, default=0.01)
    swp.add_argument("--plots", action="store_true")
    swp.set_defaults(func=cmd_sweep)

    cnv = sub.add_parser("converge", help="GA parameter convergence study")
    cnv.add_argument("--scenario", help="scenario JSON (else generated)")
    cnv.add_argument("--config", help="workload spec for generation")
    cnv.add_argument("--scenario-seed", type=int, default=1)
    cnv.add_argument("--seeds", type=int, default=10)
    cnv.add_argument("--seed", type=int, default=0, help="base GA seed")
    cnv.add_argument("--stage", default="all",
                     choices=["all", "crossover", "mutation", "population"])
    cnv.add_argument("--crossover-grid", help="comma list of rates")
    cnv.add_argument("--mutation-grid", help="comma list of rates")
    cnv.add_argument("--population-grid", help="comma list of multipliers")
    cnv.add_argument("--max-generations", type=int, default=1000)
    cnv.add_argument("--out", default=".")
    cnv.add_argument("--plots", action="store_true")
    cnv.set_defaults(func=cmd_converge)

    rep = sub.add_parser("report", help="render figures from a result CSV")
    rep.add_argument("--csv", required=True)
    rep.add_argument("--out", default=".")
    rep.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
