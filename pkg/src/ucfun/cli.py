"""Command-line entry point ``ucfun``.

Subcommands: evolve, ga, oracle, evaluate, compare, heatmap. Every artifact
goes under ``--out``. Report JSON holds only seed-determined fields; wall-clock
timings are written next to it as ``<name>.timing.json``.

Exit codes: 0 success, 2 usage or configuration error, 3 backend failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .dispatch import dispatch
from .evaluator import DEFAULT_PENALTIES, Penalties, evaluate, evaluate_commitment
from .ga import GaConfig, run_ga
from .instance import CommitmentShapeError, InstanceError, UcInstance, load_instance, validate_commitment_shape
from .lang import ProgramEvaluationError, ProgramParseError, decode, parse
from .oracle import DEFAULT_LIMIT, InstanceTooLarge, solve_exhaustive
from .report import ReportError, SearchReport, load_report
from .samplers import API_KEY_ENV, LlmConfig, LlmConfigError, LlmSampler, MutationSampler, SamplerError
from .search import SearchAborted, SearchConfig, run_search

EXIT_OK, EXIT_USAGE, EXIT_BACKEND = 0, 2, 3

# Shown for context only: different data and language model, not reproducible here.
REFERENCE_ROWS = (("GA", 240.0, 14.5, 5236.0), ("FunSearch", 6.6, 3.9, 4884.0))

# config-file keys (as echoed in report "config" blocks) -> flag destinations
_CONFIG_ALIASES = {"max_samples": "samples", "budget": "node_budget", "max_evaluations": "max_evaluations"}
_REPORT_ONLY = {"sampler", "penalties"}


class UsageError(Exception):
    pass


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _penalties(args: argparse.Namespace) -> Penalties:
    return Penalties(args.demand_penalty, args.min_time_penalty)


def write_report(report: SearchReport, path: Path) -> None:
    report.write(path, timing=False)
    timing = {**report.timing(), "n_evaluations": report.n_evaluations}
    path.with_suffix(".timing.json").write_text(json.dumps(timing, indent=1) + "\n")


def _fmt_score(value: float | None) -> str:
    return "none" if value is None else f"{value:.3f}"


def best_of(runs: int, run: Callable[[int], SearchReport]) -> SearchReport:
    """Run ``run(r)`` for r in 0..runs-1 and keep the lowest score; earlier runs win ties."""
    best: SearchReport | None = None
    scores: list[float | None] = []
    for r in range(runs):
        rep = run(r)
        scores.append(rep.score)
        if rep.score is not None and (best is None or best.score is None or rep.score < best.score):
            best = rep
        elif best is None:
            best = rep
    assert best is not None
    if runs > 1:
        best.runs = scores
    return best


# --- evolution -----------------------------------------------------------------


def _sampler(args: argparse.Namespace):
    if args.sampler == "mutate":
        return MutationSampler()
    if not os.environ.get(API_KEY_ENV):
        raise LlmConfigError(f"environment variable {API_KEY_ENV} is not set")
    if not args.endpoint or not args.model:
        raise UsageError("--sampler llm needs --endpoint and --model")
    cfg = LlmConfig(
        endpoint=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        max_tokens=args.max_tokens,
        timeout=args.timeout,
        retries=args.retries,
        max_in_flight=args.max_in_flight,
    )
    return LlmSampler(cfg)


def _search_config(args: argparse.Namespace, samples: int, seed: int) -> SearchConfig:
    return SearchConfig(
        max_samples=samples,
        islands=args.islands,
        island_capacity=args.island_capacity,
        prompt_k=args.prompt_k,
        time_limit=args.time_limit,
        reset_interval=args.reset_interval,
        seed=seed,
        workers=args.workers,
        budget=args.node_budget,
        penalties=_penalties(args),
    )


def _evolve(instance: UcInstance, args: argparse.Namespace, samples: int) -> SearchReport:
    sampler = _sampler(args)
    try:
        return best_of(args.runs, lambda r: run_search(instance, sampler, _search_config(args, samples, args.seed + r)))
    finally:
        close = getattr(sampler, "close", None)
        if close is not None:
            close()


def _ga_config(args: argparse.Namespace, seed: int, max_evaluations: int | None) -> GaConfig:
    generations = args.generations
    if max_evaluations is not None:
        # let the evaluation budget, not the generation count, end the run
        per_gen = max(1, args.population - args.elitism)
        generations = max(generations, math.ceil((max_evaluations - args.population) / per_gen))
    return GaConfig(
        population=args.population,
        generations=generations,
        tournament=args.tournament,
        crossover_rate=args.crossover_rate,
        mutation_rate=args.mutation_rate,
        elitism=args.elitism,
        seed=seed,
        max_evaluations=max_evaluations,
        penalties=_penalties(args),
    )


def _ga(instance: UcInstance, args: argparse.Namespace, max_evaluations: int | None) -> SearchReport:
    return best_of(args.runs, lambda r: run_ga(instance, _ga_config(args, args.seed + r, max_evaluations)))


def _summary(label: str, report: SearchReport) -> str:
    return (f"{label}: best score {_fmt_score(report.score)}, "
            f"mean sampling time {report.mean_sampling_time:.6f} s, "
            f"mean evaluation time {report.mean_evaluation_time:.6f} s, "
            f"{report.n_evaluations} evaluations ({report.n_valid} valid)")


def cmd_evolve(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    report = _evolve(instance, args, args.samples)
    out = _out_dir(args)
    write_report(report, out / "evolve_report.json")
    print(_summary("evolve", report))
    if report.best is not None:
        print(f"best program: {report.best.program.normalized}")
    return EXIT_OK


def cmd_ga(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    report = _ga(instance, args, args.max_evaluations)
    write_report(report, _out_dir(args) / "ga_report.json")
    print(_summary("ga", report))
    return EXIT_OK


def oracle_report(instance: UcInstance, limit: int, penalties: Penalties) -> SearchReport:
    u, evaluation = solve_exhaustive(instance, limit, penalties)
    n_grids = 2 ** (instance.n_units * instance.n_periods)
    return SearchReport(
        method="oracle",
        config={"limit": limit, "penalties": {"demand": penalties.demand, "min_time": penalties.min_time}},
        seed=None,
        instance=instance.summary(),
        evaluation=evaluation,
        commitment=u,
        dispatch=dispatch(instance, u.values),
        trajectory=[evaluation.total_cost],
        n_evaluations=n_grids,
        n_valid=n_grids,
    )


def cmd_oracle(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    report = oracle_report(instance, args.limit, _penalties(args))
    report.write(_out_dir(args) / "oracle_report.json", timing=False)
    print(f"oracle: optimum total cost {report.score:.3f} over {report.n_evaluations} grids")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    if (args.program is None) == (args.commitment is None):
        raise UsageError("give exactly one of --program or --commitment")
    doc: dict[str, Any] = {"instance": instance.summary()}
    if args.program is not None:
        program = parse(args.program)
        u = decode(instance, program, args.node_budget, strict=args.strict).values
        doc["program"] = program.normalized
    else:
        try:
            grid = json.loads(Path(args.commitment).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read commitment file {args.commitment}: {exc}") from exc
        u = validate_commitment_shape(instance, grid)
    d, evaluation = evaluate_commitment(instance, u, _penalties(args))
    doc.update(evaluation.to_dict())
    doc["commitment"] = u.tolist()
    doc["dispatch"] = d.tolist()
    (_out_dir(args) / "evaluation.json").write_text(json.dumps(doc, indent=1) + "\n")
    print(f"total cost {evaluation.total_cost:.3f} (operating {evaluation.operating_cost:.3f}, "
          f"demand penalty {evaluation.demand_penalty:.3f}, min-time penalty {evaluation.min_time_penalty:.3f})")
    return EXIT_OK


# --- comparison ----------------------------------------------------------------


def format_table(rows: Sequence[tuple[str, float | None, float | None, float | None]]) -> str:
    head = ("Approach", "Sampling Time (s)", "Evaluation Time (s)", "Operating Cost ($)")
    cells = [head] + [
        (name, *("-" if v is None else f"{v:.3f}" if i < 2 else f"{v:.2f}" for i, v in enumerate(vals)))
        for name, *vals in rows
    ]
    widths = [max(len(row[k]) for row in cells) for k in range(4)]
    lines = [" | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)


def cmd_compare(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    budget = args.budget
    if budget < args.population:
        raise UsageError(f"--budget {budget} is smaller than the GA population {args.population}")
    out = _out_dir(args)
    ga = _ga(instance, args, budget)
    fs = _evolve(instance, args, budget)
    write_report(ga, out / "ga_report.json")
    write_report(fs, out / "funsearch_report.json")
    rows: list[tuple[str, float | None, float | None, float | None]] = [
        ("GA", ga.total_sampling_time, ga.total_evaluation_time, ga.score),
        ("FunSearch", fs.total_sampling_time, fs.total_evaluation_time, fs.score),
    ]
    try:
        oracle = oracle_report(instance, args.limit, _penalties(args))
    except InstanceTooLarge:
        oracle = None
    if oracle is not None:
        oracle.write(out / "oracle_report.json", timing=False)
        rows.append(("Oracle", None, None, oracle.score))
    table = format_table(rows)
    doc = {
        "instance": instance.summary(),
        "budget": budget,
        "runs": args.runs,
        "seed": args.seed,
        "rows": [dict(zip(("approach", "sampling_time", "evaluation_time", "operating_cost"), r)) for r in rows],
        "evaluations": {"GA": ga.n_evaluations, "FunSearch": fs.n_evaluations},
    }
    (out / "compare.json").write_text(json.dumps(doc, indent=1) + "\n")
    print(table)
    print(f"\n{budget} evaluations per run, best of {args.runs} run(s); times are totals of the selected run.")
    ref = "; ".join(f"{name} {s:g} s / {e:g} s / ${c:g}" for name, s, e, c in REFERENCE_ROWS)
    print(f"Reference figures from the original study (different data and model, not reproducible here): {ref}")
    return EXIT_OK


# --- heatmap -------------------------------------------------------------------


def cmd_heatmap(args: argparse.Namespace) -> int:
    doc = load_report(args.report)
    best = doc["best"]
    if best is None:
        raise ReportError(f"{args.report}: report has no best schedule")
    grid = np.asarray(best["commitment"])
    powers = np.asarray(best["dispatch"], dtype=float)
    demand = doc["instance"].get("demand")
    if grid.ndim != 2 or powers.shape != grid.shape or not np.isin(grid, (0, 1)).all():
        raise ReportError(f"{args.report}: commitment/dispatch are not matching 0/1 and MW grids")
    if demand is None or len(demand) != grid.shape[1]:
        raise ReportError(f"{args.report}: instance demand does not match the schedule horizon")
    out = _out_dir(args)
    with open(out / "heatmap.csv", "w", newline="") as fh:
        csv.writer(fh).writerows(grid.astype(int).tolist())
    total = powers.sum(axis=0)
    with open(out / "heatmap_periods.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["period", "demand", "total_generation"])
        for t in range(grid.shape[1]):
            w.writerow([t, repr(float(demand[t])), repr(float(total[t]))])
    print(f"wrote {grid.shape[0]}x{grid.shape[1]} grid to {out / 'heatmap.csv'}")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="out", help="directory for all artifacts (default: out)")
    p.add_argument("--config", help="JSON file of flag values, or a report whose config block is reused")
    p.add_argument("--demand-penalty", type=float, default=DEFAULT_PENALTIES.demand)
    p.add_argument("--min-time-penalty", type=float, default=DEFAULT_PENALTIES.min_time)


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=_positive_int, default=20,
                   help="independent runs with seeds seed..seed+runs-1; the best is reported (default 20)")


def _evolve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sampler", choices=("mutate", "llm"), default="mutate")
    p.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1,
                   help="concurrent sample+evaluate jobs (default: logical cores); 1 is fully deterministic")
    p.add_argument("--islands", type=_positive_int, default=4)
    p.add_argument("--island-capacity", type=_positive_int, default=64)
    p.add_argument("--prompt-k", type=_positive_int, default=2)
    p.add_argument("--time-limit", type=float, default=5.0, help="per-candidate evaluation limit, seconds")
    p.add_argument("--reset-interval", type=_positive_int, default=None)
    p.add_argument("--node-budget", type=_positive_int, default=SearchConfig.budget,
                   help="program node evaluations allowed per decode")
    llm = p.add_argument_group("LLM sampler")
    llm.add_argument("--endpoint", help="OpenAI-compatible base URL, e.g. http://localhost:8000/v1")
    llm.add_argument("--model")
    llm.add_argument("--temperature", type=float, default=0.8)
    llm.add_argument("--max-tokens", type=_positive_int, default=256)
    llm.add_argument("--timeout", type=float, default=30.0)
    llm.add_argument("--retries", type=int, default=2)
    llm.add_argument("--max-in-flight", type=_positive_int, default=4)


def _ga_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("genetic algorithm")
    g.add_argument("--population", type=int, default=GaConfig.population)
    g.add_argument("--generations", type=int, default=GaConfig.generations)
    g.add_argument("--tournament", type=int, default=GaConfig.tournament)
    g.add_argument("--crossover-rate", type=float, default=GaConfig.crossover_rate)
    g.add_argument("--mutation-rate", type=float, default=None, help="per-bit flip probability (default 1/(N*T))")
    g.add_argument("--elitism", type=int, default=GaConfig.elitism)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="ucfun", description="Unit commitment by evolved priority rules.")
    sub = parser.add_subparsers(dest="command", required=True)
    subs: dict[str, argparse.ArgumentParser] = {}

    p = subs["evolve"] = sub.add_parser("evolve", help="evolve a priority program")
    p.add_argument("instance")
    p.add_argument("--samples", type=int, default=500)
    _run_flags(p)
    _evolve_flags(p)
    _common(p)
    p.set_defaults(func=cmd_evolve)

    p = subs["ga"] = sub.add_parser("ga", help="run the genetic-algorithm baseline")
    p.add_argument("instance")
    p.add_argument("--max-evaluations", type=_positive_int, default=None)
    _run_flags(p)
    _ga_flags(p)
    _common(p)
    p.set_defaults(func=cmd_ga)

    p = subs["oracle"] = sub.add_parser("oracle", help="exhaustive optimum of a tiny instance")
    p.add_argument("instance")
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT, help="maximum number of grids to enumerate")
    _common(p)
    p.set_defaults(func=cmd_oracle)

    p = subs["evaluate"] = sub.add_parser("evaluate", help="score one program or commitment grid")
    p.add_argument("instance")
    p.add_argument("--program", help="priority program source")
    p.add_argument("--commitment", help="JSON file holding an N x T 0/1 grid")
    p.add_argument("--node-budget", type=_positive_int, default=SearchConfig.budget)
    p.add_argument("--strict", action="store_true", help="decode without the post-cover refinement")
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = subs["compare"] = sub.add_parser("compare", help="GA vs evolved program under one evaluation budget")
    p.add_argument("instance")
    p.add_argument("--budget", type=_positive_int, default=10_000, help="evaluations per run for both approaches")
    p.add_argument("--limit", type=int, default=2**20, help="add an oracle row when 2^(N*T) is at most this")
    _run_flags(p)
    _evolve_flags(p)
    _ga_flags(p)
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = subs["heatmap"] = sub.add_parser("heatmap", help="write on/off grid and per-period CSVs from a report")
    p.add_argument("report")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_heatmap, config=None)
    return parser, subs


def _config_defaults(path: str, sub: argparse.ArgumentParser) -> dict[str, Any]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    from_report = "config" in doc and isinstance(doc["config"], dict)
    if from_report:
        doc = doc["config"]
    known = {a.dest for a in sub._actions}
    values = {}
    for key, value in doc.items():
        if key == "penalties" and isinstance(value, dict) and "demand_penalty" in known:
            values["demand_penalty"] = value.get("demand", DEFAULT_PENALTIES.demand)
            values["min_time_penalty"] = value.get("min_time", DEFAULT_PENALTIES.min_time)
            continue
        dest =_CONFIG_ALIASES.get(key, key).replace("-", "_")
        if dest in known and dest not in ("config", "help", "instance"):
            values[dest] = value
        elif not (from_report or key in _REPORT_ONLY):
            raise UsageError(f"{path}: unknown config key {key!r}")
    return values


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "config", None):
            subs[args.command].set_defaults(**_config_defaults(args.config, subs[args.command]))
            args = parser.parse_args(argv)  # explicit flags still win over config values
        return args.func(args)
    except (UsageError, InstanceError, CommitmentShapeError, LlmConfigError, ReportError, InstanceTooLarge,
            ProgramParseError, ProgramEvaluationError, ValueError) as exc:
        print(f"ucfun: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SearchAborted, SamplerError) as exc:
        print(f"ucfun: backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
