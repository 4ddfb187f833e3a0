"""Command-line interface.

Exit codes: 0 success, 1 bad input (files, arguments, schema), 2 advisor or
evaluator configuration/connection failure, 3 oracle bound-check failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .advisor import TranscriptWriter, advisor_from_env
from .alignment import g_eval
from .domain import Allocation, DistrictAllocation
from .errors import (
    AdvisorFailure,
    AdvisorTransportError,
    ConfigurationError,
    ContractViolation,
    CoverplanError,
    EnumerationCapError,
    EvaluatorError,
    FormatError,
    InputError,
    LoadError,
    StructuralError,
)
from .guided_greedy import GuidanceParams, greedy
from .io import (
    GeneratorSpec,
    dumps_stable,
    export_allocation,
    generate_region,
    load_advice,
    load_allocation_mapping,
    load_region,
    load_run_record,
    save_region,
    save_run_record,
)
from .oracle import DEFAULT_ENUMERATION_CAP, bound_factors, brute_force_opt, check_bound
from .orchestrator import LoopConfig, run_multi, run_single, sweep

_INPUT_ERRORS = (
    InputError,
    LoadError,
    StructuralError,
    FormatError,
    EnumerationCapError,
    ContractViolation,
)
_ADVISOR_ERRORS = (
    ConfigurationError,
    AdvisorTransportError,
    AdvisorFailure,
    EvaluatorError,
)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _window(text: str) -> int | None:
    if text == "none":
        return None
    try:
        return int(text)
    except ValueError:
        raise InputError(f"window must be 'none' or an integer, got {text!r}") from None


def _load_config(path) -> dict:
    raw = Path(path).read_text()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise LoadError(f"{path}: config must be a JSON object")
    if data.get("schema_version") != 1:
        raise LoadError(f"{path}: config needs schema_version 1")
    return data


def _fill_from_config(args, keys) -> None:
    """CLI flags win; config fills whatever was left unset."""
    if not getattr(args, "config", None):
        return
    data = _load_config(args.config)
    for key in keys:
        if getattr(args, key, None) is None and key in data:
            value = data[key]
            if key in ("budgets", "seeds"):
                value = tuple(int(v) for v in value)
            elif key == "window":
                value = "none" if value in (None, "none") else str(value)
            setattr(args, key, value)


def _require(args, names) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise InputError(f"missing required options: {', '.join('--' + m for m in missing)}")


def _build_advisor(args, advice, region):
    env = dict(os.environ)
    if getattr(args, "advisor", None):
        env["ADVISOR_KIND"] = args.advisor
    return advisor_from_env(advice, region, seed=args.seed or 0, env=env)


def _counts_from_mapping(region, mapping) -> DistrictAllocation:
    by_name = {name: j for j, name in region.district_names.items()}
    counts = {}
    for key, value in mapping.items():
        if isinstance(key, str) and key in by_name:
            j = by_name[key]
        else:
            try:
                j = int(key)
            except (TypeError, ValueError):
                raise InputError(f"unknown district key {key!r}") from None
        counts[j] = value
    return DistrictAllocation.from_mapping(region, counts)


# ---------------------------------------------------------------- commands


def _cmd_generate(args) -> int:
    _require(args, ["out"])
    spec = GeneratorSpec(
        seed=args.seed or 0,
        districts=args.districts,
        cells_per_district=args.cells,
        population=args.population,
        pop_low=args.pop_low,
        pop_high=args.pop_high,
        coverage=args.coverage,
        radius=args.radius,
        coverage_density=args.density,
    )
    region = generate_region(spec)
    save_region(region, args.out)
    print(
        f"wrote region: {len(region.districts)} districts, "
        f"{len(region.cells)} cells -> {args.out}"
    )
    return 0


def _cmd_greedy(args) -> int:
    region = load_region(args.region)
    alloc, trace = greedy(region, args.budget)
    from .coverage import f_value

    value = f_value(region, alloc)
    print(f"greedy coverage at budget {args.budget}: {value:.6f}")
    print(f"selected cells: {list(alloc.selected)}")
    if args.out:
        Path(args.out).write_text(
            dumps_stable(
                {
                    "selected": list(alloc.selected),
                    "coverage_value": value,
                    "trace": trace.to_dict(),
                }
            )
        )
    return 0


def _solve_config(args, total_budget: int) -> LoopConfig:
    return LoopConfig(
        params=GuidanceParams(args.alpha, args.beta, total_budget),
        limit=args.limit,
        feedback_mode=args.mode,
        history_window=args.window,
        beta1_heuristic=args.beta1_heuristic,
        retry_limit=args.retry,
        include_cells_in_prompt=args.cells_in_prompt,
    )


def _write_run_outputs(record, region, outdir) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_run_record(record, outdir / "run_record.json")
    Path(outdir / "allocation.json").write_text(
        dumps_stable(
            {
                "region_key": record.region_key,
                "selected": list(record.final.selected),
                "coverage_value": record.final_coverage,
                "alignment": record.final_alignment.to_dict(),
                "per_district": {
                    str(j): v for j, v in sorted(record.final_per_district.items())
                },
            }
        )
    )


def _print_run_summary(record) -> None:
    print(f"final coverage: {record.final_coverage:.6f}")
    print(f"final alignment: {record.final_alignment.total:.6f}")
    print(f"iterations recorded: {len(record.iterations)}")


def _cmd_solve(args) -> int:
    _fill_from_config(
        args,
        ["alpha", "beta", "budget", "limit", "mode", "window", "advisor", "retry"],
    )
    _require(args, ["alpha", "beta", "budget"])
    _apply_loop_defaults(args)
    region = load_region(args.region)
    advice = load_advice(args.advice)
    advisor = _build_advisor(args, advice, region)
    config = _solve_config(args, args.budget)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with TranscriptWriter(outdir / "transcript.jsonl") as transcript:
        record = run_single(region, args.budget, advice, config, advisor, transcript)
    _write_run_outputs(record, region, outdir)
    _print_run_summary(record)
    return 0


def _cmd_multi(args) -> int:
    _fill_from_config(
        args,
        ["alpha", "beta", "budgets", "limit", "mode", "window", "advisor", "retry"],
    )
    _require(args, ["alpha", "beta", "budgets"])
    _apply_loop_defaults(args)
    region = load_region(args.region)
    advice = load_advice(args.advice)
    advisor = _build_advisor(args, advice, region)
    total = sum(args.budgets)
    config = _solve_config(args, total)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with TranscriptWriter(outdir / "transcript.jsonl") as transcript:
        record = run_multi(
            region, args.budgets, advice, config, advisor, transcript=transcript
        )
    _write_run_outputs(record, region, outdir)
    _print_run_summary(record)
    print(f"rounds: {len(record.round_inits)}")
    return 0


def _apply_loop_defaults(args) -> None:
    if args.limit is None:
        args.limit = 10
    if args.mode is None:
        args.mode = "verbal"
    # unset -> the default window of 1; the literal "none" -> no history
    if args.window is None:
        args.window = 1
    elif isinstance(args.window, str):
        args.window = _window(args.window)
    if args.retry is None:
        args.retry = 3


def _cmd_sweep(args) -> int:
    _fill_from_config(args, ["alphas", "beta", "budget", "limit", "advisor", "seeds"])
    if isinstance(args.alphas, list):
        args.alphas = tuple(float(a) for a in args.alphas)
    _require(args, ["alphas", "beta", "budget", "out"])
    if args.limit is None:
        args.limit = 10
    region = load_region(args.region)
    advice = load_advice(args.advice)

    def factory(seed):
        env = dict(os.environ)
        if args.advisor:
            env["ADVISOR_KIND"] = args.advisor
        return advisor_from_env(advice, region, seed=seed, env=env)

    report = sweep(
        region,
        advice,
        alphas=args.alphas,
        beta=args.beta,
        budget=args.budget,
        seeds=args.seeds,
        advisor_factory=factory,
        modes=tuple(args.modes.split(",")),
        windows=tuple(_window(w) for w in args.windows.split(",")),
        limit=args.limit,
        beta1_heuristic=args.beta1_heuristic,
    )
    Path(args.out).write_text(dumps_stable(report))
    print(f"sweep rows: {len(report['rows'])} -> {args.out}")
    return 0


def _cmd_score(args) -> int:
    region = load_region(args.region)
    advice = load_advice(args.advice)
    counts = _counts_from_mapping(region, load_allocation_mapping(args.counts))
    score = g_eval(advice, counts)
    print(f"alignment: {score.total:.6f}")
    for advice_id in sorted(score.per_advice):
        print(f"  {advice_id}: {score.per_advice[advice_id]:.6f}")
    if args.out:
        Path(args.out).write_text(dumps_stable(score.to_dict()))
    return 0


def _cmd_oracle(args) -> int:
    region = load_region(args.region)
    result = brute_force_opt(region, args.budget, cap=args.cap)
    print(f"optimum at budget {args.budget}: {result.opt_value:.6f}")
    print(f"optimal sets: {len(result.opt_sets)} (enumerated {result.enumerated_count})")
    if args.record:
        record = load_run_record(args.record)
        params = GuidanceParams(record.alpha, record.beta, args.budget)
        check = check_bound(record.final_coverage, result, params)
        sharp, weak = bound_factors(params)
        print(f"sharp factor: {sharp:.6f}  weak factor: {weak:.6f}")
        print(f"achieved {record.final_coverage:.6f} vs required {check.sharp_bound:.6f}")
        if not check.passed:
            print("bound check: FAIL", file=sys.stderr)
            return 3
        print("bound check: PASS")
    return 0


def _cmd_export(args) -> int:
    region = load_region(args.region)
    record = load_run_record(args.record)
    export_allocation(record, region, args.format, args.out)
    print(f"exported {args.format} -> {args.out}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coverplan",
        description="Budgeted facility placement with advice-guided greedy selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, advisor_flags=False):
        p.add_argument("--seed", type=int, default=None, help="run seed")
        p.add_argument("--config", default=None, help="JSON config manifest")
        if advisor_flags:
            p.add_argument("--advisor", choices=("mock", "http"), default=None)

    p = sub.add_parser("generate", help="write a synthetic region file")
    common(p)
    p.add_argument("--districts", type=int, required=True)
    p.add_argument("--cells", type=int, required=True, help="cells per district")
    p.add_argument("--population", choices=("uniform", "heavy"), default="uniform")
    p.add_argument("--pop-low", type=float, default=50.0)
    p.add_argument("--pop-high", type=float, default=150.0)
    p.add_argument("--coverage", choices=("radius", "random"), default="radius")
    p.add_argument("--radius", type=float, default=1.5)
    p.add_argument("--density", type=float, default=0.15)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("greedy", help="plain greedy baseline")
    common(p)
    p.add_argument("--region", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_greedy)

    def loop_flags(p):
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--limit", type=int, default=None)
        p.add_argument("--mode", choices=("verbal", "quantitative"), default=None)
        p.add_argument("--window", default=None, help="none, 1, or 3 (default 1)")
        p.add_argument("--retry", type=int, default=None)
        p.add_argument("--beta1-heuristic", action="store_true")
        p.add_argument("--cells-in-prompt", action="store_true")
        p.add_argument("--outdir", default="run_out")

    p = sub.add_parser("solve", help="single-round advisor loop")
    common(p, advisor_flags=True)
    p.add_argument("--region", required=True)
    p.add_argument("--advice", required=True)
    p.add_argument("--budget", type=int, default=None)
    loop_flags(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("multi", help="multi-round advisor loop")
    common(p, advisor_flags=True)
    p.add_argument("--region", required=True)
    p.add_argument("--advice", required=True)
    p.add_argument("--budgets", type=_int_list, default=None, help="e.g. 3,2,2")
    loop_flags(p)
    p.set_defaults(func=_cmd_multi)

    p = sub.add_parser("sweep", help="alpha/mode/window grid over seeds")
    common(p, advisor_flags=True)
    p.add_argument("--region", required=True)
    p.add_argument("--advice", required=True)
    p.add_argument("--alphas", type=_float_list, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--seeds", type=_int_list, default=(0,))
    p.add_argument("--modes", default="verbal")
    p.add_argument("--windows", default="1")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--beta1-heuristic", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("score", help="alignment score of a district-count mapping")
    common(p)
    p.add_argument("--region", required=True)
    p.add_argument("--advice", required=True)
    p.add_argument("--counts", required=True, help="JSON object of district -> count")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("oracle", help="brute-force optimum and bound check")
    common(p)
    p.add_argument("--region", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    p.add_argument("--record", default=None, help="run record to check against the bound")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("export", help="export a run's final allocation")
    common(p)
    p.add_argument("--record", required=True)
    p.add_argument("--region", required=True)
    p.add_argument("--format", choices=("json", "csv", "geojson"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except _ADVISOR_ERRORS as exc:
        print(f"advisor error: {exc}", file=sys.stderr)
        return 2
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CoverplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
