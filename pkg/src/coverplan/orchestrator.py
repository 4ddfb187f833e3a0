"""Iterative advisor-in-the-loop planning runs.

A single-round run seeds with plain greedy, then repeats for a fixed number
of iterations: render prompt -> advisor proposes district allocation ->
guided greedy realizes it -> coverage/alignment deltas are fed back into the
prompt's editable trail. Multi-round runs repeat this per round on top of
everything already built, with floors equal to the accumulated per-district
counts; earlier facilities are never removed.

Every run produces a RunRecord that serializes to JSON deterministically;
with a mock advisor and a fixed seed, reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import statistics
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

from .advisor import (
    Advisor,
    AdvisorContext,
    FeedbackRecord,
    PromptState,
    TranscriptWriter,
    build_feedback,
    propose,
    render_prompt,
    render_reflection_prompt,
    update_prompt,
)
from .alignment import AdviceItem, AlignmentScore, g_eval
from .coverage import f_value
from .domain import (
    Allocation,
    Budget,
    DistrictAllocation,
    Region,
    check_same_region,
    district_counts,
)
from .errors import AdvisorFailure, ConfigurationError, InputError
from .guided_greedy import (
    GuidanceParams,
    SelectionTrace,
    greedy,
    guarantee_quota,
    guided_greedy,
)

FEEDBACK_MODES = ("verbal", "quantitative")
HISTORY_WINDOWS = (None, 1, 3)


@dataclass(frozen=True)
class LoopConfig:
    """Run configuration. ``params.budget`` is the total new-facility budget
    of the run (the per-round split is passed to run_multi separately)."""

    params: GuidanceParams
    limit: int = 10
    feedback_mode: str = "verbal"
    history_window: int | None = 1
    beta1_heuristic: bool = False
    retry_limit: int = 3
    include_cells_in_prompt: bool = False

    def __post_init__(self):
        if not isinstance(self.limit, int) or self.limit < 1:
            raise InputError(f"iteration limit must be >= 1, got {self.limit!r}")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise InputError(f"unknown feedback mode {self.feedback_mode!r}")
        if self.history_window not in HISTORY_WINDOWS:
            raise InputError(f"history window must be one of {HISTORY_WINDOWS}")
        if self.retry_limit < 1:
            raise InputError("retry limit must be >= 1")
        if self.beta1_heuristic and self.params.beta != 1.0:
            raise ConfigurationError(
                f"the beta=1 heuristic requires beta == 1.0, got {self.params.beta}"
            )


@dataclass(frozen=True)
class RoundInit:
    """Context computed at the start of a round: the from-scratch greedy used
    for the prompt and as the delta baseline, plus the floors in force."""

    round_index: int
    round_budget: int
    target_size: int
    context_allocation: Allocation
    context_coverage: float
    minimum: DistrictAllocation
    seed_cells: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "round_budget": self.round_budget,
            "target_size": self.target_size,
            "context_allocation": self.context_allocation.to_dict(),
            "context_coverage": self.context_coverage,
            "minimum": self.minimum.to_dict(),
            "seed_cells": list(self.seed_cells),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RoundInit":
        return cls(
            round_index=int(data["round_index"]),
            round_budget=int(data["round_budget"]),
            target_size=int(data["target_size"]),
            context_allocation=Allocation.from_dict(data["context_allocation"]),
            context_coverage=float(data["context_coverage"]),
            minimum=DistrictAllocation({int(j): int(c) for j, c in data["minimum"].items()}),
            seed_cells=tuple(int(c) for c in data["seed_cells"]),
        )


@dataclass(frozen=True)
class IterationRecord:
    round_index: int
    iteration: int
    proposal: DistrictAllocation
    proposal_accepted: bool
    allocation: Allocation
    coverage_value: float
    per_district_coverage: dict[int, float]
    alignment: AlignmentScore
    feedback: FeedbackRecord
    prompt_hash: str
    feedback_segments: int
    trace: SelectionTrace

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "iteration": self.iteration,
            "proposal": self.proposal.to_dict(),
            "proposal_accepted": self.proposal_accepted,
            "allocation": self.allocation.to_dict(),
            "coverage_value": self.coverage_value,
            "per_district_coverage": {
                str(j): v for j, v in sorted(self.per_district_coverage.items())
            },
            "alignment": self.alignment.to_dict(),
            "feedback": self.feedback.to_dict(),
            "prompt_hash": self.prompt_hash,
            "feedback_segments": self.feedback_segments,
            "trace": self.trace.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "IterationRecord":
        return cls(
            round_index=int(data["round_index"]),
            iteration=int(data["iteration"]),
            proposal=DistrictAllocation({int(j): int(c) for j, c in data["proposal"].items()}),
            proposal_accepted=bool(data["proposal_accepted"]),
            allocation=Allocation.from_dict(data["allocation"]),
            coverage_value=float(data["coverage_value"]),
            per_district_coverage={
                int(j): float(v) for j, v in data["per_district_coverage"].items()
            },
            alignment=AlignmentScore.from_dict(data["alignment"]),
            feedback=FeedbackRecord.from_dict(data["feedback"]),
            prompt_hash=str(data["prompt_hash"]),
            feedback_segments=int(data["feedback_segments"]),
            trace=SelectionTrace.from_dict(data["trace"]),
        )


@dataclass(frozen=True)
class RunRecord:
    region_key: str
    advisor: str
    alpha: float
    beta: float
    budgets: tuple[int, ...]
    existing_size: int
    limit: int
    feedback_mode: str
    history_window: int | None
    beta1_heuristic: bool
    round_inits: tuple[RoundInit, ...]
    iterations: tuple[IterationRecord, ...]
    final: Allocation
    final_coverage: float
    final_per_district: dict[int, float]
    final_alignment: AlignmentScore
    schema_version: int = 1

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "region_key": self.region_key,
            "advisor": self.advisor,
            "alpha": self.alpha,
            "beta": self.beta,
            "budgets": list(self.budgets),
            "existing_size": self.existing_size,
            "limit": self.limit,
            "feedback_mode": self.feedback_mode,
            "history_window": self.history_window,
            "beta1_heuristic": self.beta1_heuristic,
            "round_inits": [r.to_dict() for r in self.round_inits],
            "iterations": [it.to_dict() for it in self.iterations],
            "final": self.final.to_dict(),
            "final_coverage": self.final_coverage,
            "final_per_district": {
                str(j): v for j, v in sorted(self.final_per_district.items())
            },
            "final_alignment": self.final_alignment.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RunRecord":
        return cls(
            schema_version=int(data["schema_version"]),
            region_key=str(data["region_key"]),
            advisor=str(data["advisor"]),
            alpha=float(data["alpha"]),
            beta=float(data["beta"]),
            budgets=tuple(int(b) for b in data["budgets"]),
            existing_size=int(data["existing_size"]),
            limit=int(data["limit"]),
            feedback_mode=str(data["feedback_mode"]),
            history_window=None
            if data["history_window"] is None
            else int(data["history_window"]),
            beta1_heuristic=bool(data["beta1_heuristic"]),
            round_inits=tuple(RoundInit.from_dict(r) for r in data["round_inits"]),
            iterations=tuple(IterationRecord.from_dict(it) for it in data["iterations"]),
            final=Allocation.from_dict(data["final"]),
            final_coverage=float(data["final_coverage"]),
            final_per_district={
                int(j): float(v) for j, v in data["final_per_district"].items()
            },
            final_alignment=AlignmentScore.from_dict(data["final_alignment"]),
        )


def per_district_coverage(region: Region, alloc: Allocation) -> dict[int, float]:
    """Coverage contributed by each district's own facilities: f(S ∩ T_j)."""
    by_district: dict[int, list[int]] = {j: [] for j in region.district_ids}
    for cell_id in alloc.selected:
        by_district[region.cells[cell_id].district_id].append(cell_id)
    return {
        j: f_value(region, Allocation(tuple(cells), region.key))
        for j, cells in by_district.items()
    }


def apply_beta1_heuristic(
    region: Region, params: GuidanceParams, base: Allocation | None = None
) -> tuple[Allocation, SelectionTrace, DistrictAllocation]:
    """Greedy-seed the guarantee quota, then let the advisor own the rest.

    Selects ceil(alpha * budget) cells by plain greedy extension of ``base``
    and returns (seed allocation, seed trace, floors). Each seed pick carries
    the unrestricted best gain, so the theorem's witness subsequence exists no
    matter how the remaining budget is completed. Only valid at beta == 1.0,
    where the guided step would force those picks anyway.
    """
    if params.beta != 1.0:
        raise ConfigurationError(
            f"the beta=1 heuristic requires beta == 1.0, got {params.beta}"
        )
    if base is None:
        base = Allocation((), region.key)
    quota = guarantee_quota(params.alpha, params.budget)
    seed, trace = greedy(region, quota, base=base)
    return seed, trace, district_counts(seed, region)


def _window_view(
    history: Sequence[FeedbackRecord], window: int | None
) -> tuple[FeedbackRecord, ...] | None:
    if window is None:
        return None
    return tuple(history[-window:])


def _prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode()).hexdigest()[:16]


def run_multi(
    region: Region,
    budgets: Sequence[int],
    advice: Sequence[AdviceItem],
    config: LoopConfig,
    advisor: Advisor,
    existing: Allocation | None = None,
    transcript: TranscriptWriter | None = None,
) -> RunRecord:
    """Multi-round planning. Each round adds its budget on top of everything
    built so far; proposals are cumulative district totals and must respect
    the accumulated counts as floors."""
    budgets = tuple(int(b) for b in budgets)
    Budget(total=sum(budgets), rounds=budgets)  # validates shape
    if config.params.budget != sum(budgets):
        raise InputError(
            f"config budget {config.params.budget} != sum of round budgets {sum(budgets)}"
        )
    if not advice:
        raise InputError("advice set is empty")
    existing = existing if existing is not None else Allocation((), region.key)
    check_same_region(region, existing)
    if existing.size + sum(budgets) > region.n_cells:
        raise InputError("budgets plus existing facilities exceed the region size")

    names = {j: region.district_names[j] for j in region.district_ids}
    advice_texts = tuple(item.text for item in advice)
    pops = region.population_by_district

    accumulated = existing
    round_inits: list[RoundInit] = []
    iteration_records: list[IterationRecord] = []

    for round_index, round_budget in enumerate(budgets, start=1):
        target_size = accumulated.size + round_budget
        context_alloc, _ = greedy(region, target_size)
        context_cov = f_value(region, context_alloc)
        initial_cov = per_district_coverage(region, context_alloc)

        base = accumulated
        floors = district_counts(accumulated, region)
        seed_cells: tuple[int, ...] = ()
        seed_steps: tuple = ()
        if config.beta1_heuristic:
            seed_alloc, seed_trace, floors = apply_beta1_heuristic(
                region,
                GuidanceParams(config.params.alpha, config.params.beta, round_budget),
                base=accumulated,
            )
            seed_cells = seed_alloc.selected[accumulated.size :]
            seed_steps = seed_trace.steps
            base = seed_alloc
        picks = target_size - base.size

        round_inits.append(
            RoundInit(
                round_index=round_index,
                round_budget=round_budget,
                target_size=target_size,
                context_allocation=context_alloc,
                context_coverage=context_cov,
                minimum=floors,
                seed_cells=seed_cells,
            )
        )

        prompt_state = PromptState()
        prev_alloc = context_alloc
        prev_prev: Allocation | None = None
        accepted_proposal: DistrictAllocation | None = None
        fallback_proposal: DistrictAllocation | None = None
        fb_history: list[FeedbackRecord] = []

        for iteration in range(1, config.limit + 1):
            ctx = AdvisorContext(
                advice_texts=advice_texts,
                budget=target_size,
                district_names=names,
                population_per_district=pops,
                initial_coverage_per_district=initial_cov,
                current=district_counts(prev_alloc, region),
                previous=None if prev_prev is None else district_counts(prev_prev, region),
                minimum=floors,
                deltas=_window_view(fb_history, config.history_window),
                previous_proposal=accepted_proposal,
                round_index=round_index,
                iteration=iteration,
                initial_cells=context_alloc.selected
                if config.include_cells_in_prompt
                else None,
            )
            prompt = render_prompt(prompt_state, ctx)
            segments = len(prompt_state.editable)

            try:
                proposal = propose(advisor, prompt, ctx, config.retry_limit, transcript)
                accepted = True
                accepted_proposal = proposal
            except AdvisorFailure:
                accepted = False
                if accepted_proposal is not None:
                    proposal = accepted_proposal
                else:
                    if fallback_proposal is None:
                        completion, _ = greedy(region, picks, base=base)
                        fallback_proposal = district_counts(completion, region)
                    proposal = fallback_proposal

            remaining = DistrictAllocation(
                {j: proposal.get(j) - floors.get(j) for j in region.district_ids}
            )
            if picks > 0:
                if config.beta1_heuristic:
                    # guarantee is already secured by the seed; the completion
                    # follows the proposal as pure capacities
                    completion_params = GuidanceParams(0.0, 0.0, picks)
                else:
                    completion_params = GuidanceParams(
                        config.params.alpha, config.params.beta, picks
                    )
                alloc_i, step_trace = guided_greedy(completion_params, region, base, remaining)
                steps = seed_steps + step_trace.steps
            else:
                alloc_i = base
                steps = seed_steps
            trace = SelectionTrace(
                steps=tuple(steps),
                alpha=config.params.alpha,
                beta=config.params.beta,
                budget=round_budget,
                base_size=accumulated.size,
            )

            f_i = f_value(region, alloc_i)
            h_i = district_counts(alloc_i, region)
            fb = build_feedback(prev_alloc, alloc_i, region, advice)
            if config.feedback_mode == "verbal":
                refl_ctx = replace(
                    ctx,
                    current=h_i,
                    previous=district_counts(prev_alloc, region),
                    deltas=_window_view(fb_history + [fb], config.history_window),
                )
                reflection_prompt = render_reflection_prompt(refl_ctx)
                verbal = advisor.reflect(reflection_prompt, refl_ctx, fb)
                if transcript is not None:
                    transcript.write(
                        {
                            "phase": "reflect",
                            "round": round_index,
                            "iteration": iteration,
                            "prompt": reflection_prompt,
                            "response": verbal,
                        }
                    )
                fb = replace(fb, verbal=verbal)
            fb_history.append(fb)
            prompt_state = update_prompt(
                prompt_state,
                fb,
                mode=config.feedback_mode,
                names=names,
                history=_window_view(fb_history, config.history_window) or (fb,),
            )

            iteration_records.append(
                IterationRecord(
                    round_index=round_index,
                    iteration=iteration,
                    proposal=proposal,
                    proposal_accepted=accepted,
                    allocation=alloc_i,
                    coverage_value=f_i,
                    per_district_coverage=per_district_coverage(region, alloc_i),
                    alignment=g_eval(advice, h_i),
                    feedback=fb,
                    prompt_hash=_prompt_hash(prompt),
                    feedback_segments=segments,
                    trace=trace,
                )
            )
            prev_prev = prev_alloc
            prev_alloc = alloc_i

        accumulated = prev_alloc

    final_h = district_counts(accumulated, region)
    return RunRecord(
        region_key=region.key,
        advisor=advisor.describe(),
        alpha=config.params.alpha,
        beta=config.params.beta,
        budgets=budgets,
        existing_size=existing.size,
        limit=config.limit,
        feedback_mode=config.feedback_mode,
        history_window=config.history_window,
        beta1_heuristic=config.beta1_heuristic,
        round_inits=tuple(round_inits),
        iterations=tuple(iteration_records),
        final=accumulated,
        final_coverage=f_value(region, accumulated),
        final_per_district=per_district_coverage(region, accumulated),
        final_alignment=g_eval(advice, final_h),
    )


def run_single(
    region: Region,
    budget: int,
    advice: Sequence[AdviceItem],
    config: LoopConfig,
    advisor: Advisor,
    transcript: TranscriptWriter | None = None,
) -> RunRecord:
    """Single-round advisor loop (the multi-round engine with one round)."""
    if config.params.budget != budget:
        raise InputError(f"config budget {config.params.budget} != run budget {budget}")
    return run_multi(region, (budget,), advice, config, advisor, transcript=transcript)


def sweep(
    region: Region,
    advice: Sequence[AdviceItem],
    alphas: Sequence[float],
    beta: float,
    budget: int,
    seeds: Sequence[int],
    advisor_factory: Callable[[int], Advisor],
    modes: Sequence[str] = ("verbal",),
    windows: Sequence[int | None] = (1,),
    limit: int = 10,
    beta1_heuristic: bool = False,
) -> dict:
    """Grid of runs over alpha x feedback mode x history window, repeated per
    seed. Reports mean and population-stddev of final coverage and alignment."""
    if not seeds:
        raise InputError("sweep needs at least one seed")
    rows = []
    for alpha in alphas:
        for mode in modes:
            for window in windows:
                per_seed = []
                for seed in seeds:
                    config = LoopConfig(
                        params=GuidanceParams(alpha, beta, budget),
                        limit=limit,
                        feedback_mode=mode,
                        history_window=window,
                        beta1_heuristic=beta1_heuristic,
                    )
                    record = run_single(
                        region, budget, advice, config, advisor_factory(seed)
                    )
                    per_seed.append(
                        {
                            "seed": seed,
                            "coverage": record.final_coverage,
                            "alignment": record.final_alignment.total,
                        }
                    )
                coverages = [p["coverage"] for p in per_seed]
                alignments = [p["alignment"] for p in per_seed]
                rows.append(
                    {
                        "alpha": alpha,
                        "mode": mode,
                        "window": window,
                        "coverage_mean": statistics.mean(coverages),
                        "coverage_std": statistics.pstdev(coverages),
                        "alignment_mean": statistics.mean(alignments),
                        "alignment_std": statistics.pstdev(alignments),
                        "per_seed": per_seed,
                    }
                )
    notes = []
    if any(a == 1.0 for a in alphas):
        notes.append(
            "alpha=1 pins every pick to the plain greedy choice, so results are "
            "identical across seeds (zero variance is expected, not a bug)"
        )
    return {
        "schema_version": 1,
        "beta": beta,
        "budget": budget,
        "limit": limit,
        "seeds": list(seeds),
        "rows": rows,
        "notes": notes,
    }
