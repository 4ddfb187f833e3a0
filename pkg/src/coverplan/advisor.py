"""Advisor loop plumbing: prompts, proposals, feedback, and advisor clients.

The engine talks to an advisor in district-allocation space only. A prompt is
a fixed task template plus an editable trail of feedback segments appended one
per iteration; the advisor answers with a dictionary of district -> count.
Proposals are validated strictly (all districts keyed, integer counts, exact
budget, floors respected, at most two units moved) with a bounded number of
retries; parsing is deliberately lenient about where the dictionary sits in
the reply text.

Included advisors:

* ``ScriptedMockAdvisor``: replays proposals from a scenario table.
* ``AdviceBiasedMockAdvisor``: deterministic seeded hill-climber on the
  alignment proxy; stands in for a cooperative language model.
* ``AdversarialMockAdvisor``: proposes the feasible allocation with the worst
  estimated coverage; used to stress the theorem bound.
* ``HttpAdvisor``: live chat-completion client for an OpenAI-style endpoint.
"""

from __future__ import annotations

import ast
import json
import os
import random
from dataclasses import dataclass, replace
from typing import IO, Mapping, Sequence

from . import coverage
from .alignment import AdviceItem, g_eval, score_advice
from .domain import Allocation, DistrictAllocation, Region, district_counts
from .errors import (
    AdvisorFailure,
    AdvisorTransportError,
    ConfigurationError,
    InputError,
    ProposalBudgetError,
    ProposalError,
    ProposalFloorError,
    ProposalFormatError,
    ProposalMoveError,
    ProposalParseError,
)

DEFAULT_RETRY_LIMIT = 3
# at most two units moved between consecutive accepted proposals
MOVE_L1_LIMIT = 4

PROMPT_FIXED_TEMPLATE = (
    "Task: update a district allocation of facility units.\n"
    "Inputs: district names={names}, budget={budget}, advice={advice}, "
    "population per district={pops}, initial coverage per district={cov}, "
    "current allocation={current}, previous allocation={previous}, "
    "minimum allocation={minimum}{cells}.\n"
    "Goal: follow the advice sentences as closely as possible while keeping total "
    "population coverage high.\n"
    "Constraints:\n"
    "1. Minimum allocation: no district may fall below its minimum allocation. "
    "This constraint is critical.\n"
    "2. Format: the updated allocation must keep the format of the current allocation.\n"
    "3. Budget: the values must sum to {budget}. Move either one or two units between "
    "districts to improve advice alignment and coverage, without violating constraint 1.\n"
    "4. Technical: all values are integers, every district appears as a key (use 0 where "
    "none), and the output must be valid dictionary syntax.\n"
    "Instruction: output only the updated district allocation as a dictionary. "
    "Do not add explanations or any other text.\n"
    "Additional instructions:\n"
)

BOOTSTRAP_FEEDBACK = (
    "Improve the previous solution with respect to following the advice and "
    "with respect to total coverage."
)

REFLECTION_TEMPLATE = (
    "Task: compare the current and previous allocation runs and write short "
    "instructions for the next update.\n"
    "Instructions:\n"
    "1. Weigh the advice sentences against both allocations and state which changes "
    "helped or hurt.\n"
    "2. Recommend moving either one or two units between districts, without violating "
    "the minimum allocation.\n"
    "3. If no better allocation seems possible, recommend keeping the current one.\n"
    "Input: advice={advice}, current allocation={current}, previous allocation={previous}"
    "{history}.\n"
    "Output format: begin directly with the comparison and the instructions. Be concise.\n"
)

_MOCK_REFLECTION_SUFFIX = (
    "Move one or two units toward the districts named in unsatisfied advice, without "
    "violating the minimum allocation; keep the current allocation if nothing improves."
)


@dataclass(frozen=True)
class PromptState:
    """Fixed template plus the ordered editable feedback trail."""

    fixed: str = PROMPT_FIXED_TEMPLATE
    editable: tuple[str, ...] = ()


@dataclass(frozen=True)
class FeedbackRecord:
    """One iteration's signals: coverage delta, per-district allocation delta,
    and the verbal reflection (or templated summary)."""

    delta_f: float
    delta_h: dict[int, int]
    verbal: str

    def to_dict(self) -> dict:
        return {
            "delta_f": self.delta_f,
            "delta_h": {str(j): v for j, v in sorted(self.delta_h.items())},
            "verbal": self.verbal,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FeedbackRecord":
        return cls(
            delta_f=float(data["delta_f"]),
            delta_h={int(j): int(v) for j, v in data["delta_h"].items()},
            verbal=str(data["verbal"]),
        )


@dataclass(frozen=True)
class AdvisorContext:
    """Everything an advisor sees. District-level only; cell ids appear solely
    when ``initial_cells`` is filled (an opt-in prompt flag)."""

    advice_texts: tuple[str, ...]
    budget: int
    district_names: dict[int, str]
    population_per_district: dict[int, float]
    initial_coverage_per_district: dict[int, float]
    current: DistrictAllocation
    previous: DistrictAllocation | None
    minimum: DistrictAllocation
    deltas: tuple[FeedbackRecord, ...] | None = None
    previous_proposal: DistrictAllocation | None = None
    round_index: int = 1
    iteration: int = 1
    initial_cells: tuple[int, ...] | None = None


def _fmt_by_name(mapping: Mapping[int, object], names: Mapping[int, str]) -> str:
    ordered = {names[j]: mapping[j] for j in sorted(names) if j in mapping}
    return json.dumps(ordered)


def _fmt_float_map(mapping: Mapping[int, float], names: Mapping[int, str]) -> str:
    ordered = {names[j]: round(float(mapping[j]), 6) for j in sorted(names) if j in mapping}
    return json.dumps(ordered)


def render_prompt(state: PromptState, ctx: AdvisorContext) -> str:
    """Deterministic prompt text: filled fixed template plus the feedback
    trail (or the bootstrap sentence when the trail is empty)."""
    if not ctx.district_names:
        raise ConfigurationError("advisor context has no districts")
    if not ctx.advice_texts:
        raise ConfigurationError("advisor context has no advice texts")
    if ctx.budget < 1:
        raise ConfigurationError(f"advisor context budget {ctx.budget} invalid")
    names = ctx.district_names
    cells = ""
    if ctx.initial_cells is not None:
        cells = f", initial facility cells={json.dumps(list(ctx.initial_cells))}"
    fixed = state.fixed.format(
        names=json.dumps([names[j] for j in sorted(names)]),
        budget=ctx.budget,
        advice=json.dumps(list(ctx.advice_texts)),
        pops=_fmt_float_map(ctx.population_per_district, names),
        cov=_fmt_float_map(ctx.initial_coverage_per_district, names),
        current=_fmt_by_name(ctx.current.counts, names),
        previous="none" if ctx.previous is None else _fmt_by_name(ctx.previous.counts, names),
        minimum=_fmt_by_name(ctx.minimum.counts, names),
        cells=cells,
    )
    if state.editable:
        feedback = "\n".join(state.editable)
    else:
        feedback = BOOTSTRAP_FEEDBACK
    return fixed + feedback


def _history_fragment(deltas: tuple[FeedbackRecord, ...] | None, names: Mapping[int, str]) -> str:
    if deltas is None:
        # no-window mode: allocations only, differences excluded
        return ""
    moves = [_fmt_by_name(fb.delta_h, names) for fb in deltas]
    covs = [f"{fb.delta_f:+.6g}" for fb in deltas]
    if len(deltas) == 1:
        return f", allocation difference={moves[0]}, coverage difference={covs[0]}"
    return (
        f", allocation differences=[{', '.join(moves)}]"
        f", coverage differences=[{', '.join(covs)}]"
    )


def render_reflection_prompt(ctx: AdvisorContext) -> str:
    names = ctx.district_names
    return REFLECTION_TEMPLATE.format(
        advice=json.dumps(list(ctx.advice_texts)),
        current=_fmt_by_name(ctx.current.counts, names),
        previous="none" if ctx.previous is None else _fmt_by_name(ctx.previous.counts, names),
        history=_history_fragment(ctx.deltas, names),
    )


def quantitative_segment(
    history: Sequence[FeedbackRecord], names: Mapping[int, str]
) -> str:
    """Feedback segment for the no-reflection mode: raw deltas plus the fixed
    adjustment instructions."""
    parts = []
    for fb in history:
        parts.append(
            f"allocation difference={_fmt_by_name(fb.delta_h, names)}, "
            f"coverage difference={fb.delta_f:+.6g}"
        )
    return (
        "Numeric feedback: " + "; ".join(parts) + ". Improve advice alignment and total "
        "coverage by moving one or two units between districts, without violating the "
        "minimum allocation; keep the current allocation if nothing improves."
    )


def update_prompt(
    state: PromptState,
    feedback: FeedbackRecord,
    mode: str = "verbal",
    names: Mapping[int, str] | None = None,
    history: Sequence[FeedbackRecord] | None = None,
) -> PromptState:
    """Append one rendered feedback segment to the editable trail."""
    if mode == "verbal":
        segment = feedback.verbal
    elif mode == "quantitative":
        if names is None:
            raise InputError("quantitative feedback needs district names")
        segment = quantitative_segment(tuple(history) if history else (feedback,), names)
    else:
        raise InputError(f"unknown feedback mode {mode!r}")
    return replace(state, editable=state.editable + (segment,))


def build_feedback(
    prev: Allocation,
    curr: Allocation,
    region: Region,
    advice: Sequence[AdviceItem] = (),
) -> FeedbackRecord:
    """Coverage and allocation deltas between consecutive iterations, with a
    templated verbal summary (live advisors overwrite it with a reflection)."""
    if prev.size != curr.size:
        raise InputError(
            f"feedback compares allocations of different size ({prev.size} vs {curr.size})"
        )
    delta_f = coverage.f_value(region, curr) - coverage.f_value(region, prev)
    h_prev = district_counts(prev, region)
    h_curr = district_counts(curr, region)
    delta_h = {j: h_curr.get(j) - h_prev.get(j) for j in region.district_ids}
    unsatisfied = []
    if advice:
        for item in sorted(advice, key=lambda a: a.id):
            if score_advice(item.rule, h_curr) < 1.0:
                unsatisfied.append(item.id)
    names = region.district_names
    moves = {j: v for j, v in delta_h.items() if v != 0}
    summary = (
        f"Coverage difference: {delta_f:+.6g}. "
        f"Allocation difference: {_fmt_by_name(moves, names) if moves else 'none'}. "
        f"Advice not fully satisfied: "
        f"{', '.join(str(i) for i in unsatisfied) if unsatisfied else 'none'}."
    )
    return FeedbackRecord(delta_f=delta_f, delta_h=delta_h, verbal=summary)


# --- proposal parsing and validation -------------------------------------------------


def _extract_mapping(text: str) -> dict:
    """Pull the first dictionary out of advisor output.

    Accepts bare JSON, a Python dict literal, or either embedded in prose.
    """
    candidates = []
    stripped = text.strip()
    if stripped:
        candidates.append(stripped)
    start = text.find("{")
    while start != -1:
        depth = 0
        for pos in range(start, len(text)):
            if text[pos] == "{":
                depth += 1
            elif text[pos] == "}":
                depth -= 1
                if depth == 0:
                    candidates.append(text[start : pos + 1])
                    break
        start = text.find("{", start + 1)
    for cand in candidates:
        for parser in (json.loads, ast.literal_eval):
            try:
                value = parser(cand)
            except (ValueError, SyntaxError):
                continue
            if isinstance(value, dict):
                return value
    raise ProposalParseError(f"no dictionary found in advisor output: {text[:200]!r}")


def parse_proposal(text: str, ctx: AdvisorContext) -> dict[int, int]:
    """Map advisor output onto integer district counts keyed by district id."""
    mapping = _extract_mapping(text)
    name_to_id = {name: j for j, name in ctx.district_names.items()}
    counts: dict[int, int] = {}
    for key, value in mapping.items():
        if isinstance(key, str) and key in name_to_id:
            j = name_to_id[key]
        else:
            try:
                j = int(key)
            except (TypeError, ValueError):
                raise ProposalFormatError(f"unknown district key {key!r}") from None
            if j not in ctx.district_names:
                raise ProposalFormatError(f"unknown district id {j}")
        if j in counts:
            raise ProposalFormatError(f"district {key!r} appears twice")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ProposalFormatError(f"count for {key!r} is not a number: {value!r}")
        if isinstance(value, float):
            if not value.is_integer():
                raise ProposalFormatError(f"count for {key!r} is not an integer: {value!r}")
            value = int(value)
        if value < 0:
            raise ProposalFormatError(f"count for {key!r} is negative")
        counts[j] = value
    missing = sorted(j for j in ctx.district_names if j not in counts)
    if missing:
        raise ProposalFormatError(f"districts missing from proposal: {missing}")
    return counts


def validate_proposal(counts: Mapping[int, int], ctx: AdvisorContext) -> DistrictAllocation:
    total = sum(counts.values())
    if total != ctx.budget:
        raise ProposalBudgetError(f"proposal sums to {total}, budget is {ctx.budget}")
    for j in sorted(counts):
        if counts[j] < ctx.minimum.get(j):
            raise ProposalFloorError(
                f"district {j} got {counts[j]}, below its minimum {ctx.minimum.get(j)}"
            )
    proposal = DistrictAllocation(dict(counts))
    if ctx.previous_proposal is not None:
        distance = proposal.l1_distance(ctx.previous_proposal)
        if distance > MOVE_L1_LIMIT:
            raise ProposalMoveError(
                f"proposal moves {distance // 2} units; at most two may move"
            )
    return proposal


class TranscriptWriter:
    """Append-only JSONL log of advisor exchanges. No wall-clock fields, so a
    seeded run writes byte-identical transcripts."""

    def __init__(self, target: str | os.PathLike | IO[str]):
        if hasattr(target, "write"):
            self._fh = target
            self._owns = False
        else:
            self._fh = open(target, "w", encoding="utf-8")
            self._owns = True

    def write(self, entry: dict) -> None:
        self._fh.write(json.dumps(entry, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._owns:
            self._fh.close()

    def __enter__(self) -> "TranscriptWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def propose(
    advisor: "Advisor",
    prompt: str,
    ctx: AdvisorContext,
    retry_limit: int = DEFAULT_RETRY_LIMIT,
    transcript: TranscriptWriter | None = None,
) -> DistrictAllocation:
    """Query the advisor until a proposal validates, at most ``retry_limit``
    attempts. Raises :class:`AdvisorFailure` when all attempts are rejected;
    callers keep the previous accepted proposal in that case."""
    if retry_limit < 1:
        raise InputError(f"retry limit must be >= 1, got {retry_limit}")
    last_error: Exception | None = None
    attempt_prompt = prompt
    for attempt in range(1, retry_limit + 1):
        raw: str | None = None
        error: Exception | None = None
        result: DistrictAllocation | None = None
        try:
            raw = advisor.propose_raw(attempt_prompt, ctx)
            result = validate_proposal(parse_proposal(raw, ctx), ctx)
        except (ProposalError, AdvisorTransportError) as exc:
            error = exc
        if transcript is not None:
            transcript.write(
                {
                    "phase": "propose",
                    "round": ctx.round_index,
                    "iteration": ctx.iteration,
                    "attempt": attempt,
                    "prompt": attempt_prompt,
                    "response": raw,
                    "accepted": result is not None,
                    "error": None if error is None else str(error),
                }
            )
        if result is not None:
            return result
        last_error = error
        attempt_prompt = (
            prompt
            + f"\nYour previous output was rejected: {error}. Output a corrected allocation."
        )
    raise AdvisorFailure(
        f"no valid proposal after {retry_limit} attempt(s): {last_error}", last_error
    )


# --- advisor implementations ----------------------------------------------------------


class Advisor:
    """Interface. ``propose_raw`` returns raw reply text; ``reflect`` returns
    the verbal feedback for an iteration."""

    kind = "base"

    def describe(self) -> str:
        return self.kind

    def propose_raw(self, prompt: str, ctx: AdvisorContext) -> str:
        raise NotImplementedError

    def reflect(self, prompt: str, ctx: AdvisorContext, feedback: FeedbackRecord) -> str:
        # deterministic default shared by the mocks
        return f"{feedback.verbal} {_MOCK_REFLECTION_SUFFIX}"


class ScriptedMockAdvisor(Advisor):
    """Replays proposals from a scenario: a list of entries with ``round``,
    ``iteration`` and ``allocation``. Iterations without an entry re-propose
    the previous accepted allocation (a hold)."""

    kind = "mock:scripted"

    def __init__(self, scenario: Sequence[Mapping]):
        self._table: dict[tuple[int, int], Mapping] = {}
        for entry in scenario:
            key = (int(entry.get("round", 1)), int(entry["iteration"]))
            self._table[key] = entry["allocation"]

    def propose_raw(self, prompt: str, ctx: AdvisorContext) -> str:
        entry = self._table.get((ctx.round_index, ctx.iteration))
        if entry is not None:
            return json.dumps(entry)
        hold = ctx.previous_proposal if ctx.previous_proposal is not None else ctx.current
        return json.dumps(hold.to_dict())


def _repair_floors(counts: dict[int, int], minimum: DistrictAllocation) -> dict[int, int]:
    """Lift below-floor districts to their floor by draining the largest
    surpluses first. Total is preserved; assumes sum(floors) <= total."""
    repaired = dict(counts)
    deficits = [j for j in sorted(repaired) if repaired[j] < minimum.get(j)]
    for j in deficits:
        need = minimum.get(j) - repaired[j]
        while need > 0:
            donors = sorted(
                (k for k in repaired if repaired[k] > minimum.get(k)),
                key=lambda k: (-(repaired[k] - minimum.get(k)), k),
            )
            if not donors:
                break
            repaired[donors[0]] -= 1
            repaired[j] += 1
            need -= 1
    return repaired


class AdviceBiasedMockAdvisor(Advisor):
    """Deterministic cooperative mock: tries every one- and two-unit move from
    the reference allocation and proposes the one with the best alignment
    proxy, breaking ties with a seeded RNG."""

    kind = "mock:advice"

    def __init__(self, advice: Sequence[AdviceItem], seed: int = 0):
        if not advice:
            raise InputError("advice-biased mock needs a nonempty advice set")
        self._advice = tuple(advice)
        self._rng = random.Random(f"{seed}:advisor")
        self._seed = seed

    def describe(self) -> str:
        return f"{self.kind}:seed={self._seed}"

    def propose_raw(self, prompt: str, ctx: AdvisorContext) -> str:
        reference = ctx.previous_proposal if ctx.previous_proposal is not None else ctx.current
        base = _repair_floors(dict(reference.counts), ctx.minimum)
        candidates = [dict(base)]
        ids = sorted(base)
        for src in ids:
            for dst in ids:
                if src == dst:
                    continue
                for units in (1, 2):
                    if base[src] - units < ctx.minimum.get(src):
                        continue
                    moved = dict(base)
                    moved[src] -= units
                    moved[dst] += units
                    candidates.append(moved)
        scored = [
            (g_eval(self._advice, DistrictAllocation(cand)).total, cand)
            for cand in candidates
        ]
        best_score = max(score for score, _ in scored)
        best = sorted(
            (cand for score, cand in scored if score == best_score),
            key=lambda c: tuple(c[j] for j in ids),
        )
        choice = self._rng.choice(best)
        return json.dumps({str(j): choice[j] for j in ids})


class AdversarialMockAdvisor(Advisor):
    """Hostile mock: proposes the feasible allocation whose district profile
    has the lowest within-district coverage potential. Exists to stress the
    coverage guarantee, which must hold for arbitrary advisors."""

    kind = "mock:adversarial"

    _MAX_ENUM = 5000

    def __init__(self, region: Region):
        self._region = region
        self._potential: dict[int, list[float]] = {}
        for j in region.district_ids:
            cells = region.cells_by_district[j]
            values = [0.0]
            state = coverage.initial_state(region)
            chosen: list[int] = []
            for _ in range(len(cells)):
                best = coverage.argmax_gain(state, region, cells)
                if best is None:
                    break
                state = coverage.apply(state, region, best[0])
                chosen.append(best[0])
                values.append(state.covered_population)
            self._potential[j] = values

    def _district_value(self, j: int, count: int) -> float:
        values = self._potential[j]
        return values[min(count, len(values) - 1)]

    def _score(self, counts: dict[int, int]) -> float:
        return sum(self._district_value(j, c) for j, c in counts.items())

    def propose_raw(self, prompt: str, ctx: AdvisorContext) -> str:
        ids = sorted(ctx.district_names)
        floors = {j: ctx.minimum.get(j) for j in ids}
        extra = ctx.budget - sum(floors.values())
        if extra < 0:
            raise AdvisorTransportError("floors exceed budget")  # engine bug if reached

        def feasible(counts: dict[int, int]) -> bool:
            if ctx.previous_proposal is None:
                return True
            probe = DistrictAllocation(counts)
            return probe.l1_distance(ctx.previous_proposal) <= MOVE_L1_LIMIT

        import math

        best: dict[int, int] | None = None
        best_key: tuple[float, tuple[int, ...]] | None = None
        if math.comb(extra + len(ids) - 1, len(ids) - 1) <= self._MAX_ENUM:
            for comp in _compositions(extra, len(ids)):
                counts = {j: floors[j] + comp[i] for i, j in enumerate(ids)}
                if not feasible(counts):
                    continue
                key = (self._score(counts), tuple(counts[j] for j in ids))
                if best_key is None or key < best_key:
                    best_key = key
                    best = counts
        if best is None:
            # fallback: drop units one by one into the weakest district
            counts = dict(floors)
            for _ in range(extra):
                deltas = sorted(
                    (self._district_value(j, counts[j] + 1) - self._district_value(j, counts[j]), j)
                    for j in ids
                )
                counts[deltas[0][1]] += 1
            best = counts if feasible(counts) else (
                dict(ctx.previous_proposal.counts) if ctx.previous_proposal else counts
            )
        return json.dumps({str(j): best[j] for j in ids})


def _compositions(total: int, parts: int):
    """All ways to split ``total`` units over ``parts`` slots, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class HttpAdvisorConfig:
    url: str
    model: str
    api_key_env: str = "ADVISOR_API_KEY"
    timeout: float = 60.0
    temperature: float = 0.0


class HttpAdvisor(Advisor):
    """Chat-completion client for OpenAI-style endpoints. Transport problems
    surface as :class:`AdvisorTransportError` so the retry loop absorbs
    transient failures."""

    kind = "http"

    def __init__(self, config: HttpAdvisorConfig):
        self._config = config

    def describe(self) -> str:
        return f"http:{self._config.model}"

    def _chat(self, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self._config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self._config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self._config.temperature,
        }
        try:
            resp = requests.post(
                self._config.url, json=body, headers=headers, timeout=self._config.timeout
            )
            resp.raise_for_status()
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except requests.RequestException as exc:
            raise AdvisorTransportError(f"advisor endpoint failed: {exc}") from exc
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise AdvisorTransportError(f"unexpected completion payload: {exc}") from exc

    def propose_raw(self, prompt: str, ctx: AdvisorContext) -> str:
        return self._chat(prompt)

    def reflect(self, prompt: str, ctx: AdvisorContext, feedback: FeedbackRecord) -> str:
        return self._chat(prompt)


def advisor_from_env(
    advice: Sequence[AdviceItem] = (),
    region: Region | None = None,
    seed: int = 0,
    scenario: Sequence[Mapping] | None = None,
    env: Mapping[str, str] | None = None,
) -> Advisor:
    """Build an advisor from environment configuration.

    ADVISOR_KIND selects mock (default) or http. Mocks pick their flavor from
    ADVISOR_MOCK_STYLE (advice | adversarial | scripted). The http client
    reads ADVISOR_URL, ADVISOR_MODEL, ADVISOR_API_KEY_ENV, ADVISOR_TIMEOUT.
    """
    env = dict(os.environ if env is None else env)
    kind = env.get("ADVISOR_KIND", "mock").strip().lower()
    if kind == "http":
        url = env.get("ADVISOR_URL", "").strip()
        model = env.get("ADVISOR_MODEL", "").strip()
        if not url or not model:
            raise ConfigurationError("http advisor needs ADVISOR_URL and ADVISOR_MODEL")
        return HttpAdvisor(
            HttpAdvisorConfig(
                url=url,
                model=model,
                api_key_env=env.get("ADVISOR_API_KEY_ENV", "ADVISOR_API_KEY"),
                timeout=float(env.get("ADVISOR_TIMEOUT", "60")),
            )
        )
    if kind != "mock":
        raise ConfigurationError(f"unknown ADVISOR_KIND {kind!r}")
    style = env.get("ADVISOR_MOCK_STYLE", "advice").strip().lower()
    if scenario is not None or style == "scripted":
        return ScriptedMockAdvisor(scenario or [])
    if style == "adversarial":
        if region is None:
            raise ConfigurationError("adversarial mock needs a region")
        return AdversarialMockAdvisor(region)
    if style == "advice":
        return AdviceBiasedMockAdvisor(advice, seed=seed)
    raise ConfigurationError(f"unknown ADVISOR_MOCK_STYLE {style!r}")
