"""Advice sentences, scoring rules, and the alignment proxy.

Each advice sentence carries a structured rule evaluated against a district
allocation. Rules score in [0, 1] with linear partial credit; the proxy value
of an allocation is the mean over all advice items.

Rule kinds and their scoring, with c = count in the referenced district,
k = threshold, n = total units:

    min_count            min(1, c / k)
    max_count            1 if c <= k else k / c
    exact_count          1 if c == k else min(c, k) / max(c, k)
    presence             1 if c >= 1 else 0
    absence              1 if c == 0 else 0
    at_least_fraction    min(1, (c / n) / k)      (k is a fraction)
    every_district_min   mean over districts of min(1, c_j / k)
    prefer_district_over 1 if c_a > c_b, 0.5 if equal, else 0.5 * c_a / c_b

A zero threshold never divides: min/exact/every with k = 0 score 1 when
satisfied by definition, and at_least_fraction with k = 0 is always 1.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass
from typing import Mapping, Sequence

from .domain import DistrictAllocation
from .errors import ConfigurationError, EvaluatorError, InputError, StructuralError

RULE_KINDS = (
    "min_count",
    "max_count",
    "exact_count",
    "presence",
    "absence",
    "at_least_fraction",
    "every_district_min",
    "prefer_district_over",
)

# districts/thresholds arity per kind
_ARITY = {
    "min_count": (1, 1),
    "max_count": (1, 1),
    "exact_count": (1, 1),
    "presence": (1, 0),
    "absence": (1, 0),
    "at_least_fraction": (1, 1),
    "every_district_min": (0, 1),
    "prefer_district_over": (2, 0),
}


@dataclass(frozen=True)
class AdviceRule:
    kind: str
    districts: tuple[int, ...] = ()
    thresholds: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise InputError(f"unknown rule kind {self.kind!r}")
        want_d, want_t = _ARITY[self.kind]
        if len(self.districts) != want_d:
            raise InputError(
                f"{self.kind} expects {want_d} district reference(s), got {len(self.districts)}"
            )
        if len(self.thresholds) != want_t:
            raise InputError(
                f"{self.kind} expects {want_t} threshold(s), got {len(self.thresholds)}"
            )
        if any(t < 0 for t in self.thresholds):
            raise InputError(f"{self.kind}: thresholds must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "districts": list(self.districts),
            "thresholds": list(self.thresholds),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AdviceRule":
        return cls(
            kind=str(data["kind"]),
            districts=tuple(int(j) for j in data.get("districts", [])),
            thresholds=tuple(float(t) for t in data.get("thresholds", [])),
        )


@dataclass(frozen=True)
class AdviceItem:
    id: str
    expert_id: str
    text: str
    rule: AdviceRule

    def __post_init__(self):
        if not self.text.strip():
            raise InputError(f"advice {self.id}: empty text")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "expert_id": self.expert_id,
            "text": self.text,
            "rule": self.rule.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AdviceItem":
        return cls(
            id=str(data["id"]),
            expert_id=str(data["expert_id"]),
            text=str(data["text"]),
            rule=AdviceRule.from_dict(data["rule"]),
        )


AdviceSet = tuple[AdviceItem, ...]


@dataclass(frozen=True)
class AlignmentScore:
    total: float
    per_advice: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_advice": {i: s for i, s in sorted(self.per_advice.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AlignmentScore":
        return cls(
            total=float(data["total"]),
            per_advice={str(i): float(s) for i, s in data["per_advice"].items()},
        )


def _count(d: DistrictAllocation, district_id: int) -> int:
    if district_id not in d.counts:
        raise StructuralError(f"rule references unknown district {district_id}")
    return d.counts[district_id]


def score_advice(rule: AdviceRule, d: DistrictAllocation) -> float:
    """Score one rule against a district allocation; always in [0, 1]."""
    kind = rule.kind
    if kind == "min_count":
        c = _count(d, rule.districts[0])
        k = rule.thresholds[0]
        return 1.0 if k <= 0 else min(1.0, c / k)
    if kind == "max_count":
        c = _count(d, rule.districts[0])
        k = rule.thresholds[0]
        return 1.0 if c <= k else k / c
    if kind == "exact_count":
        c = _count(d, rule.districts[0])
        k = rule.thresholds[0]
        if c == k:
            return 1.0
        hi = max(c, k)
        return min(c, k) / hi if hi > 0 else 1.0
    if kind == "presence":
        return 1.0 if _count(d, rule.districts[0]) >= 1 else 0.0
    if kind == "absence":
        return 1.0 if _count(d, rule.districts[0]) == 0 else 0.0
    if kind == "at_least_fraction":
        c = _count(d, rule.districts[0])
        k = rule.thresholds[0]
        if k <= 0:
            return 1.0
        total = d.total
        if total <= 0:
            return 0.0
        return min(1.0, (c / total) / k)
    if kind == "every_district_min":
        k = rule.thresholds[0]
        if k <= 0:
            return 1.0
        counts = [d.counts[j] for j in sorted(d.counts)]
        if not counts:
            raise StructuralError("every_district_min on an allocation with no districts")
        return sum(min(1.0, c / k) for c in counts) / len(counts)
    if kind == "prefer_district_over":
        ca = _count(d, rule.districts[0])
        cb = _count(d, rule.districts[1])
        if ca > cb:
            return 1.0
        if ca == cb:
            return 0.5
        return 0.5 * ca / cb
    raise InputError(f"unknown rule kind {kind!r}")  # unreachable, kinds checked at init


def g_eval(advice: Sequence[AdviceItem], d: DistrictAllocation) -> AlignmentScore:
    """Alignment proxy: mean rule score over the advice set.

    Summation runs in advice id order, so the total does not depend on the
    order items are passed in.
    """
    if not advice:
        raise InputError("advice set is empty")
    per_advice = {item.id: score_advice(item.rule, d) for item in advice}
    if len(per_advice) != len(advice):
        raise InputError("duplicate advice ids")
    total = sum(per_advice[i] for i in sorted(per_advice)) / len(per_advice)
    return AlignmentScore(total=total, per_advice=per_advice)


@dataclass(frozen=True)
class EvaluatorConfig:
    """External alignment evaluator hook.

    kind "command" runs ``target`` (argv tuple) with the allocation JSON on
    stdin; kind "http" POSTs it to ``target`` (a URL). Either must answer
    ``{"score": x}`` with x in [0, 1].
    """

    kind: str
    target: tuple[str, ...] | str
    timeout: float = 10.0

    def __post_init__(self):
        if self.kind not in ("command", "http"):
            raise ConfigurationError(f"unknown evaluator kind {self.kind!r}")


def external_evaluate(config: EvaluatorConfig | None, d: DistrictAllocation) -> float:
    """Delegate alignment scoring to an external evaluator."""
    if config is None:
        raise ConfigurationError("no external evaluator configured")
    payload = {"allocation": d.to_dict()}
    raw: object
    if config.kind == "command":
        argv = [config.target] if isinstance(config.target, str) else list(config.target)
        try:
            proc = subprocess.run(
                argv,
                input=json.dumps(payload).encode(),
                capture_output=True,
                timeout=config.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise EvaluatorError(f"evaluator command failed: {exc}") from exc
        raw = proc.stdout.decode(errors="replace")
        if proc.returncode != 0:
            raise EvaluatorError(
                f"evaluator exited with {proc.returncode}",
                payload=proc.stderr.decode(errors="replace") or raw,
            )
    else:
        import requests  # deferred: mock-only deployments never need it

        try:
            resp = requests.post(str(config.target), json=payload, timeout=config.timeout)
            raw = resp.text
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise EvaluatorError(f"evaluator request failed: {exc}") from exc
    try:
        parsed = json.loads(raw) if isinstance(raw, str) else raw
        score = parsed["score"]
    except (json.JSONDecodeError, TypeError, KeyError) as exc:
        raise EvaluatorError("evaluator answer is not {'score': x}", payload=raw) from exc
    if not isinstance(score, (int, float)) or isinstance(score, bool):
        raise EvaluatorError("evaluator score is not numeric", payload=raw)
    score = float(score)
    if not 0.0 <= score <= 1.0:
        raise EvaluatorError(f"evaluator score {score} outside [0, 1]", payload=raw)
    return score
