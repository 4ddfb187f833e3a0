"""Greedy and advisor-guided greedy facility selection.

Plain greedy repeatedly picks the cell with the largest marginal coverage
gain. The guided variant additionally receives per-district budgets d (how
many of the remaining picks an advisor wants in each district) and balances
following them against the coverage guarantee:

* at every step it computes the unrestricted best cell ``c`` and the best cell
  ``c_d`` among districts that still have budget left;
* ``c_d`` is taken outright once the number of cells selected in this
  invocation has reached the guarantee quota ``ceil(alpha * budget)``;
* before the quota is met, ``c_d`` is taken only if its gain is at least
  ``beta`` times the gain of ``c``; otherwise ``c`` is taken.

Because the first ``ceil(alpha * budget)`` picks each achieve at least
``beta`` times the current best gain, the final coverage is at least
``1 - (1 - beta/b)**ceil(alpha*b)`` of the optimum for the same budget
(and at least ``1 - exp(-alpha*beta)`` in the weaker closed form).

``budget`` always means the number of NEW cells this invocation adds on top
of ``base``; the quota counts only this invocation's picks. Multi-round
planning calls this once per round with the accumulated allocation as base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .coverage import apply, argmax_gain, state_for
from .domain import Allocation, DistrictAllocation, Region
from .errors import InputError

BRANCH_UNRESTRICTED = "unrestricted"
BRANCH_GUIDED = "guided"
BRANCH_FALLBACK = "forced-fallback"

# Relative slack for beta comparisons on real-valued populations. Integer
# populations with grid betas (multiples of 0.25) stay exact regardless.
_BETA_REL_TOL = 1e-12


@dataclass(frozen=True)
class GuidanceParams:
    """Knobs of the guided selection: guarantee share alpha, gain threshold
    beta, and the number of cells this invocation may add."""

    alpha: float
    beta: float
    budget: int

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise InputError(f"beta must be in [0, 1], got {self.beta}")
        if not isinstance(self.budget, int) or self.budget < 1:
            raise InputError(f"budget must be a positive integer, got {self.budget!r}")


@dataclass(frozen=True)
class SelectionStep:
    """One pick: what was chosen, both argmax gains, which branch fired, and
    the district budgets left after the pick (None for plain greedy)."""

    chosen: int
    district_id: int
    best_gain: float
    restricted_gain: float | None
    chosen_gain: float
    branch: str
    budgets_left: dict[int, int] | None

    def to_dict(self) -> dict:
        return {
            "chosen": self.chosen,
            "district_id": self.district_id,
            "best_gain": self.best_gain,
            "restricted_gain": self.restricted_gain,
            "chosen_gain": self.chosen_gain,
            "branch": self.branch,
            "budgets_left": None
            if self.budgets_left is None
            else {str(j): c for j, c in sorted(self.budgets_left.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SelectionStep":
        budgets = data.get("budgets_left")
        return cls(
            chosen=int(data["chosen"]),
            district_id=int(data["district_id"]),
            best_gain=float(data["best_gain"]),
            restricted_gain=None
            if data.get("restricted_gain") is None
            else float(data["restricted_gain"]),
            chosen_gain=float(data["chosen_gain"]),
            branch=str(data["branch"]),
            budgets_left=None if budgets is None else {int(j): int(c) for j, c in budgets.items()},
        )


@dataclass(frozen=True)
class SelectionTrace:
    steps: tuple[SelectionStep, ...]
    alpha: float
    beta: float
    budget: int
    base_size: int

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "alpha": self.alpha,
            "beta": self.beta,
            "budget": self.budget,
            "base_size": self.base_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SelectionTrace":
        return cls(
            steps=tuple(SelectionStep.from_dict(s) for s in data["steps"]),
            alpha=float(data["alpha"]),
            beta=float(data["beta"]),
            budget=int(data["budget"]),
            base_size=int(data["base_size"]),
        )


def guarantee_quota(alpha: float, budget: int) -> int:
    """Number of early picks that must clear the beta test: ceil(alpha * b).

    The product is rounded to 9 decimals first so grid values that are exact
    in binary (0.25, 0.5, ...) never tip over an integer boundary by float
    dust in either direction.
    """
    return math.ceil(round(alpha * budget, 9))


def beta_acceptable(candidate_gain: float, best_gain: float, beta: float) -> bool:
    """``candidate_gain >= beta * best_gain`` with relative float slack."""
    threshold = beta * best_gain
    return candidate_gain >= threshold - _BETA_REL_TOL * max(1.0, abs(threshold))


def greedy(region: Region, budget: int, base: Allocation | None = None) -> tuple[Allocation, SelectionTrace]:
    """Plain greedy: ``budget`` picks of the unrestricted argmax.

    ``base`` seeds the state for greedy extensions; the default is an empty
    allocation. ``budget`` of zero returns the base unchanged.
    """
    if base is None:
        base = Allocation((), region.key)
    if not isinstance(budget, int) or budget < 0:
        raise InputError(f"budget must be a nonnegative integer, got {budget!r}")
    if base.size + budget > region.n_cells:
        raise InputError(
            f"budget {budget} plus base {base.size} exceeds {region.n_cells} cells"
        )
    state = state_for(region, base)
    selected = list(base.selected)
    steps = []
    for _ in range(budget):
        best = argmax_gain(state, region)
        assert best is not None  # guarded by the size check above
        cell_id, gain = best
        state = apply(state, region, cell_id)
        selected.append(cell_id)
        steps.append(
            SelectionStep(
                chosen=cell_id,
                district_id=region.cells[cell_id].district_id,
                best_gain=gain,
                restricted_gain=None,
                chosen_gain=gain,
                branch=BRANCH_UNRESTRICTED,
                budgets_left=None,
            )
        )
    trace = SelectionTrace(tuple(steps), alpha=1.0, beta=1.0, budget=budget, base_size=base.size)
    return Allocation(tuple(selected), region.key), trace


def guided_greedy(
    params: GuidanceParams,
    region: Region,
    base: Allocation | None = None,
    d: DistrictAllocation | None = None,
) -> tuple[Allocation, SelectionTrace]:
    """Advisor-guided greedy selection (see module docstring).

    Args:
        params: alpha/beta and the number of new cells to add.
        region: planning region.
        base: already-built allocation to extend; empty by default.
        d: remaining per-district budgets for the new picks. Treated as
            capacities: when every district with budget left runs out of
            unselected cells, the step falls back to the unrestricted best
            pick. Missing districts count as zero.

    Returns:
        The extended allocation and a per-step trace.
    """
    if base is None:
        base = Allocation((), region.key)
    if d is None:
        d = DistrictAllocation.zeros(region)
    if base.size + params.budget > region.n_cells:
        raise InputError(
            f"budget {params.budget} plus base {base.size} exceeds {region.n_cells} cells"
        )
    for j in d.counts:
        if j not in region.district_names:
            raise InputError(f"district budgets reference unknown district {j}")

    remaining = {j: d.get(j) for j in region.district_ids}
    quota = guarantee_quota(params.alpha, params.budget)
    state = state_for(region, base)
    selected = list(base.selected)
    steps = []
    for picked in range(params.budget):
        best = argmax_gain(state, region)
        assert best is not None  # guarded by the size check above
        open_cells = [
            cid
            for j in region.district_ids
            if remaining[j] > 0
            for cid in region.cells_by_district[j]
        ]
        restricted = argmax_gain(state, region, open_cells) if open_cells else None

        if restricted is None:
            # every district with budget left is out of unselected cells
            cell_id, gain = best
            branch = BRANCH_FALLBACK
            restricted_gain = None
        elif picked >= quota or beta_acceptable(restricted[1], best[1], params.beta):
            cell_id, gain = restricted
            branch = BRANCH_GUIDED
            restricted_gain = restricted[1]
            remaining[region.cells[cell_id].district_id] -= 1
        else:
            cell_id, gain = best
            branch = BRANCH_UNRESTRICTED
            restricted_gain = restricted[1]

        state = apply(state, region, cell_id)
        selected.append(cell_id)
        steps.append(
            SelectionStep(
                chosen=cell_id,
                district_id=region.cells[cell_id].district_id,
                best_gain=best[1],
                restricted_gain=restricted_gain,
                chosen_gain=gain,
                branch=branch,
                budgets_left=dict(remaining),
            )
        )
    trace = SelectionTrace(
        tuple(steps),
        alpha=params.alpha,
        beta=params.beta,
        budget=params.budget,
        base_size=base.size,
    )
    return Allocation(tuple(selected), region.key), trace


def verify_beta_subsequence(trace: SelectionTrace, params: GuidanceParams) -> bool:
    """Check the guarantee's witness: at least ``ceil(alpha * budget)`` steps
    whose chosen gain reaches ``beta`` times that step's unrestricted best."""
    quota = guarantee_quota(params.alpha, params.budget)
    qualifying = sum(
        1 for s in trace.steps if beta_acceptable(s.chosen_gain, s.best_gain, params.beta)
    )
    return qualifying >= quota
