"""Population-coverage objective and incremental evaluation state.

The objective of an allocation S is the total population of all cells covered
by at least one selected cell (each covered cell counted once, no matter how
many facilities reach it). This function is monotone and submodular, which is
what the greedy guarantees in :mod:`coverplan.guided_greedy` rely on.

``CoverageState`` snapshots are immutable; ``apply`` returns a new state. Per
district, covered population is attributed to the district of the first
selected cell that covered it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .domain import Allocation, Region, check_same_region
from .errors import ContractViolation


@dataclass(frozen=True)
class CoverageState:
    selected: frozenset[int]
    covered: frozenset[int]
    covered_population: float
    per_district: dict[int, float]


def initial_state(region: Region) -> CoverageState:
    return CoverageState(
        selected=frozenset(),
        covered=frozenset(),
        covered_population=0.0,
        per_district={j: 0.0 for j in region.district_ids},
    )


def state_for(region: Region, alloc: Allocation) -> CoverageState:
    """Build the state reached by applying the allocation in insertion order."""
    check_same_region(region, alloc)
    state = initial_state(region)
    for cell_id in alloc.selected:
        state = apply(state, region, cell_id)
    return state


def f_value(region: Region, alloc: Allocation) -> float:
    """Coverage objective, recomputed from scratch.

    Kept independent of the incremental path so the two can be checked
    against each other. Summation runs in ascending cell id order, which
    makes the result deterministic for real-valued populations.
    """
    check_same_region(region, alloc)
    covered: set[int] = set()
    for cell_id in alloc.selected:
        covered.update(region.coverage[cell_id])
    return sum(region.cells[c].population for c in sorted(covered))


def marginal_gain(state: CoverageState, region: Region, cell_id: int) -> float:
    """Population newly covered if ``cell_id`` were selected next."""
    region.require_cell(cell_id)
    if cell_id in state.selected:
        raise ContractViolation(f"cell {cell_id} already selected")
    covered = state.covered
    # coverage lists are stored sorted, so this sum order is deterministic
    return sum(
        region.cells[c].population for c in region.coverage[cell_id] if c not in covered
    )


def apply(state: CoverageState, region: Region, cell_id: int) -> CoverageState:
    """Select ``cell_id`` and fold its coverage into a new state."""
    region.require_cell(cell_id)
    if cell_id in state.selected:
        raise ContractViolation(f"cell {cell_id} already selected")
    district = region.cells[cell_id].district_id
    new_cells = [c for c in region.coverage[cell_id] if c not in state.covered]
    gain = sum(region.cells[c].population for c in new_cells)
    per_district = dict(state.per_district)
    per_district[district] = per_district.get(district, 0.0) + gain
    return CoverageState(
        selected=state.selected | {cell_id},
        covered=state.covered | set(new_cells),
        covered_population=state.covered_population + gain,
        per_district=per_district,
    )


def argmax_gain(
    state: CoverageState,
    region: Region,
    candidates: Iterable[int] | None = None,
) -> tuple[int, float] | None:
    """Best unselected candidate by marginal gain.

    Ties break toward the smallest cell id (the scan is ascending and only a
    strictly larger gain displaces the incumbent). Returns ``None`` when no
    unselected candidate exists, so callers can decide their own fallback.
    """
    pool = range(region.n_cells) if candidates is None else sorted(set(candidates))
    best: tuple[int, float] | None = None
    for cell_id in pool:
        if cell_id in state.selected:
            continue
        gain = marginal_gain(state, region, cell_id)
        if best is None or gain > best[1]:
            best = (cell_id, gain)
    return best
