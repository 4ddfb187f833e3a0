"""Brute-force optimum and theorem bound checks.

The enumerator recomputes coverage with its own naive union/sum instead of
calling :mod:`coverplan.coverage`, so the two implementations independently
cross-check each other in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .domain import Region
from .errors import EnumerationCapError, InputError
from .guided_greedy import GuidanceParams, guarantee_quota

DEFAULT_ENUMERATION_CAP = 5_000_000


@dataclass(frozen=True)
class OracleResult:
    opt_value: float
    opt_sets: tuple[tuple[int, ...], ...]
    enumerated_count: int
    budget: int


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    sharp_factor: float
    weak_factor: float
    sharp_bound: float
    weak_bound: float
    margin: float


def _naive_coverage(region: Region, subset: tuple[int, ...]) -> float:
    covered: set[int] = set()
    for cell_id in subset:
        covered.update(region.coverage[cell_id])
    total = 0.0
    for cell_id in sorted(covered):
        total += region.cells[cell_id].population
    return total


def brute_force_opt(
    region: Region, budget: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> OracleResult:
    """Enumerate every size-``budget`` subset in lexicographic id order.

    Refuses to start when C(n, b) exceeds ``cap``; callers can raise the cap
    explicitly for bigger instances.
    """
    if not isinstance(budget, int) or budget < 0:
        raise InputError(f"budget must be a nonnegative integer, got {budget!r}")
    n = region.n_cells
    if budget > n:
        raise InputError(f"budget {budget} exceeds {n} cells")
    count = math.comb(n, budget)
    if count > cap:
        raise EnumerationCapError(
            f"enumeration needs {count} subsets, above the cap of {cap}; "
            f"rerun with cap >= {count} to force it"
        )
    best_value = -math.inf
    best_sets: list[tuple[int, ...]] = []
    enumerated = 0
    for subset in combinations(range(n), budget):
        enumerated += 1
        value = _naive_coverage(region, subset)
        if value > best_value:
            best_value = value
            best_sets = [subset]
        elif value == best_value:
            best_sets.append(subset)
    return OracleResult(
        opt_value=best_value if enumerated else 0.0,
        opt_sets=tuple(best_sets),
        enumerated_count=enumerated,
        budget=budget,
    )


def bound_factors(params: GuidanceParams) -> tuple[float, float]:
    """(sharp, weak) guarantee factors for the given alpha/beta/budget.

    sharp = 1 - (1 - beta/b)^ceil(alpha*b), weak = 1 - exp(-alpha*beta).
    The sharp form dominates the weak one for every valid parameter choice.
    """
    quota = guarantee_quota(params.alpha, params.budget)
    sharp = 1.0 - (1.0 - params.beta / params.budget) ** quota
    weak = 1.0 - math.exp(-params.alpha * params.beta)
    return sharp, weak


def check_bound(
    achieved_value: float,
    oracle: OracleResult,
    params: GuidanceParams,
    rel_tol: float = 1e-9,
) -> BoundCheck:
    """Compare an achieved coverage value against the theorem guarantee."""
    if oracle.budget != params.budget:
        raise InputError(
            f"oracle enumerated budget {oracle.budget}, params say {params.budget}"
        )
    sharp, weak = bound_factors(params)
    sharp_bound = sharp * oracle.opt_value
    weak_bound = weak * oracle.opt_value
    slack = rel_tol * max(1.0, abs(sharp_bound))
    return BoundCheck(
        passed=achieved_value >= sharp_bound - slack,
        sharp_factor=sharp,
        weak_factor=weak,
        sharp_bound=sharp_bound,
        weak_bound=weak_bound,
        margin=achieved_value - sharp_bound,
    )
