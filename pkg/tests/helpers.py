"""Shared builders for the test suite."""

from __future__ import annotations

import random

from coverplan.alignment import AdviceItem, AdviceRule
from coverplan.domain import District, GridCell, Region

PARAM_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


def build_region(cell_specs, district_names=None, coverage=None):
    """cell_specs: list of (district_id, population) in cell-id order.
    coverage defaults to self-only."""
    districts_seen = sorted({d for d, _ in cell_specs})
    names = district_names or {j: f"D{j}" for j in districts_seen}
    cells = tuple(
        GridCell(id=i, district_id=d, population=float(p))
        for i, (d, p) in enumerate(cell_specs)
    )
    if coverage is None:
        coverage = tuple((i,) for i in range(len(cells)))
    else:
        coverage = tuple(tuple(sorted(set(c) | {i})) for i, c in enumerate(coverage))
    districts = tuple(District(id=j, name=names[j]) for j in districts_seen)
    return Region(cells=cells, districts=districts, coverage=coverage)


def random_instance(rng: random.Random, max_cells=18, max_districts=4, integer_pops=False):
    """Random region in the desk-scale family: r districts (every district
    nonempty), random directed coverage, continuous populations by default."""
    r = rng.randint(2, max_districts)
    n = rng.randint(max(r, 6), max_cells)
    assign = list(range(1, r + 1)) + [rng.randint(1, r) for _ in range(n - r)]
    rng.shuffle(assign)
    if integer_pops:
        pops = [float(rng.randint(1, 100)) for _ in range(n)]
    else:
        pops = [rng.uniform(0.5, 100.0) for _ in range(n)]
    density = rng.uniform(0.05, 0.35)
    coverage = []
    for i in range(n):
        covered = {i}
        for j in range(n):
            if j != i and rng.random() < density:
                covered.add(j)
        coverage.append(tuple(sorted(covered)))
    cells = tuple(
        GridCell(id=i, district_id=assign[i], population=pops[i]) for i in range(n)
    )
    districts = tuple(District(id=j, name=f"D{j}") for j in range(1, r + 1))
    return Region(cells=cells, districts=districts, coverage=tuple(coverage))


def tiny_advice(region: Region):
    """Minimal well-formed advice set for loop tests on any region."""
    first = region.district_ids[0]
    last = region.district_ids[-1]
    return (
        AdviceItem(
            "a1",
            "e1",
            f"place at least one facility in {region.district_names[first]}",
            AdviceRule("min_count", (first,), (1,)),
        ),
        AdviceItem(
            "a2",
            "e1",
            f"keep {region.district_names[last]} at two facilities or fewer",
            AdviceRule("max_count", (last,), (2,)),
        ),
    )


def feasible_counts(rng: random.Random, region: Region, budget: int):
    """Random district counts summing to budget, capped by district size."""
    ids = list(region.district_ids)
    counts = {j: 0 for j in ids}
    sizes = {j: len(region.cells_by_district[j]) for j in ids}
    for _ in range(budget):
        open_ids = [j for j in ids if counts[j] < sizes[j]]
        j = rng.choice(open_ids)
        counts[j] += 1
    return counts
