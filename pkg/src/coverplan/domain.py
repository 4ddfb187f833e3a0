"""Core value types: regions, cells, allocations, budgets.

A region is a set of grid cells partitioned into districts. Each cell knows
which cells a facility placed on it would cover (the coverage map). All types
here are immutable after construction; algorithms return new values instead of
mutating.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

from .errors import InputError, StructuralError


@dataclass(frozen=True)
class District:
    id: int
    name: str


@dataclass(frozen=True)
class GridCell:
    """One planning cell. ``coords`` is optional and only used by radius
    coverage and map exports."""

    id: int
    district_id: int
    population: float
    coords: tuple[float, float] | None = None


@dataclass(frozen=True)
class Region:
    """Immutable region snapshot.

    Cell ids must be dense: ``cells[i].id == i``. ``coverage[i]`` lists the
    cell ids covered by a facility at cell i, sorted ascending. Loaders are
    responsible for mapping external ids onto this dense form.
    """

    cells: tuple[GridCell, ...]
    districts: tuple[District, ...]
    coverage: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.coverage) != len(self.cells):
            raise StructuralError("coverage map length does not match cell count")
        for i, cell in enumerate(self.cells):
            if cell.id != i:
                raise StructuralError(f"cell ids must be dense; index {i} holds id {cell.id}")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def district_ids(self) -> tuple[int, ...]:
        return tuple(sorted(d.id for d in self.districts))

    @cached_property
    def district_names(self) -> dict[int, str]:
        return {d.id: d.name for d in self.districts}

    @cached_property
    def cells_by_district(self) -> dict[int, tuple[int, ...]]:
        grouped: dict[int, list[int]] = {d.id: [] for d in self.districts}
        for cell in self.cells:
            if cell.district_id in grouped:
                grouped[cell.district_id].append(cell.id)
        return {j: tuple(ids) for j, ids in grouped.items()}

    @cached_property
    def population_by_district(self) -> dict[int, float]:
        totals = {d.id: 0.0 for d in self.districts}
        for cell in self.cells:
            if cell.district_id in totals:
                totals[cell.district_id] += cell.population
        return totals

    @cached_property
    def total_population(self) -> float:
        return sum(cell.population for cell in self.cells)

    @cached_property
    def key(self) -> str:
        """Short content fingerprint used to catch cross-region mixups."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def district_of(self, cell_id: int) -> int:
        self.require_cell(cell_id)
        return self.cells[cell_id].district_id

    def require_cell(self, cell_id: int) -> None:
        if not isinstance(cell_id, int) or cell_id < 0 or cell_id >= len(self.cells):
            raise StructuralError(f"unknown cell id {cell_id!r}")

    def to_dict(self) -> dict:
        cells = []
        for cell, covers in zip(self.cells, self.coverage):
            entry: dict = {
                "id": cell.id,
                "district_id": cell.district_id,
                "population": cell.population,
                "covers": list(covers),
            }
            if cell.coords is not None:
                entry["coords"] = [cell.coords[0], cell.coords[1]]
            cells.append(entry)
        return {
            "districts": [{"id": d.id, "name": d.name} for d in self.districts],
            "cells": cells,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Region":
        districts = tuple(District(int(d["id"]), str(d["name"])) for d in data["districts"])
        cells = []
        coverage = []
        for c in data["cells"]:
            coords = c.get("coords")
            cells.append(
                GridCell(
                    id=int(c["id"]),
                    district_id=int(c["district_id"]),
                    population=float(c["population"]),
                    coords=(float(coords[0]), float(coords[1])) if coords is not None else None,
                )
            )
            coverage.append(tuple(sorted(int(v) for v in c["covers"])))
        return cls(cells=tuple(cells), districts=districts, coverage=tuple(coverage))


@dataclass(frozen=True)
class Allocation:
    """Ordered facility placement. Insertion order is part of the identity:
    traces, exports and feedback all reference it."""

    selected: tuple[int, ...] = ()
    region_key: str = ""

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise StructuralError("allocation contains duplicate cells")

    @property
    def size(self) -> int:
        return len(self.selected)

    def extended(self, cell_id: int) -> "Allocation":
        return Allocation(self.selected + (cell_id,), self.region_key)

    def to_dict(self) -> dict:
        return {"selected": list(self.selected), "region_key": self.region_key}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Allocation":
        return cls(tuple(int(v) for v in data["selected"]), str(data.get("region_key", "")))


@dataclass(frozen=True)
class DistrictAllocation:
    """Facility counts per district. Every district of the region appears as a
    key, zeros included."""

    counts: Mapping[int, int]

    def __post_init__(self):
        normalized = {}
        for j, c in self.counts.items():
            if not isinstance(c, int) or isinstance(c, bool):
                raise InputError(f"district {j}: count {c!r} is not an integer")
            if c < 0:
                raise InputError(f"district {j}: negative count {c}")
            normalized[int(j)] = c
        object.__setattr__(self, "counts", normalized)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def get(self, district_id: int) -> int:
        return self.counts.get(district_id, 0)

    def l1_distance(self, other: "DistrictAllocation") -> int:
        keys = set(self.counts) | set(other.counts)
        return sum(abs(self.get(j) - other.get(j)) for j in keys)

    def delta(self, other: "DistrictAllocation") -> dict[int, int]:
        """Per-district ``self - other``."""
        keys = set(self.counts) | set(other.counts)
        return {j: self.get(j) - other.get(j) for j in sorted(keys)}

    def to_dict(self) -> dict[str, int]:
        return {str(j): self.counts[j] for j in sorted(self.counts)}

    @classmethod
    def zeros(cls, region: Region) -> "DistrictAllocation":
        return cls({j: 0 for j in region.district_ids})

    @classmethod
    def from_mapping(cls, region: Region, mapping: Mapping[int, int]) -> "DistrictAllocation":
        missing = [j for j in region.district_ids if j not in mapping]
        unknown = [j for j in mapping if j not in region.district_names]
        if missing or unknown:
            raise StructuralError(
                f"district keys mismatch: missing {missing}, unknown {unknown}"
            )
        return cls({int(j): int(mapping[j]) for j in region.district_ids})


@dataclass(frozen=True)
class Budget:
    """Total facility budget, optionally split into per-round budgets."""

    total: int
    rounds: tuple[int, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.total, int) or self.total < 1:
            raise InputError(f"budget total must be a positive integer, got {self.total!r}")
        if self.rounds is not None:
            if any((not isinstance(b, int)) or b < 1 for b in self.rounds):
                raise InputError("round budgets must be positive integers")
            if sum(self.rounds) != self.total:
                raise InputError(
                    f"round budgets sum to {sum(self.rounds)}, expected {self.total}"
                )


def district_counts(alloc: Allocation, region: Region) -> DistrictAllocation:
    """Count selected cells per district, zeros for untouched districts."""
    if alloc.region_key and alloc.region_key != region.key:
        raise StructuralError("allocation belongs to a different region")
    counts = {j: 0 for j in region.district_ids}
    for cell_id in alloc.selected:
        region.require_cell(cell_id)
        counts[region.cells[cell_id].district_id] += 1
    return DistrictAllocation(counts)


def validate_region(region: Region) -> list[str]:
    """Check region invariants, returning all violations instead of raising."""
    problems: list[str] = []
    known_districts = set(region.district_names)
    seen_ids = set()
    for cell in region.cells:
        if cell.id in seen_ids:
            problems.append(f"cell {cell.id}: duplicate id")
        seen_ids.add(cell.id)
        if cell.district_id not in known_districts:
            problems.append(f"cell {cell.id}: unknown district {cell.district_id}")
        if not math.isfinite(cell.population) or cell.population < 0:
            problems.append(f"cell {cell.id}: population {cell.population} invalid")
    n = region.n_cells
    for cell_id, covers in enumerate(region.coverage):
        if cell_id not in covers:
            problems.append(f"cell {cell_id}: coverage omits the cell itself")
        for target in covers:
            if target < 0 or target >= n:
                problems.append(f"cell {cell_id}: covers nonexistent cell {target}")
    ids = [d.id for d in region.districts]
    if len(set(ids)) != len(ids):
        problems.append("duplicate district ids")
    return problems


def check_same_region(region: Region, *allocs: Allocation) -> None:
    """Raise when an allocation carries a fingerprint of a different region."""
    for alloc in allocs:
        if alloc.region_key and alloc.region_key != region.key:
            raise StructuralError("allocation belongs to a different region")
        for cell_id in alloc.selected:
            region.require_cell(cell_id)
