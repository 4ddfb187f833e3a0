"""File formats and synthetic-region generation.

Region files are JSON with a district list and a cell list. Coverage comes in
two modes: ``explicit`` (each cell lists the cell ids it covers) and
``radius`` (cells carry coordinates and cover everything within a Euclidean
radius, inclusive). External cell ids may be arbitrary integers; they are
remapped to dense 0..n-1 in ascending order on load.

The generator is a pure function of its spec: the same seed always yields the
same region, and saving it twice produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .alignment import AdviceItem, AdviceRule
from .domain import District, GridCell, Region
from .errors import FormatError, InputError, LoadError
from .orchestrator import RunRecord

POPULATION_MODELS = ("uniform", "heavy")
COVERAGE_MODELS = ("radius", "random")
HEAVY_TAIL_RATIO = 10.0


def dumps_stable(obj) -> str:
    """Canonical JSON for everything the package writes."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_text(path, text: str) -> None:
    Path(path).write_text(text)


def _read_json(path):
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise LoadError(f"{path}: cannot read file: {exc}") from None
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: not valid JSON: {exc}") from None


# ---------------------------------------------------------------- regions


def _check_coords(value) -> bool:
    return (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        and all(math.isfinite(float(v)) for v in value)
    )


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def load_region(path) -> Region:
    data = _read_json(path)
    problems: list[str] = []
    if not isinstance(data, dict):
        raise LoadError(f"{path}: region file must be a JSON object", ["<root>"])

    mode = data.get("coverage_mode", "explicit")
    if mode not in ("explicit", "radius"):
        problems.append("coverage_mode")
    radius = data.get("radius")
    if mode == "radius":
        if not _is_number(radius) or radius <= 0:
            problems.append("radius")

    districts_raw = data.get("districts")
    cells_raw = data.get("cells")
    if not isinstance(districts_raw, list) or not districts_raw:
        problems.append("districts")
        districts_raw = []
    if not isinstance(cells_raw, list) or not cells_raw:
        problems.append("cells")
        cells_raw = []

    district_ids: set[int] = set()
    districts: list[District] = []
    for i, entry in enumerate(districts_raw):
        if not isinstance(entry, dict):
            problems.append(f"districts[{i}]")
            continue
        did = entry.get("id")
        name = entry.get("name")
        if not isinstance(did, int) or isinstance(did, bool):
            problems.append(f"districts[{i}].id")
            continue
        if did in district_ids:
            problems.append(f"districts[{i}].id (duplicate {did})")
            continue
        if not isinstance(name, str) or not name:
            problems.append(f"districts[{i}].name")
            continue
        district_ids.add(did)
        districts.append(District(id=did, name=name))

    seen_cell_ids: set[int] = set()
    parsed: list[dict] = []
    for i, entry in enumerate(cells_raw):
        if not isinstance(entry, dict):
            problems.append(f"cells[{i}]")
            continue
        cid = entry.get("id")
        if not isinstance(cid, int) or isinstance(cid, bool):
            problems.append(f"cells[{i}].id")
            continue
        if cid in seen_cell_ids:
            problems.append(f"cells[{i}].id (duplicate {cid})")
            continue
        seen_cell_ids.add(cid)
        ok = True
        district = entry.get("district")
        if not isinstance(district, int) or isinstance(district, bool) or district not in district_ids:
            problems.append(f"cells[{i}].district")
            ok = False
        pop = entry.get("population")
        if not _is_number(pop) or not math.isfinite(float(pop)) or float(pop) < 0:
            problems.append(f"cells[{i}].population")
            ok = False
        coords = entry.get("coords")
        if coords is not None and not _check_coords(coords):
            problems.append(f"cells[{i}].coords")
            ok = False
        if mode == "radius" and coords is None:
            problems.append(f"cells[{i}].coords (required in radius mode)")
            ok = False
        covers = entry.get("covers")
        if mode == "explicit":
            if not isinstance(covers, list) or not all(
                isinstance(c, int) and not isinstance(c, bool) for c in covers or []
            ):
                problems.append(f"cells[{i}].covers")
                ok = False
        if ok:
            parsed.append(
                {
                    "id": cid,
                    "district": district,
                    "population": float(pop),
                    "coords": None if coords is None else (float(coords[0]), float(coords[1])),
                    "covers": covers if mode == "explicit" else None,
                }
            )

    if problems:
        raise LoadError(f"{path}: region file invalid", problems)

    order = sorted(c["id"] for c in parsed)
    remap = {ext: dense for dense, ext in enumerate(order)}
    by_ext = {c["id"]: c for c in parsed}

    cells: list[GridCell] = []
    coverage: list[tuple[int, ...]] = []
    for ext in order:
        c = by_ext[ext]
        dense = remap[ext]
        cells.append(
            GridCell(
                id=dense,
                district_id=c["district"],
                population=c["population"],
                coords=c["coords"],
            )
        )
    if mode == "explicit":
        for ext in order:
            c = by_ext[ext]
            neigh = set()
            for covered in c["covers"]:
                if covered not in remap:
                    problems.append(f"cell {ext}: covers unknown cell id {covered}")
                    continue
                neigh.add(remap[covered])
            neigh.add(remap[ext])
            coverage.append(tuple(sorted(neigh)))
        if problems:
            raise LoadError(f"{path}: region file invalid", problems)
    else:
        coverage = _radius_coverage(cells, float(radius))

    return Region(cells=tuple(cells), districts=tuple(districts), coverage=tuple(coverage))


def _radius_coverage(cells: Sequence[GridCell], radius: float) -> list[tuple[int, ...]]:
    coverage = []
    for cell in cells:
        x, y = cell.coords
        covered = []
        for other in cells:
            ox, oy = other.coords
            if math.hypot(x - ox, y - oy) <= radius:
                covered.append(other.id)
        coverage.append(tuple(sorted(covered)))
    return coverage


def save_region(region: Region, path) -> None:
    """Writes the region in explicit-coverage form with dense ids."""
    data = {
        "coverage_mode": "explicit",
        "districts": [{"id": d.id, "name": d.name} for d in region.districts],
        "cells": [
            {
                "id": cell.id,
                "district": cell.district_id,
                "population": cell.population,
                **({"coords": list(cell.coords)} if cell.coords is not None else {}),
                "covers": sorted(region.coverage[cell.id]),
            }
            for cell in region.cells
        ],
    }
    _write_text(path, dumps_stable(data))


# ---------------------------------------------------------------- generator


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int
    districts: int
    cells_per_district: int
    population: str = "uniform"
    pop_low: float = 50.0
    pop_high: float = 150.0
    coverage: str = "radius"
    radius: float = 1.5
    coverage_density: float = 0.15

    def __post_init__(self):
        if self.districts < 1:
            raise InputError("need at least one district")
        if self.cells_per_district < 1:
            raise InputError("need at least one cell per district")
        if self.population not in POPULATION_MODELS:
            raise InputError(f"population model must be one of {POPULATION_MODELS}")
        if self.coverage not in COVERAGE_MODELS:
            raise InputError(f"coverage model must be one of {COVERAGE_MODELS}")
        if not 0 < self.pop_low <= self.pop_high:
            raise InputError("population bounds must satisfy 0 < low <= high")
        if self.coverage == "radius" and self.radius <= 0:
            raise InputError("radius must be positive")
        if not 0 <= self.coverage_density <= 1:
            raise InputError("coverage density must be in [0, 1]")


def generate_region(spec: GeneratorSpec) -> Region:
    """Deterministic synthetic region: districts are side-by-side grid blocks
    separated by a gap wider than the coverage radius, so radius coverage
    stays within a block's neighborhood."""
    rng = random.Random(f"{spec.seed}:region")
    side = math.ceil(math.sqrt(spec.cells_per_district))
    gap = max(3.0, 2.0 * spec.radius + 1.0)

    cells: list[GridCell] = []
    districts: list[District] = []
    cid = 0
    for k in range(spec.districts):
        did = k + 1
        districts.append(District(id=did, name=f"District {did}"))
        origin_x = k * (side + gap)
        for m in range(spec.cells_per_district):
            row, col = divmod(m, side)
            cells.append(
                GridCell(
                    id=cid,
                    district_id=did,
                    population=0.0,
                    coords=(origin_x + col, float(row)),
                )
            )
            cid += 1

    n = len(cells)
    if spec.population == "uniform":
        pops = [rng.uniform(spec.pop_low, spec.pop_high) for _ in range(n)]
    else:
        mu = math.log((spec.pop_low + spec.pop_high) / 2.0)
        pops = [rng.lognormvariate(mu, 1.6) for _ in range(n)]
        med = sorted(pops)[n // 2]
        top = max(pops)
        if top < HEAVY_TAIL_RATIO * med:
            # the tail must dominate; stretch the single largest draw
            i = pops.index(top)
            pops[i] = (HEAVY_TAIL_RATIO + 0.5) * med
    cells = [
        GridCell(id=c.id, district_id=c.district_id, population=pops[c.id], coords=c.coords)
        for c in cells
    ]

    if spec.coverage == "radius":
        coverage = _radius_coverage(cells, spec.radius)
    else:
        coverage = []
        for i in range(n):
            covered = {i}
            for j in range(n):
                if j != i and rng.random() < spec.coverage_density:
                    covered.add(j)
            coverage.append(tuple(sorted(covered)))

    return Region(cells=tuple(cells), districts=tuple(districts), coverage=tuple(coverage))


# ---------------------------------------------------------------- advice


def load_advice(path) -> tuple[AdviceItem, ...]:
    data = _read_json(path)
    if not isinstance(data, list) or not data:
        raise LoadError(f"{path}: advice file must be a non-empty JSON array")
    items = []
    problems = []
    for i, entry in enumerate(data):
        try:
            items.append(AdviceItem.from_dict(entry))
        except (InputError, KeyError, TypeError, ValueError) as exc:
            problems.append(f"advice[{i}]: {exc}")
    if problems:
        raise LoadError(f"{path}: advice file invalid", problems)
    seen = set()
    for item in items:
        if item.id in seen:
            raise LoadError(f"{path}: duplicate advice id {item.id!r}")
        seen.add(item.id)
    return tuple(items)


def save_advice(items: Sequence[AdviceItem], path) -> None:
    _write_text(path, dumps_stable([item.to_dict() for item in items]))


# ---------------------------------------------------------------- exports


EXPORT_FORMATS = ("json", "csv", "geojson")


def load_run_record(path) -> RunRecord:
    data = _read_json(path)
    try:
        return RunRecord.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise LoadError(f"{path}: run record invalid: {exc}") from None


def save_run_record(record: RunRecord, path) -> None:
    _write_text(path, dumps_stable(record.to_dict()))


def export_allocation(record: RunRecord, region: Region, fmt: str, path) -> None:
    """Writes the final allocation of a run in one of three formats.

    json: the full run record. csv: one row per district with facility counts
    and covered population. geojson: one point feature per selected cell
    (requires coordinates).
    """
    if fmt not in EXPORT_FORMATS:
        raise FormatError(f"unknown export format {fmt!r}; choose from {EXPORT_FORMATS}")
    if record.region_key != region.key:
        raise InputError("run record does not belong to this region")

    if fmt == "json":
        save_run_record(record, path)
        return

    if fmt == "csv":
        counts = {j: 0 for j in region.district_ids}
        for cell_id in record.final.selected:
            counts[region.cells[cell_id].district_id] += 1
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["district_id", "name", "facilities", "population", "covered_population"]
            )
            for j in region.district_ids:
                writer.writerow(
                    [
                        j,
                        region.district_names[j],
                        counts[j],
                        f"{region.population_by_district[j]:.6f}",
                        f"{record.final_per_district[j]:.6f}",
                    ]
                )
        return

    features = []
    for pos, cell_id in enumerate(record.final.selected, start=1):
        cell = region.cells[cell_id]
        if cell.coords is None:
            raise FormatError(
                f"cell {cell_id} has no coordinates; geojson export needs coords"
            )
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": list(cell.coords)},
                "properties": {
                    "cell": cell_id,
                    "district": cell.district_id,
                    "iteration_selected": pos,
                    "alpha": record.alpha,
                    "beta": record.beta,
                },
            }
        )
    _write_text(
        path, dumps_stable({"type": "FeatureCollection", "features": features})
    )


def load_allocation_mapping(path) -> Mapping:
    """Reads a JSON object file (used for ad-hoc district count inputs)."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise LoadError(f"{path}: expected a JSON object")
    return data
