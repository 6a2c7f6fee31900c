"""Digital-diffeomorphism verdicts and non-diffeomorphic area/volume.

A single blocked pass over the grid evaluates every corner determinant (plus
the two star determinants in 3D) and the central determinant, and derives:

* the per-point severity ``-1/2 * sum_i min(det_i, 0) / k`` with ``k = 2`` (2D)
  or ``6`` (3D); its grid sum is the NDA / NDV;
* the count of points whose central determinant is ``<= 0``;
* the count of points with at least one criterion determinant ``<= 0``;
* the lexicographically first violation.

Undefined (boundary) determinants are skipped. A point contributes to counts
and measure iff the mask is true there. Totals are summed with ``math.fsum``,
which is correctly rounded and therefore independent of evaluation order and
thread count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import RankMismatch
from .grid import DisplacementField, GridPoint, VoxelMask
from .jacobian import (
    CENTRAL,
    ScalarMap,
    Variant,
    map_in_order,
    block_det,
    block_ranges,
    component_positions,
    criterion_variants,
)


@dataclass(frozen=True)
class Violation:
    point: GridPoint
    variant: Variant
    value: float


@dataclass(frozen=True)
class DiffeoReport:
    """Aggregate regularity statistics of one field.

    Percentages are ``100 * value / total_points`` where ``total_points`` is
    the masked voxel count (or every grid point without a mask).
    """

    rank: int
    extents: tuple[int, ...]
    spacing: tuple[float, ...]
    total_points: int
    partially_defined_points: int
    central_nonpositive_count: int
    any_nonpositive_count: int
    nd_measure: float
    nd_measure_physical: float
    first_violation: Optional[Violation] = None
    mask_applied: bool = False
    source: str = dc_field(default="", compare=False)

    @property
    def measure_name(self) -> str:
        return "nda" if self.rank == 2 else "ndv"

    @property
    def is_digital_diffeomorphism(self) -> bool:
        return self.first_violation is None

    def _pct(self, value: float) -> float:
        return 100.0 * value / self.total_points if self.total_points else 0.0

    @property
    def central_nonpositive_pct(self) -> float:
        return self._pct(self.central_nonpositive_count)

    @property
    def any_nonpositive_pct(self) -> float:
        return self._pct(self.any_nonpositive_count)

    @property
    def nd_measure_pct(self) -> float:
        return self._pct(self.nd_measure)


def _block_stats(comps, variants, x0, x1, mask_block, measure_scale):
    shape = (x1 - x0,) + comps[0].shape[1:]
    acc = np.zeros(shape)
    any_np = np.zeros(shape, dtype=bool)
    n_def = np.zeros(shape, dtype=np.int8)
    per_variant = []
    for variant in variants:
        res = block_det(comps, variant, x0, x1)
        if res is None:
            per_variant.append(None)
            continue
        box, vals = res
        rel = (slice(box[0].start - x0, box[0].stop - x0),) + box[1:]
        acc[rel] += np.maximum(-vals, 0.0) / measure_scale
        any_np[rel] |= vals <= 0
        n_def[rel] += 1
        per_variant.append((rel, vals))
    severity = 0.5 * acc

    central_np = np.zeros(shape, dtype=bool)
    res = block_det(comps, CENTRAL, x0, x1)
    if res is not None:
        box, vals = res
        rel = (slice(box[0].start - x0, box[0].stop - x0),) + box[1:]
        central_np[rel] = vals <= 0

    if mask_block is not None:
        any_np &= mask_block
        central_np &= mask_block
        partial = int(((n_def < len(variants)) & mask_block).sum())
        counted_severity = severity[mask_block & (severity != 0)]
    else:
        partial = int((n_def < len(variants)).sum())
        counted_severity = severity[severity != 0]

    first = None
    hits = np.argwhere(any_np)
    if hits.size:
        rel_pt = tuple(int(i) for i in hits[0])
        for variant, entry in zip(variants, per_variant):
            if entry is None:
                continue
            rel, vals = entry
            local = tuple(i - s.start for i, s in zip(rel_pt, rel))
            if all(0 <= li < s.stop - s.start for li, s in zip(local, rel)) and vals[local] <= 0:
                point = (rel_pt[0] + x0,) + rel_pt[1:]
                first = Violation(point, variant, float(vals[local]))
                break
    return {
        "severity": severity,
        "counted": counted_severity,
        "any": int(any_np.sum()),
        "central": int(central_np.sum()),
        "partial": partial,
        "first": first,
    }


def analyze(
    field: DisplacementField, mask: VoxelMask | None = None, threads: int = 1, source: str = ""
) -> tuple[DiffeoReport, ScalarMap]:
    """Full regularity report and per-point severity map (NDA in 2D, NDV in 3D).

    The severity map holds every point's contribution regardless of the mask.
    """
    if mask is not None and mask.dims.extents != field.dims.extents:
        raise ValueError(f"mask grid {mask.dims.extents} does not match field grid {field.dims.extents}")
    rank = field.rank
    variants = criterion_variants(rank)
    measure_scale = 2.0 if rank == 2 else 6.0
    comps = component_positions(field)
    mask_data = None if mask is None else mask.data

    def run(rng):
        x0, x1 = rng
        mb = None if mask_data is None else mask_data[x0:x1]
        return rng, _block_stats(comps, variants, x0, x1, mb, measure_scale)

    severity = np.empty(field.dims.extents)
    counted, first = [], None
    n_any = n_central = n_partial = 0
    for (x0, x1), st in map_in_order(run, block_ranges(field.dims.extents[0]), threads):
        severity[x0:x1] = st["severity"]
        counted.append(st["counted"])
        n_any += st["any"]
        n_central += st["central"]
        n_partial += st["partial"]
        if first is None:
            first = st["first"]

    total = math.fsum(np.concatenate(counted).tolist()) if counted else 0.0
    report = DiffeoReport(
        rank=rank,
        extents=field.dims.extents,
        spacing=field.dims.spacing,
        total_points=field.dims.n_points if mask is None else mask.count,
        partially_defined_points=n_partial,
        central_nonpositive_count=n_central,
        any_nonpositive_count=n_any,
        nd_measure=total,
        nd_measure_physical=total * field.dims.voxel_measure,
        first_violation=first,
        mask_applied=mask is not None,
        source=source,
    )
    return report, ScalarMap(field.dims, severity, np.ones(field.dims.extents, dtype=bool))


def ndv(field: DisplacementField, mask: VoxelMask | None = None, threads: int = 1):
    """Non-diffeomorphic volume of a 3D field; returns ``(report, severity_map)``."""
    if field.rank != 3:
        raise RankMismatch("NDV needs a 3D field; use nda for 2D")
    return analyze(field, mask, threads)


def nda(field: DisplacementField, mask: VoxelMask | None = None, threads: int = 1):
    """Non-diffeomorphic area of a 2D field; returns ``(report, severity_map)``."""
    if field.rank != 2:
        raise RankMismatch("NDA needs a 2D field; use ndv for 3D")
    return analyze(field, mask, threads)


def is_digital_diffeomorphism(field: DisplacementField, threads: int = 1) -> tuple[bool, Optional[Violation]]:
    report, _ = analyze(field, threads=threads)
    return report.is_digital_diffeomorphism, report.first_violation


def count_central_nonpositive(field: DisplacementField, mask: VoxelMask | None = None) -> int:
    return analyze(field, mask)[0].central_nonpositive_count


def count_any_nonpositive(field: DisplacementField, mask: VoxelMask | None = None) -> int:
    return analyze(field, mask)[0].any_nonpositive_count
