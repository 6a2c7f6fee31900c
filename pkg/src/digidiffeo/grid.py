"""Displacement fields, masks and grid geometry on regular 2D/3D grids.

A field stores one displacement vector ``u(p)`` per grid point; the digital
transformation is ``T(p) = p + u(p)``. Arrays are held as ``(*extents, rank)``
and indexed ``[x, y, (z,) component]``. The flat interchange order used by
:func:`build_field` and :meth:`DisplacementField.to_flat` keeps the vector of a
point contiguous, with x varying fastest, then y, then z.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Iterator, Sequence

import numpy as np

from .errors import LengthMismatch, NonFiniteValue, OutOfBounds, ShapeMismatch

GridPoint = tuple[int, ...]


@dataclass(frozen=True)
class GridDims:
    extents: tuple[int, ...]
    spacing: tuple[float, ...] = dc_field(default=())

    def __post_init__(self):
        extents = tuple(int(e) for e in self.extents)
        spacing = tuple(float(s) for s in self.spacing) or (1.0,) * len(extents)
        if len(extents) not in (2, 3):
            raise ValueError(f"rank must be 2 or 3, got {len(extents)}")
        if len(spacing) != len(extents):
            raise ValueError("spacing must have one entry per axis")
        if any(e < 2 for e in extents):
            raise ValueError(f"every extent must be >= 2, got {extents}")
        if not all(np.isfinite(s) and s > 0 for s in spacing):
            raise ValueError(f"spacing must be positive, got {spacing}")
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "spacing", spacing)

    @property
    def rank(self) -> int:
        return len(self.extents)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.extents))

    @property
    def n_cells(self) -> int:
        return int(np.prod([e - 1 for e in self.extents]))

    @property
    def voxel_measure(self) -> float:
        """Physical area/volume of one grid cell."""
        return float(np.prod(self.spacing))

    def contains(self, p: Sequence[int]) -> bool:
        return len(p) == self.rank and all(0 <= i < e for i, e in zip(p, self.extents))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, order="C", copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """Validated, read-only displacement field in voxel units."""

    dims: GridDims
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        expected = (*self.dims.extents, self.dims.rank)
        if data.shape != expected:
            raise ShapeMismatch(f"field array has shape {data.shape}, expected {expected}")
        if not np.isfinite(data).all():
            raise NonFiniteValue(int(np.argmin(np.isfinite(self._flat_view(data)))))
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def from_array(cls, arr, spacing: Sequence[float] = ()) -> "DisplacementField":
        """Wrap an array shaped ``(*extents, rank)``."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim < 3 or arr.shape[-1] != arr.ndim - 1:
            raise ShapeMismatch(f"expected (*extents, rank) array, got shape {arr.shape}")
        return cls(GridDims(arr.shape[:-1], tuple(spacing)), arr)

    @property
    def rank(self) -> int:
        return self.dims.rank

    @staticmethod
    def _flat_view(data: np.ndarray) -> np.ndarray:
        rank = data.shape[-1]
        order = tuple(reversed(range(rank))) + (rank,)
        return data.transpose(order).reshape(-1)

    def to_flat(self) -> np.ndarray:
        """Flatten in interchange order (vector-contiguous, x fastest)."""
        return self._flat_view(self.data).copy()

    def positions(self) -> np.ndarray:
        """Transformed positions ``p + u(p)`` in voxel units, shape ``(*extents, rank)``."""
        grids = np.meshgrid(*[np.arange(e, dtype=np.float64) for e in self.dims.extents], indexing="ij")
        return np.stack(grids, axis=-1) + self.data


def build_field(dims: GridDims, data) -> DisplacementField:
    flat = np.asarray(data, dtype=np.float64).reshape(-1)
    expected = dims.n_points * dims.rank
    if flat.size != expected:
        raise LengthMismatch(f"expected {expected} values for {dims.extents} x {dims.rank}, got {flat.size}")
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise NonFiniteValue(int(bad[0]))
    # flat order is (z, y, x, c) in C order; store as (x, y, z, c)
    shaped = flat.reshape(tuple(reversed(dims.extents)) + (dims.rank,))
    order = tuple(reversed(range(dims.rank))) + (dims.rank,)
    return DisplacementField(dims, shaped.transpose(order))


def zero_field(dims: GridDims) -> DisplacementField:
    return DisplacementField(dims, np.zeros((*dims.extents, dims.rank)))


def transform_at(field: DisplacementField, p: Sequence[int]) -> np.ndarray:
    """Physical position ``p * spacing + u(p)`` of grid point ``p``."""
    p = tuple(int(i) for i in p)
    if not field.dims.contains(p):
        raise OutOfBounds(f"{p} outside grid {field.dims.extents}")
    return np.asarray(p, dtype=np.float64) * np.asarray(field.dims.spacing) + field.data[p]


def iterate_cells(dims: GridDims) -> Iterator[GridPoint]:
    """Yield the origin of every complete cell in lexicographic order."""
    return itertools.product(*[range(e - 1) for e in dims.extents])


@dataclass(frozen=True, eq=False)
class VoxelMask:
    dims: GridDims
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data).astype(bool)
        if data.shape != self.dims.extents:
            raise ShapeMismatch(f"mask shape {data.shape} does not match grid {self.dims.extents}")
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def for_field(cls, field: DisplacementField, data) -> "VoxelMask":
        return cls(field.dims, data)

    @property
    def count(self) -> int:
        return int(self.data.sum())
