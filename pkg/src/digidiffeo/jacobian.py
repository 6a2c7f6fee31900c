"""Finite-difference Jacobian determinants of digital transformations.

Every estimator is a determinant of ``rank`` columns, each column being a
scaled difference of transformed positions at two stencil offsets:

* corner ``(s_x, s_y[, s_z])``: column ``a`` is ``T(p + e_a) - T(p)`` for a
  forward sign and ``T(p) - T(p - e_a)`` for a backward sign;
* central: column ``a`` is ``(T(p + e_a) - T(p - e_a)) / 2``;
* star1 / star2 (3D only): triple products over the face-diagonal neighbours
  ``p-x-y, p-x-z, p-y-z`` and ``p+x+y, p+y+z, p+x+z``.

All values are in voxel units. A determinant whose stencil leaves the grid is
undefined; dense maps carry NaN plus an explicit ``defined`` mask there.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import BoundaryUndefined, RankMismatch
from .grid import DisplacementField, GridDims, GridPoint

SignPattern = tuple[int, ...]

# points per evaluation block along axis 0; fixed so results never depend on thread count
BLOCK_SLICES = 16

_SIGN_CHAR = {-1: "-", 1: "+"}


@dataclass(frozen=True)
class Variant:
    """Identifier of one determinant estimator."""

    kind: str
    pattern: SignPattern = ()

    def __post_init__(self):
        if self.kind not in ("corner", "central", "star1", "star2"):
            raise ValueError(f"unknown variant kind {self.kind!r}")
        if self.kind == "corner":
            if len(self.pattern) not in (2, 3) or any(s not in (-1, 1) for s in self.pattern):
                raise ValueError(f"bad sign pattern {self.pattern!r}")
        elif self.pattern:
            raise ValueError(f"{self.kind} takes no sign pattern")

    @classmethod
    def corner(cls, pattern: Sequence[int]) -> "Variant":
        return cls("corner", tuple(int(s) for s in pattern))

    @property
    def name(self) -> str:
        if self.kind == "corner":
            return "".join(_SIGN_CHAR[s] for s in self.pattern)
        return self.kind

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, text: str) -> "Variant":
        """Parse ``central``, ``star1``, ``star2`` or a sign string such as ``-+-``."""
        text = text.strip().lower()
        if text in ("central", "star1", "star2"):
            return cls(text)
        if text and set(text) <= {"-", "+"}:
            return cls.corner(-1 if c == "-" else 1 for c in text)
        raise ValueError(f"cannot parse Jacobian variant {text!r}")

    def supports(self, rank: int) -> bool:
        if self.kind == "corner":
            return len(self.pattern) == rank
        if self.kind in ("star1", "star2"):
            return rank == 3
        return True

    def columns(self, rank: int) -> list[tuple[tuple[int, ...], tuple[int, ...], float]]:
        """Stencil as ``(plus_offset, minus_offset, scale)`` per column."""
        if not self.supports(rank):
            raise RankMismatch(f"variant {self.name} is not defined for rank {rank}")
        zero = (0,) * rank

        def unit(axis, s=1):
            return tuple(s if i == axis else 0 for i in range(rank))

        if self.kind == "corner":
            return [
                (unit(a), zero, 1.0) if s > 0 else (zero, unit(a, -1), 1.0)
                for a, s in enumerate(self.pattern)
            ]
        if self.kind == "central":
            return [(unit(a), unit(a, -1), 0.5) for a in range(rank)]
        diag = _STAR_OFFSETS[self.kind]
        return [(d, zero, 1.0) for d in diag]

    def extent_bounds(self, extents: Sequence[int]) -> list[tuple[int, int]]:
        """Half-open index range per axis on which the variant is defined."""
        offsets = [o for plus, minus, _ in self.columns(len(extents)) for o in (plus, minus)]
        return [
            (-min(o[a] for o in offsets), n - max(o[a] for o in offsets))
            for a, n in enumerate(extents)
        ]


_STAR_OFFSETS = {
    "star1": ((-1, -1, 0), (-1, 0, -1), (0, -1, -1)),
    "star2": ((1, 1, 0), (0, 1, 1), (1, 0, 1)),
}

CENTRAL = Variant("central")
STAR1 = Variant("star1")
STAR2 = Variant("star2")


def sign_patterns(rank: int) -> list[SignPattern]:
    """All ``2**rank`` corner sign patterns, backward-first lexicographic order."""
    return list(itertools.product((-1, 1), repeat=rank))


def corner_variants(rank: int) -> list[Variant]:
    return [Variant.corner(s) for s in sign_patterns(rank)]


def criterion_variants(rank: int) -> list[Variant]:
    """The determinants a digital diffeomorphism needs positive: 4 in 2D, 10 in 3D."""
    extra = [STAR1, STAR2] if rank == 3 else []
    return corner_variants(rank) + extra


def all_variants(rank: int) -> list[Variant]:
    return criterion_variants(rank) + [CENTRAL]


def det_columns(c0, c1, c2=None):
    """Determinant of the matrix whose columns are the given vectors.

    Works elementwise on arrays whose last axis holds the components; 3x3 uses
    the triple product ``(c0 x c1) . c2``.
    """
    if c2 is None:
        return c0[0] * c1[1] - c0[1] * c1[0]
    return (
        (c0[1] * c1[2] - c0[2] * c1[1]) * c2[0]
        + (c0[2] * c1[0] - c0[0] * c1[2]) * c2[1]
        + (c0[0] * c1[1] - c0[1] * c1[0]) * c2[2]
    )


# -- single-point evaluation --------------------------------------------------


def _point_det(field: DisplacementField, p: Sequence[int], variant: Variant) -> float:
    rank = field.rank
    p = tuple(int(i) for i in p)
    if not field.dims.contains(p):
        raise BoundaryUndefined(f"{p} outside grid {field.dims.extents}")

    def pos(offset):
        q = tuple(i + o for i, o in zip(p, offset))
        if not field.dims.contains(q):
            raise BoundaryUndefined(f"variant {variant.name} at {p} needs neighbour {q}")
        return np.asarray(q, dtype=np.float64) + field.data[q]

    cols = [scale * (pos(plus) - pos(minus)) for plus, minus, scale in variant.columns(rank)]
    return float(det_columns(*cols))


def corner_det(field: DisplacementField, p: Sequence[int], pattern: Sequence[int]) -> float:
    pattern = tuple(pattern)
    if len(pattern) != field.rank:
        raise RankMismatch(f"pattern {pattern} does not match rank {field.rank}")
    return _point_det(field, p, Variant.corner(pattern))


def central_det(field: DisplacementField, p: Sequence[int]) -> float:
    return _point_det(field, p, CENTRAL)


def star_det(field: DisplacementField, p: Sequence[int], which: str | Variant) -> float:
    variant = which if isinstance(which, Variant) else Variant(str(which).lower())
    if variant.kind not in ("star1", "star2"):
        raise ValueError(f"not a star variant: {variant.name}")
    if field.rank != 3:
        raise RankMismatch("star determinants exist only for 3D fields")
    return _point_det(field, p, variant)


def det_at(field: DisplacementField, p: Sequence[int], variant: Variant) -> float:
    return _point_det(field, p, variant)


# -- dense evaluation ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScalarMap:
    """Dense per-point values; ``defined`` flags points that carry a value.

    Undefined entries of ``values`` are NaN.
    """

    dims: GridDims
    values: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        defined = np.asarray(self.defined, dtype=bool)
        if values.shape != self.dims.extents or defined.shape != self.dims.extents:
            raise ValueError("map arrays must match the grid extents")
        if not np.isfinite(values[defined]).all():
            raise ValueError("defined map entries must be finite")
        values = np.where(defined, values, np.nan)
        values.setflags(write=False)
        defined = defined.copy()
        defined.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "defined", defined)

    @classmethod
    def from_values(cls, dims: GridDims, values) -> "ScalarMap":
        values = np.asarray(values, dtype=np.float64)
        return cls(dims, values, np.isfinite(values))

    def defined_values(self) -> np.ndarray:
        return self.values[self.defined]


def component_positions(field: DisplacementField) -> list[np.ndarray]:
    """Transformed positions split into contiguous per-component arrays."""
    out = []
    for a, n in enumerate(field.dims.extents):
        shape = [1] * field.rank
        shape[a] = n
        coord = np.arange(n, dtype=np.float64).reshape(shape)
        out.append(np.ascontiguousarray(field.data[..., a]) + coord)
    return out


def block_ranges(n0: int, block: int = BLOCK_SLICES) -> list[tuple[int, int]]:
    return [(x0, min(x0 + block, n0)) for x0 in range(0, n0, block)]


def block_det(
    comps: Sequence[np.ndarray], variant: Variant, x0: int, x1: int
) -> tuple[tuple[slice, ...], np.ndarray] | None:
    """Values of ``variant`` at the defined points whose axis-0 index lies in ``[x0, x1)``.

    Returns the index box (tuple of slices into the full grid) and the values
    on it, or None when the block holds no defined point.
    """
    extents = comps[0].shape
    rank = len(extents)
    bounds = variant.extent_bounds(extents)
    lo0, hi0 = max(x0, bounds[0][0]), min(x1, bounds[0][1])
    if lo0 >= hi0 or any(lo >= hi for lo, hi in bounds[1:]):
        return None
    box = [(lo0, hi0)] + bounds[1:]

    def shifted(c, offset):
        return comps[c][tuple(slice(lo + o, hi + o) for (lo, hi), o in zip(box, offset))]

    cols = []
    for plus, minus, scale in variant.columns(rank):
        col = [shifted(c, plus) - shifted(c, minus) for c in range(rank)]
        if scale != 1.0:
            col = [v * scale for v in col]
        cols.append(col)
    return tuple(slice(lo, hi) for lo, hi in box), det_columns(*cols)


def map_in_order(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def jacobian_map(field: DisplacementField, variant: Variant, threads: int = 1) -> ScalarMap:
    """Dense map of one determinant estimator over the whole grid."""
    if not variant.supports(field.rank):
        raise RankMismatch(f"variant {variant.name} is not defined for rank {field.rank}")
    comps = component_positions(field)
    values = np.full(field.dims.extents, np.nan)
    defined = np.zeros(field.dims.extents, dtype=bool)

    def run(rng):
        return block_det(comps, variant, *rng)

    for res in map_in_order(run, block_ranges(field.dims.extents[0]), threads):
        if res is None:
            continue
        box, vals = res
        values[box] = vals
        defined[box] = True
    return ScalarMap(field.dims, values, defined)


def iter_defined_points(dims: GridDims, variant: Variant) -> Iterator[GridPoint]:
    bounds = variant.extent_bounds(dims.extents)
    return itertools.product(*[range(lo, hi) for lo, hi in bounds])
