"""Deterministic synthetic transformations for tests, demos and figures.

Random fields use numpy's Philox4x64 counter-based generator seeded with a
plain integer, which gives the same stream on every platform.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import InvalidSpec
from .grid import DisplacementField, GridDims

KINDS = ("identity", "uniform_scale", "linear", "reflection", "single_point", "random_smooth")


@dataclass(frozen=True)
class SynthSpec:
    kind: str
    dims: GridDims
    scale: float = 1.0
    matrix: Optional[tuple[tuple[float, ...], ...]] = None
    axis: int = 0
    point: Optional[tuple[int, ...]] = None
    disp: Optional[tuple[float, ...]] = None
    seed: int = 0
    amplitude: float = 0.1
    radius: int = 0

    def validate(self) -> None:
        rank = self.dims.rank
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "uniform_scale" and not self.scale > 0:
            raise InvalidSpec("uniform_scale needs s > 0")
        if self.kind == "linear":
            a = np.asarray(self.matrix, dtype=float) if self.matrix is not None else None
            if a is None or a.shape != (rank, rank) or not np.isfinite(a).all():
                raise InvalidSpec(f"linear needs a finite {rank}x{rank} matrix")
        if self.kind == "reflection" and not 0 <= self.axis < rank:
            raise InvalidSpec(f"reflection axis must be in [0, {rank})")
        if self.kind == "single_point":
            if self.point is None or not self.dims.contains(self.point):
                raise InvalidSpec(f"point {self.point} is not inside {self.dims.extents}")
            if self.disp is None or len(self.disp) != rank or not np.isfinite(self.disp).all():
                raise InvalidSpec(f"single_point needs a finite {rank}-vector displacement")
        if self.kind == "random_smooth":
            if self.radius < 0:
                raise InvalidSpec("smoothing radius must be >= 0")
            if not (np.isfinite(self.amplitude) and self.amplitude >= 0):
                raise InvalidSpec("amplitude must be a finite non-negative number")
            if self.seed < 0:
                raise InvalidSpec("seed must be a non-negative integer")


def _coords(dims: GridDims) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(e, dtype=np.float64) for e in dims.extents], indexing="ij")
    return np.stack(grids, axis=-1)


def _linear(dims: GridDims, a: np.ndarray) -> np.ndarray:
    p = _coords(dims)
    return p @ a.T - p


def random_smooth_data(dims: GridDims, seed: int, amplitude: float, radius: int) -> np.ndarray:
    """Uniform noise in [-1, 1), box-smoothed per axis, scaled so max |u_i| == amplitude."""
    rng = np.random.Generator(np.random.Philox(seed))
    data = rng.uniform(-1.0, 1.0, size=(*dims.extents, dims.rank))
    if radius > 0:
        for axis in range(dims.rank):
            data = uniform_filter1d(data, size=2 * radius + 1, axis=axis, mode="nearest")
    peak = np.abs(data).max()
    if peak > 0:
        data = data / peak * amplitude
    return data


def generate(spec: SynthSpec) -> DisplacementField:
    spec.validate()
    dims, rank = spec.dims, spec.dims.rank
    if spec.kind == "identity":
        data = np.zeros((*dims.extents, rank))
    elif spec.kind == "uniform_scale":
        data = _linear(dims, spec.scale * np.eye(rank))
    elif spec.kind == "linear":
        data = _linear(dims, np.asarray(spec.matrix, dtype=float))
    elif spec.kind == "reflection":
        a = np.eye(rank)
        a[spec.axis, spec.axis] = -1.0
        data = _linear(dims, a)
    elif spec.kind == "single_point":
        data = np.zeros((*dims.extents, rank))
        data[tuple(spec.point)] = spec.disp
    else:
        data = random_smooth_data(dims, spec.seed, spec.amplitude, spec.radius)
    return DisplacementField(dims, data)


# shorthands used throughout the tests and scripts


def identity(extents: Sequence[int]) -> DisplacementField:
    return generate(SynthSpec("identity", GridDims(tuple(extents))))


def single_point(extents: Sequence[int], point: Sequence[int], disp: Sequence[float]) -> DisplacementField:
    return generate(SynthSpec("single_point", GridDims(tuple(extents)), point=tuple(point), disp=tuple(disp)))


def reflection(extents: Sequence[int], axis: int = 0) -> DisplacementField:
    return generate(SynthSpec("reflection", GridDims(tuple(extents)), axis=axis))


def linear(extents: Sequence[int], matrix) -> DisplacementField:
    m = tuple(tuple(float(v) for v in row) for row in np.asarray(matrix))
    return generate(SynthSpec("linear", GridDims(tuple(extents)), matrix=m))


def random_smooth(extents: Sequence[int], seed: int, amplitude: float, radius: int = 0) -> DisplacementField:
    return generate(
        SynthSpec("random_smooth", GridDims(tuple(extents)), seed=seed, amplitude=amplitude, radius=radius)
    )


def checkerboard_fixture() -> DisplacementField:
    """5x5 field with only the centre point displaced by (1.5, 1.5)."""
    return single_point((5, 5), (2, 2), (1.5, 1.5))
