"""Finite-difference Jacobian analysis and digital diffeomorphism checks for dense 2D/3D transformations."""
from .errors import DiffeoError
from .grid import DisplacementField, GridDims, VoxelMask, build_field, iterate_cells, transform_at, zero_field
from .jacobian import (
    CENTRAL,
    STAR1,
    STAR2,
    ScalarMap,
    Variant,
    central_det,
    corner_det,
    jacobian_map,
    star_det,
)
from .metrics import (
    DiffeoReport,
    Violation,
    analyze,
    count_any_nonpositive,
    count_central_nonpositive,
    is_digital_diffeomorphism,
    nda,
    ndv,
)

__version__ = "0.1.0"

__all__ = [
    "CENTRAL",
    "STAR1",
    "STAR2",
    "DiffeoError",
    "DiffeoReport",
    "DisplacementField",
    "GridDims",
    "ScalarMap",
    "Variant",
    "Violation",
    "VoxelMask",
    "analyze",
    "build_field",
    "central_det",
    "corner_det",
    "count_any_nonpositive",
    "count_central_nonpositive",
    "is_digital_diffeomorphism",
    "iterate_cells",
    "jacobian_map",
    "nda",
    "ndv",
    "star_det",
    "transform_at",
    "zero_field",
]
