"""Signed simplex measures, cell triangulations and the 2D half-plane kernel test.

This module is the geometric ground truth that the finite-difference
determinants are checked against. It works from transformed vertex
positions only and never calls into :mod:`digidiffeo.jacobian`.

Cell triangulations
-------------------
A cell is identified by its origin ``o``; its corners are ``o + c`` with
``c`` in ``{0, 1}^rank``. Each corner simplex sits at corner ``c`` and spans
the cell edges leaving that corner, so it is the simplex measured by the
corner determinant at grid point ``o + c`` with sign pattern
``s_a = +1 if c_a == 0 else -1``.

* Scheme A uses the corner simplices at even-parity corners (``sum(c)``
  even). In 3D it adds the central tetrahedron on the odd corners, anchored
  at ``o + (1, 1, 1)``: the star1 tetrahedron of that point.
* Scheme B uses the odd-parity corners; in 3D its central tetrahedron sits on
  the even corners, anchored at ``o``: the star2 tetrahedron of that point.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import OutOfBounds
from .grid import DisplacementField, GridPoint

KERNEL_EPS = 1e-12


def signed_area(a, b, c) -> float:
    """Signed area of triangle ``abc``; positive when counter-clockwise."""
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def signed_volume(a, b, c, d) -> float:
    """Signed volume ``((b-a) x (c-a)) . (d-a) / 6`` (right-hand rule)."""
    u = np.subtract(b, a, dtype=np.float64)
    v = np.subtract(c, a, dtype=np.float64)
    w = np.subtract(d, a, dtype=np.float64)
    return float(np.dot(np.cross(u, v), w)) / 6.0


def signed_measure(vertices: Sequence) -> float:
    if len(vertices) == 3:
        return signed_area(*vertices)
    if len(vertices) == 4:
        return signed_volume(*vertices)
    raise ValueError("expected 3 (triangle) or 4 (tetrahedron) vertices")


@dataclass(frozen=True)
class Scheme:
    tag: str
    rank: int

    def __post_init__(self):
        if self.tag not in ("A", "B") or self.rank not in (2, 3):
            raise ValueError(f"invalid scheme {self.tag!r} for rank {self.rank}")


@dataclass(frozen=True)
class SimplexRef:
    """One simplex of a cell triangulation.

    ``vertices`` are corner offsets inside the cell; ``ref_sign`` makes the
    untransformed simplex positive. ``anchor`` and ``variant`` name the grid
    point (as an offset from the cell origin) and determinant that measure it:
    ``variant`` is a sign pattern for corner simplices, or ``"star1"`` /
    ``"star2"`` for the 3D central tetrahedra.
    """

    cell: GridPoint
    vertices: tuple[tuple[int, ...], ...]
    ref_sign: int
    anchor: tuple[int, ...]
    variant: tuple[int, ...] | str

    @property
    def det_scale(self) -> int:
        """Ratio between the determinant and the simplex measure (2 or 6)."""
        return math.factorial(len(self.anchor))

    def at(self, cell: Sequence[int]) -> "SimplexRef":
        return SimplexRef(tuple(int(i) for i in cell), self.vertices, self.ref_sign, self.anchor, self.variant)

    def reference_measure(self) -> float:
        return self.ref_sign * signed_measure([np.asarray(v, dtype=np.float64) for v in self.vertices])

    def transformed_measure(self, field: DisplacementField) -> float:
        """Orientation-corrected measure of the simplex after the transformation."""
        pts = []
        for v in self.vertices:
            q = tuple(o + dv for o, dv in zip(self.cell, v))
            pts.append(np.asarray(q, dtype=np.float64) + field.data[q])
        return self.ref_sign * signed_measure(pts)


def _corner_simplex(corner: tuple[int, ...]) -> SimplexRef:
    rank = len(corner)
    signs = tuple(1 if c == 0 else -1 for c in corner)
    verts = [corner] + [
        tuple(c + (s if i == a else 0) for i, (c, s) in enumerate(zip(corner, signs))) for a, s in enumerate(signs)
    ]
    return SimplexRef((0,) * rank, tuple(verts), int(np.prod(signs)), corner, signs)


_STAR1 = SimplexRef((0, 0, 0), ((1, 1, 1), (0, 0, 1), (0, 1, 0), (1, 0, 0)), 1, (1, 1, 1), "star1")
_STAR2 = SimplexRef((0, 0, 0), ((0, 0, 0), (1, 1, 0), (0, 1, 1), (1, 0, 1)), 1, (0, 0, 0), "star2")


def scheme_simplices(scheme: Scheme, cell: Sequence[int] | None = None) -> list[SimplexRef]:
    """Simplices of one cell triangulation (2 triangles or 5 tetrahedra)."""
    parity = 0 if scheme.tag == "A" else 1
    corners = [c for c in itertools.product((0, 1), repeat=scheme.rank) if sum(c) % 2 == parity]
    out = [_corner_simplex(c) for c in corners]
    if scheme.rank == 3:
        out.append(_STAR1 if scheme.tag == "A" else _STAR2)
    if cell is not None:
        out = [s.at(cell) for s in out]
    return out


def fold_measure_cell(field: DisplacementField, cell: Sequence[int], scheme: Scheme) -> float:
    """Total measure of the folded simplices of ``scheme`` in one cell."""
    cell = tuple(int(i) for i in cell)
    if scheme.rank != field.rank:
        raise ValueError("scheme rank does not match field rank")
    if not all(0 <= o < n - 1 for o, n in zip(cell, field.dims.extents)):
        raise OutOfBounds(f"cell {cell} is not complete in grid {field.dims.extents}")
    return sum(max(0.0, -s.transformed_measure(field)) for s in scheme_simplices(scheme, cell))


# -- half-plane kernel ---------------------------------------------------------


@dataclass(frozen=True)
class HalfPlane:
    """Points ``p`` for which triangle ``a, b, p`` is positively oriented."""

    a: tuple[float, float]
    b: tuple[float, float]

    def __post_init__(self):
        if tuple(self.a) == tuple(self.b):
            raise ValueError("half-plane anchors must differ")

    def contains(self, p) -> bool:
        return signed_area(self.a, self.b, p) > 0

    def constraint(self) -> tuple[tuple[Fraction, Fraction], Fraction]:
        """Exact ``(normal, offset)`` with the half-plane being ``normal . p > offset``."""
        ax, ay, bx, by = (Fraction(float(v)) for v in (*self.a, *self.b))
        n = (ay - by, bx - ax)
        return n, n[0] * ax + n[1] * ay


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def _closed_feasible(cons) -> bool:
    """Exact feasibility of ``n . p >= k`` for 2D constraints."""
    normals = [n for n, _ in cons]
    pairs = [(i, j) for i, j in itertools.combinations(range(len(cons)), 2) if _cross(normals[i], normals[j]) != 0]
    if pairs:
        # normals span the plane: non-empty iff some vertex is feasible
        for i, j in pairs:
            (n1, k1), (n2, k2) = cons[i], cons[j]
            d = _cross(n1, n2)
            p = ((k1 * n2[1] - k2 * n1[1]) / d, (n1[0] * k2 - n2[0] * k1) / d)
            if all(n[0] * p[0] + n[1] * p[1] >= k for n, k in cons):
                return True
        return False
    n0 = normals[0]
    nn = n0[0] * n0[0] + n0[1] * n0[1]
    lower, upper = [], []
    for n, k in cons:
        lam = (n[0] * n0[0] + n[1] * n0[1]) / nn
        (lower if lam > 0 else upper).append(k / lam)
    return not lower or not upper or max(lower) <= min(upper)


def kernel_nonempty(q_mx, q_my, q_px, q_py, eps: float = KERNEL_EPS) -> bool:
    """Whether some position of the centre point makes all four corner dets positive.

    Arguments are the transformed neighbours ``p-x, p-y, p+x, p+y`` in that
    cyclic order. The strict half-planes are shrunk by ``eps`` (in distance
    units) and the closed system is decided exactly in rational arithmetic.
    """
    pts = [tuple(float(c) for c in q) for q in (q_mx, q_my, q_px, q_py)]
    cons = []
    for a, b in zip(pts, pts[1:] + pts[:1]):
        if a == b:
            return False
        n, k = HalfPlane(a, b).constraint()
        norm = Fraction(math.hypot(float(n[0]), float(n[1])))
        cons.append((n, k + Fraction(eps) * norm))
    return _closed_feasible(cons)


def neighbor_central_det(q_mx, q_my, q_px, q_py) -> float:
    """Central-difference determinant from the four transformed neighbours."""
    cx = (np.asarray(q_px, dtype=np.float64) - np.asarray(q_mx, dtype=np.float64)) / 2
    cy = (np.asarray(q_py, dtype=np.float64) - np.asarray(q_my, dtype=np.float64)) / 2
    return float(cx[0] * cy[1] - cx[1] * cy[0])
