import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_field
from digidiffeo import synth
from digidiffeo.errors import OutOfBounds
from digidiffeo.geometry import (
    HalfPlane,
    Scheme,
    fold_measure_cell,
    kernel_nonempty,
    neighbor_central_det,
    scheme_simplices,
    signed_area,
    signed_volume,
)
from digidiffeo.grid import iterate_cells
from digidiffeo.jacobian import corner_det, sign_patterns, star_det
from oracles import folded_measure_by_enumeration, kernel_by_sampling

SCHEMES = [Scheme(t, r) for r in (2, 3) for t in "AB"]


def test_signed_area():
    assert signed_area((0, 0), (1, 0), (0, 1)) == 0.5
    assert signed_area((0, 0), (0, 1), (1, 0)) == -0.5
    assert signed_area((0, 0), (1, 1), (2, 2)) == 0.0


def test_signed_volume():
    o, x, y, z = (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)
    assert signed_volume(o, x, y, z) == pytest.approx(1 / 6)
    assert signed_volume(o, x, z, y) == pytest.approx(-1 / 6)
    assert signed_volume(o, x, y, (1, 1, 0)) == 0.0


@pytest.mark.parametrize("scheme", SCHEMES)
def test_scheme_partitions_unit_cell(scheme):
    simplices = scheme_simplices(scheme)
    assert len(simplices) == (2 if scheme.rank == 2 else 5)
    measures = [s.reference_measure() for s in simplices]
    assert all(m > 0 for m in measures)
    assert sum(measures) == pytest.approx(1.0, abs=1e-15)
    for s in simplices:
        assert len(set(s.vertices)) == len(s.vertices)


def test_3d_scheme_measures():
    ms = sorted(s.reference_measure() for s in scheme_simplices(Scheme("A", 3)))
    assert ms == pytest.approx([1 / 6] * 4 + [1 / 3])


def test_2d_scheme_a_is_minus_minus_plus_plus():
    patterns = {s.variant for s in scheme_simplices(Scheme("A", 2))}
    assert patterns == {(-1, -1), (1, 1)}
    patterns = {s.variant for s in scheme_simplices(Scheme("B", 2))}
    assert patterns == {(-1, 1), (1, -1)}


def test_schemes_use_all_corner_patterns_once():
    for rank in (2, 3):
        used = [s.variant for t in "AB" for s in scheme_simplices(Scheme(t, rank)) if isinstance(s.variant, tuple)]
        assert sorted(used) == sorted(sign_patterns(rank))


def test_scheme_b_star_on_identity():
    f = synth.identity((3, 3, 3))
    central = [s for s in scheme_simplices(Scheme("B", 3), (0, 0, 0)) if s.variant == "star2"][0]
    assert central.transformed_measure(f) == pytest.approx(1 / 3)
    assert star_det(f, (0, 0, 0), "star2") / 6 == pytest.approx(1 / 3)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_fold_identity_zero(scheme):
    f = synth.identity((3,) * scheme.rank)
    for cell in iterate_cells(f.dims):
        assert fold_measure_cell(f, cell, scheme) == 0.0


@pytest.mark.parametrize("tag", "AB")
def test_fold_reflection_whole_cell(tag):
    f = synth.reflection((3, 3, 3), axis=0)
    for cell in iterate_cells(f.dims):
        assert fold_measure_cell(f, cell, Scheme(tag, 3)) == pytest.approx(1.0, abs=1e-12)


def test_fold_checkerboard_cells():
    # folded dets: (+,+) at (2,2) = -2; (-,-) and (-,+) at (3,2) = -0.5; (-,-) and (+,-) at (2,3) = -0.5
    f = synth.checkerboard_fixture()
    a = {cell: fold_measure_cell(f, cell, Scheme("A", 2)) for cell in iterate_cells(f.dims)}
    b = {cell: fold_measure_cell(f, cell, Scheme("B", 2)) for cell in iterate_cells(f.dims)}
    assert a[(2, 2)] == pytest.approx(1.0)
    assert a[(2, 1)] == pytest.approx(0.25) and a[(1, 2)] == pytest.approx(0.25)
    assert b[(2, 2)] == pytest.approx(0.5)
    assert sum(a.values()) == pytest.approx(1.5)
    assert sum(b.values()) == pytest.approx(0.5)
    for cell in iterate_cells(f.dims):
        for tag, table in (("A", a), ("B", b)):
            expected = 0.0
            for s in scheme_simplices(Scheme(tag, 2), cell):
                point = tuple(o + c for o, c in zip(cell, s.anchor))
                expected += max(0.0, -corner_det(f, point, s.variant)) / 2
            assert table[cell] == pytest.approx(expected, abs=1e-12)


def test_fold_measure_out_of_bounds():
    with pytest.raises(OutOfBounds):
        fold_measure_cell(synth.identity((3, 3)), (2, 0), Scheme("A", 2))


@pytest.mark.parametrize("extents", [(5, 4), (4, 3, 4)])
def test_mapping_law(rng, extents):
    """Corner simplex measure x rank! == corner determinant at its anchor point."""
    rank = len(extents)
    for _ in range(5):
        f = random_field(rng, extents, 1.5)
        for cell in iterate_cells(f.dims):
            for tag in "AB":
                for s in scheme_simplices(Scheme(tag, rank), cell):
                    point = tuple(o + c for o, c in zip(cell, s.anchor))
                    if isinstance(s.variant, tuple):
                        det = corner_det(f, point, s.variant)
                    else:
                        det = star_det(f, point, s.variant)
                    assert s.det_scale * s.transformed_measure(f) == pytest.approx(det, abs=1e-12)


@pytest.mark.parametrize("extents", [(6, 5), (4, 4, 3)])
def test_fold_matches_enumeration_oracle(rng, extents):
    rank = len(extents)
    for amp in (0.3, 1.0, 2.5):
        f = random_field(rng, extents, amp)
        for tag in "AB":
            ours = sum(fold_measure_cell(f, c, Scheme(tag, rank)) for c in iterate_cells(f.dims))
            assert ours == pytest.approx(folded_measure_by_enumeration(f, tag), abs=1e-9)


def test_fold_free_quads_have_scheme_independent_area(rng):
    f = random_field(rng, (6, 6), 0.2)
    for cell in iterate_cells(f.dims):
        parts = {t: [s.transformed_measure(f) for s in scheme_simplices(Scheme(t, 2), cell)] for t in "AB"}
        assert min(parts["A"] + parts["B"]) > 0
        assert sum(parts["A"]) == pytest.approx(sum(parts["B"]), abs=1e-9)


def test_affine_cubes_have_scheme_independent_volume(rng):
    a = np.eye(3) + rng.uniform(-0.3, 0.3, (3, 3))
    f = synth.linear((4, 4, 4), a)
    for cell in iterate_cells(f.dims):
        va = sum(s.transformed_measure(f) for s in scheme_simplices(Scheme("A", 3), cell))
        vb = sum(s.transformed_measure(f) for s in scheme_simplices(Scheme("B", 3), cell))
        assert va == pytest.approx(np.linalg.det(a), abs=1e-9)
        assert vb == pytest.approx(va, abs=1e-9)


def test_curved_cube_volumes_differ_between_schemes():
    # lifting one corner bends the faces; the two schemes split faces along opposite diagonals
    f = synth.single_point((2, 2, 2), (1, 1, 1), (0.0, 0.0, 0.3))
    va = sum(s.transformed_measure(f) for s in scheme_simplices(Scheme("A", 3), (0, 0, 0)))
    vb = sum(s.transformed_measure(f) for s in scheme_simplices(Scheme("B", 3), (0, 0, 0)))
    assert va != pytest.approx(vb, abs=1e-3)


def test_sign_law_random(rng):
    """A simplex is folded exactly when its determinant is negative."""
    f = random_field(rng, (5, 5, 5), 1.0)
    for cell in iterate_cells(f.dims):
        for tag in "AB":
            for s in scheme_simplices(Scheme(tag, 3), cell):
                m = s.transformed_measure(f)
                point = tuple(o + c for o, c in zip(cell, s.anchor))
                det = corner_det(f, point, s.variant) if isinstance(s.variant, tuple) else star_det(f, point, s.variant)
                if abs(det) > 1e-12:
                    assert (m < 0) == (det < 0)


# -- half-plane kernel ------------------------------------------------------------

IDENTITY_NBRS = [(-1, 0), (0, -1), (1, 0), (0, 1)]


def test_halfplane():
    h = HalfPlane((0, 0), (1, 0))
    assert h.contains((0.5, 1.0))
    assert not h.contains((0.5, -1.0))
    assert not h.contains((2.0, 0.0))
    with pytest.raises(ValueError):
        HalfPlane((1, 1), (1, 1))


def test_kernel_identity():
    assert kernel_nonempty(*IDENTITY_NBRS)


def test_kernel_swapped_x_neighbours_is_empty():
    q = [(1, 0), (0, -1), (-1, 0), (0, 1)]
    assert not kernel_nonempty(*q)
    assert not kernel_by_sampling(q)


def test_kernel_collinear():
    assert not kernel_nonempty((0, 0), (1, 1), (2, 2), (3, 3))
    assert not kernel_nonempty((0, 0), (1, 0), (2, 0), (1, 0))


def test_kernel_repeated_point():
    assert not kernel_nonempty((0, 0), (0, 0), (1, 0), (0, 1))


def test_kernel_thin_sliver_vs_eps():
    # a strictly positive kernel much thinner than the shrink margin is reported empty
    h = 1e-14
    assert not kernel_nonempty((-1, 0), (0, -h), (1, 0), (0, h))
    assert kernel_nonempty((-1, 0), (0, -1e-6), (1, 0), (0, 1e-6))


def test_kernel_concave_quad():
    # dart shape: reflex vertex at p+y, kernel still non-empty
    q = [(-1, 0), (0, -1), (1, 0), (0, -0.5)]
    assert kernel_nonempty(*q)
    assert kernel_by_sampling(q)


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=4, max_size=4))
@settings(max_examples=200, deadline=None)
def test_kernel_agrees_with_sampling(q):
    ours = kernel_nonempty(*q)
    if not ours:
        # sampling can only find points that really are inside
        assert not kernel_by_sampling(q, n=201)


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=4, max_size=4))
@settings(max_examples=200, deadline=None)
def test_nonempty_kernel_implies_positive_central(q):
    # holds for any quadruple, simple or not: the central det averages four positive corner dets
    if kernel_nonempty(*q):
        assert neighbor_central_det(*q) > 0
