import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_field
from digidiffeo import synth
from digidiffeo.errors import BoundaryUndefined, RankMismatch
from digidiffeo.geometry import signed_volume
from digidiffeo.grid import DisplacementField, GridDims
from digidiffeo.jacobian import (
    CENTRAL,
    STAR1,
    STAR2,
    Variant,
    all_variants,
    central_det,
    corner_det,
    corner_variants,
    criterion_variants,
    det_at,
    jacobian_map,
    sign_patterns,
    star_det,
)
from oracles import linalg_central_det, linalg_corner_det

CHECKER = synth.checkerboard_fixture()
P = (2, 2)


@pytest.mark.parametrize("pattern", sign_patterns(2) + sign_patterns(3))
def test_identity_corner(pattern):
    f = synth.identity((4,) * len(pattern))
    p = (1,) * len(pattern)
    assert corner_det(f, p, pattern) == 1.0


@pytest.mark.parametrize(
    "pattern, expected",
    # det[(1+d, d), (d, 1+d)] = 1 + 2d for (-,-) and 1 - 2d for (+,+), d = 1.5
    [((-1, -1), 4.0), ((1, 1), -2.0), ((-1, 1), 1.0), ((1, -1), 1.0)],
)
def test_checkerboard_corner_dets(pattern, expected):
    assert corner_det(CHECKER, P, pattern) == pytest.approx(expected, abs=1e-12)
    assert linalg_corner_det(CHECKER, P, pattern) == pytest.approx(expected, abs=1e-12)


def test_checkerboard_central_ignores_centre():
    assert central_det(CHECKER, P) == 1.0
    assert linalg_central_det(CHECKER, P) == pytest.approx(1.0, abs=1e-12)


def test_central_is_quarter_sum_of_corners_on_fixture():
    corners = [corner_det(CHECKER, P, s) for s in sign_patterns(2)]
    assert sorted(corners) == pytest.approx([-2.0, 1.0, 1.0, 4.0])
    assert sum(corners) / 4 == pytest.approx(central_det(CHECKER, P), abs=1e-12)


def test_central_identity():
    assert central_det(synth.identity((3, 3)), (1, 1)) == 1.0
    assert central_det(synth.identity((3, 3, 3)), (1, 1, 1)) == 1.0


@pytest.mark.parametrize("which", ["star1", "star2", STAR1, STAR2])
def test_star_identity(which):
    assert star_det(synth.identity((3, 3, 3)), (1, 1, 1), which) == 2.0


def test_star1_reflection_matches_signed_volume():
    f = synth.reflection((3, 3, 3), axis=0)
    value = star_det(f, (1, 1, 1), "star1")
    assert value == pytest.approx(-2.0, abs=1e-12)
    T = lambda q: np.asarray(q, float) + f.data[q]
    vol = signed_volume(T((1, 1, 1)), T((0, 0, 1)), T((0, 1, 0)), T((1, 0, 0)))
    assert 6 * vol == pytest.approx(value, abs=1e-12)


def test_star_rejects_2d():
    with pytest.raises(RankMismatch):
        star_det(synth.identity((3, 3)), (1, 1), "star1")


@pytest.mark.parametrize(
    "call",
    [
        lambda f: corner_det(f, (0, 1), (-1, 1)),
        lambda f: corner_det(f, (2, 1), (1, 1)),
        lambda f: central_det(f, (0, 1)),
    ],
)
def test_boundary_undefined(call):
    with pytest.raises(BoundaryUndefined):
        call(synth.identity((3, 3)))


def test_star_boundary():
    f = synth.identity((3, 3, 3))
    with pytest.raises(BoundaryUndefined):
        star_det(f, (0, 1, 1), "star1")
    with pytest.raises(BoundaryUndefined):
        star_det(f, (2, 1, 1), "star2")


def test_pattern_rank_mismatch():
    with pytest.raises(RankMismatch):
        corner_det(synth.identity((3, 3)), (1, 1), (1, 1, 1))


def test_variant_parse_round_trip():
    for rank in (2, 3):
        for v in all_variants(rank):
            assert Variant.parse(v.name) == v
    with pytest.raises(ValueError):
        Variant.parse("+x")
    assert len(criterion_variants(2)) == 4
    assert len(criterion_variants(3)) == 10


def test_identity_map_boundary():
    m = jacobian_map(synth.identity((4, 4, 4)), Variant.corner((-1, -1, -1)))
    idx = np.indices((4, 4, 4))
    expected_defined = (idx > 0).all(axis=0)
    np.testing.assert_array_equal(m.defined, expected_defined)
    assert (m.values[m.defined] == 1.0).all()
    assert np.isnan(m.values[~m.defined]).all()


@pytest.mark.parametrize("variant", corner_variants(2) + [CENTRAL])
def test_uniform_scale_map(variant):
    f = synth.generate(synth.SynthSpec("uniform_scale", GridDims((5, 6)), scale=2.0))
    m = jacobian_map(f, variant)
    np.testing.assert_allclose(m.defined_values(), 4.0, atol=1e-12)


def test_map_matches_pointwise(rng):
    for extents in [(6, 5), (5, 4, 6)]:
        f = random_field(rng, extents, 0.8)
        for variant in all_variants(len(extents)):
            m = jacobian_map(f, variant)
            for p in itertools.product(*[range(e) for e in extents]):
                if m.defined[p]:
                    assert m.values[p] == det_at(f, p, variant)
                else:
                    with pytest.raises(BoundaryUndefined):
                        det_at(f, p, variant)


def test_map_threads_identical(rng):
    f = random_field(rng, (40, 9, 7), 1.0)
    for variant in (STAR2, Variant.corner((1, -1, 1)), CENTRAL):
        a = jacobian_map(f, variant, threads=1)
        b = jacobian_map(f, variant, threads=4)
        assert a.values.tobytes() == b.values.tobytes()


def test_map_rejects_wrong_rank():
    with pytest.raises(RankMismatch):
        jacobian_map(synth.identity((3, 3)), STAR1)


def test_corner_det_matches_linalg(rng):
    for extents in [(5, 5), (4, 4, 4)]:
        f = random_field(rng, extents, 1.5)
        interior = [tuple(rng.integers(1, e - 1) for e in extents) for _ in range(20)]
        for p in interior:
            for s in sign_patterns(len(extents)):
                assert corner_det(f, p, s) == pytest.approx(linalg_corner_det(f, p, s), abs=1e-9)
            assert central_det(f, p) == pytest.approx(linalg_central_det(f, p), abs=1e-9)


# -- properties ------------------------------------------------------------------

matrices_2d = st.lists(st.floats(-2, 2), min_size=4, max_size=4).map(lambda v: np.reshape(v, (2, 2)))
matrices_3d = st.lists(st.floats(-2, 2), min_size=9, max_size=9).map(lambda v: np.reshape(v, (3, 3)))


@given(st.one_of(matrices_2d, matrices_3d))
@settings(max_examples=60, deadline=None)
def test_linear_map_law(a):
    rank = a.shape[0]
    f = synth.linear((4,) * rank, a)
    d = np.linalg.det(a)
    for variant in corner_variants(rank) + [CENTRAL]:
        np.testing.assert_allclose(jacobian_map(f, variant).defined_values(), d, atol=1e-9)
    if rank == 3:
        for variant in (STAR1, STAR2):
            np.testing.assert_allclose(jacobian_map(f, variant).defined_values(), 2 * d, atol=1e-9)


@given(st.integers(0, 2**32 - 1), st.sampled_from([(7, 6), (5, 4, 6)]), st.floats(0.05, 3.0))
@settings(max_examples=40, deadline=None)
def test_multilinearity_identity(seed, extents, amp):
    f = random_field(np.random.default_rng(seed), extents, amp)
    rank = len(extents)
    central = jacobian_map(f, CENTRAL)
    total = sum(np.nan_to_num(jacobian_map(f, v).values) for v in corner_variants(rank))
    err = np.abs(central.values[central.defined] - total[central.defined] / 2**rank)
    assert err.max() <= 1e-9


@given(st.integers(0, 2**32 - 1), st.sampled_from([(5, 6), (4, 5, 4)]), st.lists(st.floats(-4, 4), min_size=3, max_size=3))
@settings(max_examples=30, deadline=None)
def test_translation_invariance(seed, extents, shift):
    rank = len(extents)
    f = random_field(np.random.default_rng(seed), extents, 1.0)
    g = DisplacementField.from_array(f.data + np.asarray(shift[:rank]))
    for variant in all_variants(rank):
        a, b = jacobian_map(f, variant), jacobian_map(g, variant)
        np.testing.assert_array_equal(a.defined, b.defined)
        assert np.abs(a.defined_values() - b.defined_values()).max() <= 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from([(5, 6), (4, 5, 3)]), st.data())
@settings(max_examples=30, deadline=None)
def test_axis_relabeling(seed, extents, data):
    rank = len(extents)
    perm = data.draw(st.permutations(range(rank)))
    f = random_field(np.random.default_rng(seed), extents, 1.2)
    g = DisplacementField.from_array(f.data.transpose(list(perm) + [rank])[..., list(perm)])
    for pattern in sign_patterns(rank):
        a = jacobian_map(f, Variant.corner(pattern))
        b = jacobian_map(g, Variant.corner([pattern[i] for i in perm]))
        np.testing.assert_allclose(b.values, a.values.transpose(perm), atol=1e-12, equal_nan=True)
