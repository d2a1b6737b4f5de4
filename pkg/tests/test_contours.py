import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from skimage.draw import line as sk_line

from svrtsynth import contours as cg
from svrtsynth.errors import PlacementOutOfBounds, SeparationViolation
from svrtsynth.rng import make_rng


def segments_cross(p1, p2, q1, q2):
    """Proper intersection test used as an independent oracle."""
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def brute_force_simple(pts):
    n = len(pts)
    for i, j in itertools.combinations(range(n), 2):
        if j == i + 1 or (i == 0 and j == n - 1):
            continue
        if segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]):
            return False
    return True


def test_gen_contour_deterministic():
    a = cg.gen_contour(7, 8)
    b = cg.gen_contour(7, 8)
    assert np.array_equal(a.points, b.points)


def test_gen_contour_seed_changes_output():
    assert not np.array_equal(cg.gen_contour(7, 8).points, cg.gen_contour(8, 8).points)


def test_gen_contour_rejects_low_complexity():
    with pytest.raises(ValueError):
        cg.gen_contour(1, 2)


@given(st.integers(0, 2**31), st.integers(3, 10))
def test_contour_is_simple_and_contains_origin(seed, complexity):
    c = cg.gen_contour(seed, complexity)
    assert len(c) == complexity * 8
    assert brute_force_simple(c.points)
    assert cg.point_in_polygon(np.zeros((1, 2)), c.points)[0]
    assert np.isclose(np.hypot(*c.points.T).max(), 1.0)


def test_identity_transform_keeps_vertices():
    c = cg.gen_contour(3)
    inst = cg.transform(c, (0, 0), 1.0, 0.0)
    assert np.allclose(inst.points(), c.points)
    assert inst.identity == c.identity


def test_reflection_is_involution():
    c = cg.gen_contour(3)
    once = cg.transform(c, (0, 0), -1.0)
    assert np.allclose(once.points()[:, 0], -c.points[:, 0])
    assert np.allclose(once.points()[:, 1], c.points[:, 1])
    twice = cg.transform(once, (0, 0), -1.0)
    assert np.allclose(twice.points(), c.points, atol=1e-12)


def test_scale_doubles_distances():
    c = cg.gen_contour(4)
    inst = cg.transform(c, (5, 6), 2.0, 0.3)
    d0 = np.linalg.norm(c.points[:, None] - c.points[None], axis=2)
    d1 = np.linalg.norm(inst.points()[:, None] - inst.points()[None], axis=2)
    assert np.allclose(d1, 2 * d0)


def test_zero_scale_rejected():
    with pytest.raises(ValueError):
        cg.transform(cg.gen_contour(1), (0, 0), 0.0)


finite = st.floats(-50, 50, allow_nan=False)
scales = st.one_of(st.floats(0.2, 3), st.floats(-3, -0.2))
angles = st.floats(-np.pi, np.pi)


@given(finite, finite, scales, angles, finite, finite, scales, angles)
def test_transform_composition(x1, y1, s1, r1, x2, y2, s2, r2):
    c = cg.gen_contour(11)
    step = cg.transform(cg.transform(c, (x1, y1), s1, r1), (x2, y2), s2, r2)
    # reference: apply the two maps to the vertices one after the other
    ref = cg.similarity(cg.similarity(c.points, (x1, y1), s1, r1), (x2, y2), s2, r2)
    assert np.allclose(step.points(), ref, atol=1e-9)


@given(st.integers(0, 120), st.integers(0, 120), st.integers(0, 120), st.integers(0, 120))
def test_bresenham_matches_skimage(x0, y0, x1, y1):
    ours = set(cg.bresenham(x0, y0, x1, y1))
    rr, cc = sk_line(y0, x0, y1, x1)
    theirs = set(zip(cc.tolist(), rr.tolist()))
    assert ours == theirs
    assert len(ours) == max(abs(x1 - x0), abs(y1 - y0)) + 1


def test_rasterize_empty():
    canvas = cg.rasterize([], 32, 32)
    assert canvas.bitmap.shape == (32, 32)
    assert canvas.bitmap.sum() == 0


def test_rasterize_one_instance_pixel_count():
    inst = cg.transform(cg.gen_contour(5), (64, 64), 20.0)
    canvas = cg.rasterize([inst])
    # independent recount: union of the straight segments between rounded vertices
    v = np.rint(inst.points()).astype(int)
    pix = set()
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        rr, cc = sk_line(a[1], a[0], b[1], b[0])
        pix |= set(zip(cc.tolist(), rr.tolist()))
    assert canvas.bitmap.sum() == len(pix)


def test_rasterize_touching_raises():
    c = cg.gen_contour(5)
    a = cg.transform(c, (40, 64), 10.0)
    # move b right until its outline is exactly one pixel away from a's
    for dx in range(30, 10, -1):
        b = cg.transform(c, (40 + dx, 64), 10.0)
        d = cg.pixel_distance(cg.outline_pixels(a), cg.outline_pixels(b))
        if d == 1:
            break
    else:
        pytest.skip("no touching offset found")
    with pytest.raises(SeparationViolation):
        cg.rasterize([a, b])
    cg.rasterize([a, b], allow_touching=[(0, 1)])


def test_rasterize_out_of_bounds():
    inst = cg.transform(cg.gen_contour(5), (3, 3), 10.0)
    with pytest.raises(PlacementOutOfBounds):
        cg.rasterize([inst])


def test_pgm_roundtrip():
    canvas = cg.rasterize([cg.transform(cg.gen_contour(2), (64, 64), 15.0)])
    data = canvas.to_pgm(["hello"])
    assert data.startswith(b"P5\n# hello\n128 128\n255\n")
    assert np.array_equal(cg.read_pgm(data), canvas.bitmap)


def _items(seeds, scales):
    return [(cg.gen_contour(s, identity=k), sc, 0.0) for k, (s, sc) in enumerate(zip(seeds, scales))]


def test_place_single_shape_in_bounds():
    placed = cg.place_nonoverlapping(_items([1], [10.0]), rng=make_rng(0))
    assert len(placed) == 1
    assert cg.in_bounds(cg.outline_pixels(placed[0]), 128, 128)


@pytest.mark.parametrize("seed", range(5))
def test_place_contains(seed):
    placed = cg.place_nonoverlapping(_items([1, 2], [40.0, 8.0]), [cg.Contains(0, 1)],
                                     rng=make_rng(seed))
    outer = placed[0].points()
    assert cg.point_in_polygon(placed[1].points(), outer).all()
    d = cg.pixel_distance(cg.outline_pixels(placed[0]), cg.outline_pixels(placed[1]))
    assert d >= 2


@pytest.mark.parametrize("seed", range(5))
def test_place_borders(seed):
    placed = cg.place_nonoverlapping(_items([1, 2], [14.0, 12.0]), [cg.Borders(0, 1)],
                                     rng=make_rng(seed))
    d = cg.pixel_distance(cg.outline_pixels(placed[0]), cg.outline_pixels(placed[1]))
    assert d == 1


@given(st.integers(0, 10_000))
def test_random_layouts_keep_separation(seed):
    rng = make_rng(seed)
    n = int(rng.integers(2, 5))
    items = _items(rng.integers(0, 1000, n), rng.uniform(6, 12, n))
    placed = cg.place_nonoverlapping(items, rng=rng)
    pix = [cg.outline_pixels(p) for p in placed]
    for a, b in itertools.combinations(pix, 2):
        assert cg.pixel_distance(a, b) >= 2


def test_placement_deterministic():
    items = _items([3, 4, 5], [10.0, 9.0, 11.0])
    a = cg.place_nonoverlapping(items, rng=make_rng(42))
    b = cg.place_nonoverlapping(items, rng=make_rng(42))
    assert [x.centre for x in a] == [y.centre for y in b]
