import numpy as np
import pytest

from geolink.geometry import (
    ADMISSIBLE, CONVERSE, GeometryError, NodeType, Point, Polygon, Polyline, Relation,
    SampleTransform, apply_transform, centroid, circumcircle_violations, clip_segment,
    delaunay_edges, point_in_polygon, relate, relation_from_matrix, sample_keypoints,
    signed_area, triangulate,
)
from geolink.geometry.delaunay import incircle, orient
from oracles import (
    delaunay_edges_bruteforce, grid_relation_oracle, in_general_position, random_configuration,
)

R = Relation
SQUARE = Polygon([[0, 0], [1, 0], [1, 1], [0, 1]])


def _random_general_points(rng, n):
    while True:
        pts = rng.integers(0, 1000, size=(n, 2))
        if len({tuple(p) for p in pts}) == n and in_general_position(pts):
            return pts


# -- predicates and triangulation ---------------------------------------------------


def test_orient_exact_on_nearly_collinear_points():
    a, b = (0.0, 0.0), (1.0, 1.0)
    assert orient(a, b, (0.5, 0.5)) == 0
    assert orient(a, b, (0.5, 0.5 + 1e-17)) == 0  # rounds to the same double
    assert orient(a, b, (0.5, np.nextafter(0.5, 1.0))) == 1
    assert orient(a, b, (0.5, np.nextafter(0.5, 0.0))) == -1


def test_incircle_cocircular_is_zero():
    a, b, c = (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)
    assert incircle(a, b, c, (0.0, -1.0)) == 0
    assert incircle(a, b, c, (0.0, 0.0)) == 1
    assert incircle(a, b, c, (0.0, -1.0000001)) == -1


@pytest.mark.parametrize("seed", range(40))
def test_delaunay_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    pts = _random_general_points(rng, int(rng.integers(3, 13)))
    assert set(delaunay_edges(pts.astype(float))) == delaunay_edges_bruteforce(pts)


def test_triangulation_is_locally_delaunay_on_grid():
    # Cocircular quadruples everywhere: any valid answer has no strict violations.
    xs, ys = np.meshgrid(np.arange(4.0), np.arange(3.0))
    pts = np.c_[xs.ravel(), ys.ravel()]
    tris = triangulate(pts)
    assert len(tris) == 2 * 3 * 2
    assert circumcircle_violations(pts, tris) == 0


def test_delaunay_degenerate_inputs():
    assert delaunay_edges([]) == []
    assert delaunay_edges([[0, 0]]) == []
    assert delaunay_edges([[0, 0], [5, 5]]) == [(0, 1)]
    # collinear points are chained in order along the line
    assert delaunay_edges([[2, 2], [0, 0], [1, 1], [3, 3]]) == [(0, 2), (0, 3), (1, 2)]


def test_square_with_center():
    pts = [[0, 0], [2, 0], [2, 2], [0, 2], [1, 1]]
    edges = set(delaunay_edges(pts))
    assert edges == {(0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (1, 4), (2, 4), (3, 4)}


# -- topological relations -------------------------------------------------------------


@pytest.mark.parametrize("a, b, expected", [
    (Point(0.5, 0.5), SQUARE, R.WITHIN),
    (Point(1.0, 0.5), SQUARE, R.TOUCH),
    (Point(2.0, 0.5), SQUARE, None),
    (SQUARE, Point(0.5, 0.5), R.CONTAIN),
    (Point(0.5, 0.0), Polyline([[0, 0], [1, 0]]), R.WITHIN),
    (Point(0.0, 0.0), Polyline([[0, 0], [1, 0]]), R.TOUCH),
    (Polyline([[-1, 0.5], [2, 0.5]]), SQUARE, R.CROSS),
    (Polyline([[0.2, 0.5], [0.8, 0.5]]), SQUARE, R.COVER_BY),
    (Polyline([[0, 0], [1, 0]]), SQUARE, R.TOUCH),  # runs along the boundary only
    (SQUARE, Polyline([[-1, 0.5], [2, 0.5]]), R.CROSS),
    (Polyline([[0, 0], [1, 1]]), Polyline([[0, 1], [1, 0]]), R.INTERSECT),
    (Polyline([[0, 0], [1, 0]]), Polyline([[1, 0], [2, 3]]), R.TOUCH),
    (Polyline([[0, 0], [2, 0]]), Polyline([[0.5, 0], [1, 0]]), R.COVER),
    (Polyline([[0, 0], [1, 0]]), Polyline([[1, 0], [0, 0]]), R.EQUAL),
    (SQUARE, Polygon([[1, 0], [2, 0], [2, 1], [1, 1]]), R.TOUCH),
    (SQUARE, Polygon([[0.5, 0.5], [2, 0.5], [2, 2], [0.5, 2]]), R.OVERLAP),
    (SQUARE, Polygon([[0.2, 0.2], [0.8, 0.2], [0.8, 0.8]]), R.COVER),
    (Polygon([[0.2, 0.2], [0.8, 0.2], [0.8, 0.8]]), SQUARE, R.COVER_BY),
    (SQUARE, Polygon([[0, 1], [0, 0], [1, 0], [1, 1]]), R.EQUAL),  # same set, other start and winding
    (SQUARE, Polygon([[3, 3], [4, 3], [4, 4]]), None),
])
def test_relate_cases(a, b, expected):
    assert relate(a, b) == expected


def test_relate_point_in_hole_is_disjoint():
    donut = Polygon([[0, 0], [4, 0], [4, 4], [0, 4]], holes=([[1, 1], [3, 1], [3, 3], [1, 3]],))
    assert relate(Point(2, 2), donut) is None
    assert relate(Point(1, 2), donut) == R.TOUCH
    assert relate(Point(0.5, 2), donut) == R.WITHIN


def test_relate_rejects_point_pairs():
    with pytest.raises(GeometryError):
        relate(Point(0, 0), Point(1, 1))


def test_relate_is_converse_symmetric(rng):
    for _ in range(150):
        a, b = random_configuration(rng)
        r_ab, r_ba = relate(a, b), relate(b, a)
        assert (r_ab is None) == (r_ba is None)
        if r_ab is not None:
            assert CONVERSE[r_ab] == r_ba
            assert r_ab in ADMISSIBLE[(a.kind, b.kind)]


def test_relation_from_matrix_rejects_inadmissible():
    # an interior-interior dimension-2 matrix is impossible for point/polygon
    with pytest.raises(GeometryError):
        relation_from_matrix(NodeType.POINT, NodeType.POLYGON, "2FFFFFFF2")


def test_admissible_table_is_closed_under_converse():
    for (s, t), rels in ADMISSIBLE.items():
        assert {CONVERSE[r] for r in rels} == ADMISSIBLE[(t, s)]


def test_relate_agrees_with_grid_oracle_sample():
    rng = np.random.default_rng(77)
    for _ in range(40):
        a, b = random_configuration(rng)
        assert relate(a, b) in grid_relation_oracle(a, b), (a, b)


# -- shapes, sampling, transforms ----------------------------------------------------


def test_shape_validation():
    with pytest.raises(GeometryError):
        Polyline([[0, 0]])
    with pytest.raises(GeometryError):
        Polygon([[0, 0], [1, 0]])
    with pytest.raises(GeometryError):
        Point(float("nan"), 0.0)
    p = Polygon([[0, 0], [1, 0], [1, 1]])
    assert np.array_equal(p.exterior[0], p.exterior[-1])
    assert not p.exterior.flags.writeable


def test_orientation_and_area():
    cw = Polygon([[0, 0], [0, 1], [1, 1], [1, 0]])
    assert signed_area(cw.exterior) == -1.0
    assert signed_area(cw.oriented().exterior) == 1.0
    assert cw.area() == 1.0


def test_centroid_of_l_shape():
    ell = Polygon([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])
    np.testing.assert_allclose(centroid(ell), [5 / 6, 5 / 6], atol=1e-15)


def test_point_in_polygon_boundary_is_outside():
    assert point_in_polygon([0.5, 0.5], SQUARE)
    assert not point_in_polygon([1.0, 0.5], SQUARE)
    assert not point_in_polygon([0.0, 0.0], SQUARE)


def test_keypoints_per_kind(rng):
    assert sample_keypoints(Point(0.3, 0.4), rng).tolist() == [[0.3, 0.4]]
    kp = sample_keypoints(Polyline([[0, 0], [2, 0], [2, 2]]), rng)
    np.testing.assert_array_equal(kp, [[0, 0], [2, 0], [2, 2]])
    c_shape = Polygon([[0, 0], [3, 0], [3, 1], [1, 1], [1, 2], [3, 2], [3, 3], [0, 3]])
    kp = sample_keypoints(c_shape, rng)
    assert kp.shape == (4, 2)
    assert all(point_in_polygon(p, c_shape) for p in kp[1:])


def test_keypoints_reproducible():
    g = Polygon([[0, 0], [1, 0], [0.5, 1]])
    a = sample_keypoints(g, np.random.default_rng(5))
    b = sample_keypoints(g, np.random.default_rng(5))
    assert a.tobytes() == b.tobytes()


def test_clip_segment():
    assert clip_segment((-1, 0.5), (2, 0.5), 0, 0, 1, 1) == pytest.approx((1 / 3, 2 / 3))
    assert clip_segment((2, 2), (3, 3), 0, 0, 1, 1) is None


def test_transform_crop_and_flip():
    t = SampleTransform(0.5, 0.0, 0.5, 0.5, flip=True)
    assert apply_transform(Point(0.75, 0.25), t) == Point(0.5, 0.5)
    assert apply_transform(Point(0.25, 0.25), t) is None
    line = apply_transform(Polyline([[0, 0.25], [1, 0.25]]), t)
    np.testing.assert_allclose(line.vertices, [[1, 0.5], [0, 0.5]])
    poly = apply_transform(SQUARE, t)
    assert poly.area() == pytest.approx(1.0)
    assert signed_area(poly.exterior) > 0


def test_identity_transform_returns_input():
    g = Polyline([[0, 0], [1, 1]])
    assert apply_transform(g, SampleTransform()) is g


def test_transform_rejects_window_outside_frame():
    with pytest.raises(GeometryError):
        SampleTransform(0.6, 0.0, 0.5, 0.5)
