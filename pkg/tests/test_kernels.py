import os
import subprocess
import sys

import numpy as np
import pytest
import shapely

from geolink import kernels

VARIANTS = [kernels.locate_points_numba, kernels.locate_points_numpy]


def _square_with_hole():
    outer = np.array([[0, 0], [4, 0], [4, 4], [0, 4], [0, 0]], dtype=float)
    hole = np.array([[1, 1], [1, 3], [3, 3], [3, 1], [1, 1]], dtype=float)
    rings = np.vstack([outer, hole])
    return rings[:, 0], rings[:, 1], np.array([0, 5, 10]), shapely.Polygon(outer, [hole])


@pytest.mark.parametrize("fn", VARIANTS)
def test_locate_points_labels(fn):
    rx, ry, starts, _ = _square_with_hole()
    px = np.array([0.5, 2.0, 4.0, 1.0, 5.0, 2.0])
    py = np.array([0.5, 2.0, 2.0, 2.0, 5.0, 0.0])
    expect = [kernels.INSIDE, kernels.OUTSIDE, kernels.BOUNDARY, kernels.BOUNDARY,
              kernels.OUTSIDE, kernels.BOUNDARY]
    assert list(fn(px, py, rx, ry, starts)) == expect


def test_locate_points_variants_agree_with_shapely(rng):
    rx, ry, starts, poly = _square_with_hole()
    pts = rng.integers(-4, 37, size=(3000, 2)) / 8.0  # dyadic grid, hits edges and vertices
    a = kernels.locate_points_numba(pts[:, 0], pts[:, 1], rx, ry, starts)
    b = kernels.locate_points_numpy(pts[:, 0], pts[:, 1], rx, ry, starts)
    np.testing.assert_array_equal(a, b)
    ref = np.where(shapely.intersects_xy(poly.boundary, pts[:, 0], pts[:, 1]), kernels.BOUNDARY,
                   np.where(shapely.contains_xy(poly, pts[:, 0], pts[:, 1]), kernels.INSIDE, kernels.OUTSIDE))
    np.testing.assert_array_equal(a, ref)


def test_scatter_and_segment_max_agree(rng):
    src = rng.normal(size=(500, 7))
    idx = rng.integers(0, 40, 500)
    a = kernels.scatter_add_rows_numba(src, idx, 45)
    b = kernels.scatter_add_rows_numpy(src, idx, 45)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(a[40:], 0.0)

    vals = rng.normal(size=500)
    m1 = kernels.segment_max_numba(vals, idx, 45)
    m2 = kernels.segment_max_numpy(vals, idx, 45)
    np.testing.assert_array_equal(m1, m2)
    for s in range(40):
        if (idx == s).any():
            assert m1[s] == vals[idx == s].max()


def test_incircle_agrees(rng):
    tri = rng.uniform(0, 1, (2000, 3, 2))
    p = np.array([0.4, 0.6])
    np.testing.assert_array_equal(kernels.incircle_numba(tri, p), kernels.incircle_numpy(tri, p))
    unit = np.array([[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]])
    assert kernels.incircle_numpy(unit, [0.0, 0.0])[0]
    assert not kernels.incircle_numpy(unit, [0.0, -1.0])[0]  # on the circle is not strictly inside


@pytest.mark.parametrize("flag, expect", [("0", "numpy"), ("1", "numba")])
def test_environment_flag_selects_backend(flag, expect):
    env = {**os.environ, "GEOLINK_NUMBA": flag}
    res = subprocess.run([sys.executable, "-c", "from geolink._accel import backend; print(backend())"],
                         capture_output=True, text=True, env=env, check=True)
    assert res.stdout.strip() == expect


def test_numpy_backend_runs_the_same_model():
    # a forward pass under each backend gives the same embeddings to rounding
    script = (
        "import numpy as np\n"
        "from geolink.pipeline import SyntheticSceneSpec, synth_gen\n"
        "from geolink.model import ModelConfig, init_params\n"
        "from geolink.pipeline.commands import embed_samples\n"
        "cfg = ModelConfig(image_size=16, patch_size=4, d_patch=16, enc_depth=1, enc_heads=2, dec_dim=16,"
        " dec_depth=1, dec_heads=2, d_text=16, d_node=16, d_fusion=16, fusion_heads=2, d_proj=16, d_pe=16)\n"
        "s, _ = synth_gen(SyntheticSceneSpec(image_size=16, d_text=16), 2, 1)\n"
        "out = embed_samples(init_params(cfg, 0), cfg, s, fused=True)\n"
        "import sys; sys.stdout.buffer.write(np.concatenate([v.ravel() for v in out.values()]).tobytes())\n"
    )
    runs = {}
    for flag in ("0", "1"):
        res = subprocess.run([sys.executable, "-c", script], capture_output=True,
                             env={**os.environ, "GEOLINK_NUMBA": flag}, check=True)
        runs[flag] = np.frombuffer(res.stdout, dtype=np.float64)
    np.testing.assert_allclose(runs["0"], runs["1"], rtol=0, atol=1e-12)
