"""LUT lattice, interpolation kernels, and their adjoint."""

import os

import numpy as np
import pytest

from lorlut import (
    apply_lut,
    flatten_entries,
    fuse,
    identity_lut,
    lut_grid_size,
    sample_tetrahedral,
    sample_trilinear,
    splat_trilinear,
    unflatten_entries,
)


def literal_trilinear(lut: np.ndarray, color: np.ndarray) -> np.ndarray:
    """Scalar eight-term weighted vertex sum, written without vectorization."""
    g = lut.shape[0]
    out = np.zeros(3)
    x = np.clip(color, 0.0, 1.0) * (g - 1)
    i0 = [min(int(x[a]), g - 2) for a in range(3)]
    f = [x[a] - i0[a] for a in range(3)]
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                w = (
                    (f[0] if di else 1 - f[0])
                    * (f[1] if dj else 1 - f[1])
                    * (f[2] if dk else 1 - f[2])
                )
                out += w * lut[i0[0] + di, i0[1] + dj, i0[2] + dk]
    return out


def test_identity_lattice_values():
    lut = identity_lut(5)
    for idx in ((0, 0, 0), (4, 4, 4), (1, 2, 3)):
        np.testing.assert_allclose(lut[idx], np.array(idx) / 4.0)


def test_identity_rejects_small_grid():
    with pytest.raises(ValueError):
        identity_lut(1)


def test_lut_grid_size_validates_shape():
    assert lut_grid_size(identity_lut(7)) == 7
    with pytest.raises(ValueError):
        lut_grid_size(np.zeros((3, 3, 2, 3)))
    with pytest.raises(ValueError):
        lut_grid_size(np.zeros((3, 3, 3)))


def test_flatten_is_red_fastest():
    entries = flatten_entries(identity_lut(2))
    np.testing.assert_array_equal(entries[0], [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(entries[1], [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(entries[2], [0.0, 1.0, 0.0])
    np.testing.assert_array_equal(entries[4], [0.0, 0.0, 1.0])
    np.testing.assert_array_equal(entries[7], [1.0, 1.0, 1.0])


def test_flatten_unflatten_roundtrip():
    rng = np.random.default_rng(0)
    lut = rng.random((6, 6, 6, 3))
    np.testing.assert_array_equal(unflatten_entries(flatten_entries(lut), 6), lut)


def test_trilinear_matches_literal_oracle():
    rng = np.random.default_rng(1)
    for g in (2, 3, 5, 9):
        lut = rng.random((g, g, g, 3))
        colors = rng.random((200, 3))
        got = sample_trilinear(lut, colors)
        want = np.array([literal_trilinear(lut, c) for c in colors])
        assert np.abs(got - want).max() <= 1e-12


def test_trilinear_exact_on_lattice_points():
    rng = np.random.default_rng(2)
    g = 5
    lut = rng.random((g, g, g, 3))
    idx = rng.integers(0, g, size=(50, 3))
    got = sample_trilinear(lut, idx / (g - 1))
    want = lut[idx[:, 0], idx[:, 1], idx[:, 2]]
    np.testing.assert_allclose(got, want, atol=1e-13)


def test_trilinear_identity_reproduces_colors():
    rng = np.random.default_rng(3)
    colors = rng.random((500, 3))
    got = sample_trilinear(identity_lut(33), colors)
    assert np.abs(got - colors).max() <= 1e-7


def test_trilinear_clamps_out_of_range_input():
    lut = identity_lut(9)
    got = sample_trilinear(lut, np.array([[-0.5, 1.5, 0.25]]))
    np.testing.assert_allclose(got, [[0.0, 1.0, 0.25]], atol=1e-13)


def test_tetrahedral_exact_on_lattice_points():
    rng = np.random.default_rng(4)
    g = 4
    lut = rng.random((g, g, g, 3))
    idx = rng.integers(0, g, size=(50, 3))
    got = sample_tetrahedral(lut, idx / (g - 1))
    want = lut[idx[:, 0], idx[:, 1], idx[:, 2]]
    np.testing.assert_allclose(got, want, atol=1e-13)


def test_tetrahedral_identity_reproduces_colors():
    rng = np.random.default_rng(5)
    colors = rng.random((500, 3))
    got = sample_tetrahedral(identity_lut(17), colors)
    assert np.abs(got - colors).max() <= 1e-7


def test_both_kernels_exact_for_linear_transforms():
    # A LUT sampled from an affine map is reproduced exactly by either kernel.
    rng = np.random.default_rng(6)
    a = rng.normal(0.0, 0.2, (3, 3))
    b = rng.normal(0.3, 0.1, 3)
    g = 7
    grid = identity_lut(g)
    lut = grid @ a.T + b
    colors = rng.random((300, 3))
    want = colors @ a.T + b
    assert np.abs(sample_trilinear(lut, colors) - want).max() <= 1e-12
    assert np.abs(sample_tetrahedral(lut, colors) - want).max() <= 1e-12


def test_tetrahedral_linear_along_cell_diagonal():
    # Every cell diagonal lies on a tetra edge, so the result is linear in t.
    rng = np.random.default_rng(7)
    lut = rng.random((3, 3, 3, 3))
    base = np.array([0.0, 0.5, 0.0])
    span = 0.5
    ts = np.array([0.0, 0.2, 0.5, 0.8, 1.0])
    pts = base + ts[:, None] * span
    vals = sample_tetrahedral(lut, pts)
    ends = vals[0] + ts[:, None] * (vals[-1] - vals[0])
    np.testing.assert_allclose(vals, ends, atol=1e-12)


def test_tetrahedral_differs_from_trilinear_off_diagonal():
    rng = np.random.default_rng(8)
    lut = rng.random((2, 2, 2, 3))
    color = np.array([[0.7, 0.4, 0.15]])
    tri = sample_trilinear(lut, color)
    tet = sample_tetrahedral(lut, color)
    assert np.abs(tri - tet).max() > 1e-6


def test_tetrahedral_tie_prefers_red_then_green():
    # With fr == fg > fb the red-major tetra is used: only V000, V110, V111
    # can contribute, and the V100 weight is exactly zero.
    lut = np.zeros((2, 2, 2, 3))
    lut[1, 0, 0] = 1.0
    got = sample_tetrahedral(lut, np.array([[0.3, 0.3, 0.1]]))
    np.testing.assert_allclose(got, 0.0, atol=1e-15)
    lut2 = np.zeros((2, 2, 2, 3))
    lut2[1, 1, 0] = 1.0
    got2 = sample_tetrahedral(lut2, np.array([[0.3, 0.3, 0.1]]))
    np.testing.assert_allclose(got2[0], np.full(3, 0.2), atol=1e-12)


def test_splat_is_adjoint_of_sample():
    rng = np.random.default_rng(9)
    g = 5
    lut = rng.random((g, g, g, 3))
    colors = rng.random((120, 3))
    values = rng.normal(size=(120, 3))
    lhs = np.sum(splat_trilinear(g, colors, values) * lut)
    rhs = np.sum(values * sample_trilinear(lut, colors))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_splat_rejects_mismatched_inputs():
    with pytest.raises(ValueError):
        splat_trilinear(4, np.zeros((3, 3)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        splat_trilinear(1, np.zeros((2, 3)), np.zeros((2, 3)))


def test_apply_lut_clamps_output_only_when_asked():
    lut = identity_lut(3) * 2.0 - 0.5
    img = np.full((4, 4, 3), 0.9)
    clamped = apply_lut(lut, img)
    raw = apply_lut(lut, img, clamp_output=False)
    assert clamped.max() <= 1.0
    assert raw.max() > 1.0
    np.testing.assert_array_equal(clamped, np.clip(raw, 0.0, 1.0))


def test_apply_lut_validates_image_shape():
    with pytest.raises(ValueError):
        apply_lut(identity_lut(3), np.zeros((4, 4)))
    with pytest.raises(ValueError):
        apply_lut(identity_lut(3), np.zeros((4, 4, 4)))


def test_apply_lut_rejects_unknown_kind():
    with pytest.raises(ValueError):
        apply_lut(identity_lut(3), np.zeros((2, 2, 3)), kind="cubic")


def test_apply_lut_threaded_is_bit_identical(monkeypatch):
    rng = np.random.default_rng(10)
    lut = rng.random((9, 9, 9, 3))
    img = rng.random((37, 23, 3))
    monkeypatch.delenv("LORLUT_THREADS", raising=False)
    single = apply_lut(lut, img)
    monkeypatch.setenv("LORLUT_THREADS", "4")
    threaded = apply_lut(lut, img)
    np.testing.assert_array_equal(single, threaded)


def test_fuse_single_basis_identity_weight():
    rng = np.random.default_rng(11)
    basis = rng.random((5, 5, 5, 3))
    np.testing.assert_array_equal(fuse([basis], np.array([1.0])), basis)


def test_fuse_weighted_sum():
    rng = np.random.default_rng(12)
    bases = [rng.random((4, 4, 4, 3)) for _ in range(3)]
    alphas = np.array([0.2, -0.5, 1.1])
    want = sum(a * b for a, b in zip(alphas, bases))
    np.testing.assert_allclose(fuse(bases, alphas), want, atol=1e-14)


def test_fuse_validates_inputs():
    with pytest.raises(ValueError):
        fuse([], np.zeros(0))
    with pytest.raises(ValueError):
        fuse([identity_lut(3)], np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        fuse([identity_lut(3), identity_lut(4)], np.array([1.0, 1.0]))
