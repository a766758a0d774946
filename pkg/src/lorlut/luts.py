"""Explicit 3D LUT lattice: construction, interpolation kernels, fusion, image application.

A LUT is a float64 ndarray of shape (G, G, G, 3) indexed ``lut[i, j, k]`` where
i/j/k are the red/green/blue lattice indices.  Serialized forms (``.cube`` files,
flat entry lists) order entries with the red index varying fastest; use
:func:`flatten_entries` / :func:`unflatten_entries` to convert.

Input colors are clamped to [0, 1] before lattice lookup.  Outputs are left
unclamped unless the caller asks otherwise, so optimization code can see
gradients past the cube boundary.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

INTERP_KINDS = ("trilinear", "tetrahedral")

# Flat index of lattice point (i, j, k) is i*G*G + j*G + k; these name the
# per-axis strides used when gathering cell vertices.
_AXIS_R, _AXIS_G, _AXIS_B = 0, 1, 2


def identity_lut(grid_size: int) -> np.ndarray:
    """Build the identity LUT: entry (i, j, k) = (i, j, k) / (G - 1)."""
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    ramp = np.linspace(0.0, 1.0, grid_size)
    lut = np.empty((grid_size, grid_size, grid_size, 3))
    lut[..., 0] = ramp[:, None, None]
    lut[..., 1] = ramp[None, :, None]
    lut[..., 2] = ramp[None, None, :]
    return lut


def lut_grid_size(lut: np.ndarray) -> int:
    """Grid size G of a (G, G, G, 3) LUT array, validating the shape."""
    lut = np.asarray(lut)
    if lut.ndim != 4 or lut.shape[3] != 3 or len(set(lut.shape[:3])) != 1:
        raise ValueError(f"expected shape (G, G, G, 3), got {lut.shape}")
    if lut.shape[0] < 2:
        raise ValueError("LUT grid size must be >= 2")
    return lut.shape[0]


def validate_lut(lut: np.ndarray) -> np.ndarray:
    """Check shape and finiteness; returns the array as float64."""
    lut = np.asarray(lut, dtype=np.float64)
    lut_grid_size(lut)
    if not np.all(np.isfinite(lut)):
        raise ValueError("LUT contains non-finite entries")
    return lut


def flatten_entries(lut: np.ndarray) -> np.ndarray:
    """Entries as a (G**3, 3) array in red-fastest order (the .cube convention)."""
    g = lut_grid_size(lut)
    return np.ascontiguousarray(np.transpose(lut, (2, 1, 0, 3)).reshape(g**3, 3))


def unflatten_entries(entries: np.ndarray, grid_size: int) -> np.ndarray:
    """Inverse of :func:`flatten_entries`."""
    entries = np.asarray(entries, dtype=np.float64)
    if entries.shape != (grid_size**3, 3):
        raise ValueError(
            f"expected {grid_size**3} RGB entries, got shape {entries.shape}"
        )
    grid = entries.reshape(grid_size, grid_size, grid_size, 3)  # (k, j, i, ch)
    return np.ascontiguousarray(np.transpose(grid, (2, 1, 0, 3)))


def _cell_coords(lut: np.ndarray, colors: np.ndarray):
    """Clamp colors, locate their cells, and split into corner index + fraction.

    Returns (flat LUT view (G**3, 3), base flat index (N,), fractions (N, 3)).
    A component of exactly 1.0 lands in the last cell with fraction 1.0.
    """
    g = lut_grid_size(lut)
    c = np.clip(np.asarray(colors, dtype=np.float64), 0.0, 1.0)
    x = c * (g - 1)
    i0 = np.minimum(x.astype(np.int64), g - 2)
    f = x - i0
    base = (i0[..., 0] * g + i0[..., 1]) * g + i0[..., 2]
    flat = np.ascontiguousarray(lut, dtype=np.float64).reshape(g**3, 3)
    return flat, base, f


def sample_trilinear(lut: np.ndarray, colors: np.ndarray) -> np.ndarray:
    """Interpolate colors through the LUT as the weighted sum of 8 cell vertices.

    ``colors`` is any (..., 3) array; components are clamped to [0, 1] first.
    Exact at lattice points and on the identity LUT.
    """
    colors = np.asarray(colors, dtype=np.float64)
    shape = colors.shape
    flat, base, f = _cell_coords(lut, colors.reshape(-1, 3))
    g = lut.shape[0]
    strides = (g * g, g, 1)

    fr, fg, fb = f[:, 0], f[:, 1], f[:, 2]
    out = np.zeros((base.size, 3))
    wsum = np.zeros(base.size) if __debug__ else None
    for di in (0, 1):
        wr = fr if di else 1.0 - fr
        for dj in (0, 1):
            wg = fg if dj else 1.0 - fg
            for dk in (0, 1):
                wb = fb if dk else 1.0 - fb
                w = wr * wg * wb
                idx = base + di * strides[0] + dj * strides[1] + dk * strides[2]
                out += w[:, None] * flat[idx]
                if __debug__:
                    assert np.all(w >= 0.0)
                    wsum += w
    if __debug__:
        assert np.allclose(wsum, 1.0, atol=1e-12)
    return out.reshape(shape)


def splat_trilinear(
    grid_size: int, colors: np.ndarray, values: np.ndarray
) -> np.ndarray:
    """Adjoint of sample_trilinear: accumulate values onto the 8 cell vertices.

    For every LUT L, <splat(c, v), L> equals <v, sample_trilinear(L, c)>,
    which makes this the exact lattice gradient of the interpolation.
    """
    g = int(grid_size)
    if g < 2:
        raise ValueError(f"grid size must be >= 2, got {g}")
    colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    values = np.asarray(values, dtype=np.float64).reshape(-1, 3)
    if colors.shape != values.shape:
        raise ValueError("colors and values must pair up one to one")

    c = np.clip(colors, 0.0, 1.0)
    x = c * (g - 1)
    i0 = np.minimum(x.astype(np.int64), g - 2)
    f = x - i0
    base = (i0[:, 0] * g + i0[:, 1]) * g + i0[:, 2]
    strides = (g * g, g, 1)

    fr, fg, fb = f[:, 0], f[:, 1], f[:, 2]
    acc = np.zeros((g**3, 3))
    for di in (0, 1):
        wr = fr if di else 1.0 - fr
        for dj in (0, 1):
            wg = fg if dj else 1.0 - fg
            for dk in (0, 1):
                wb = fb if dk else 1.0 - fb
                w = wr * wg * wb
                idx = base + di * strides[0] + dj * strides[1] + dk * strides[2]
                for ch in range(3):
                    acc[:, ch] += np.bincount(
                        idx, weights=w * values[:, ch], minlength=g**3
                    )
    return acc.reshape(g, g, g, 3)


# (second-vertex axis, third-vertex axis) for each descending order of the
# fractional coordinates; ties resolved with priority red > green > blue.
_TETRA_ORDERS = (
    (_AXIS_R, _AXIS_G),  # fr >= fg >= fb
    (_AXIS_R, _AXIS_B),  # fr >= fb > fg
    (_AXIS_B, _AXIS_R),  # fb > fr >= fg
    (_AXIS_G, _AXIS_R),  # fg > fr >= fb
    (_AXIS_G, _AXIS_B),  # fg >= fb > fr
    (_AXIS_B, _AXIS_G),  # fb > fg > fr
)


def sample_tetrahedral(lut: np.ndarray, colors: np.ndarray) -> np.ndarray:
    """Interpolate through the LUT with the conventional 6-tetrahedron cell split.

    Each cell is cut into six tetrahedra sharing the main diagonal; the active
    one is picked by the descending order of the fractional coordinates.  Exact
    at lattice points; linear along each cell's main diagonal.
    """
    colors = np.asarray(colors, dtype=np.float64)
    shape = colors.shape
    flat, base, f = _cell_coords(lut, colors.reshape(-1, 3))
    g = lut.shape[0]
    strides = np.array([g * g, g, 1])

    fr, fg, fb = f[:, 0], f[:, 1], f[:, 2]
    a = fr >= fg
    b = fg >= fb
    c = fr >= fb
    masks = (
        a & b,
        a & ~b & c,
        a & ~b & ~c,
        ~a & b & c,
        ~a & b & ~c,
        ~a & ~b,
    )

    n = base.size
    f1 = np.empty(n)
    f2 = np.empty(n)
    f3 = np.empty(n)
    off1 = np.empty(n, dtype=np.int64)
    off2 = np.empty(n, dtype=np.int64)
    fcols = (fr, fg, fb)
    for mask, (ax1, ax2) in zip(masks, _TETRA_ORDERS):
        ax3 = 3 - ax1 - ax2
        f1[mask] = fcols[ax1][mask]
        f2[mask] = fcols[ax2][mask]
        f3[mask] = fcols[ax3][mask]
        off1[mask] = strides[ax1]
        off2[mask] = strides[ax1] + strides[ax2]

    diag = strides.sum()
    out = (
        (1.0 - f1)[:, None] * flat[base]
        + (f1 - f2)[:, None] * flat[base + off1]
        + (f2 - f3)[:, None] * flat[base + off2]
        + f3[:, None] * flat[base + diag]
    )
    return out.reshape(shape)


_SAMPLERS = {"trilinear": sample_trilinear, "tetrahedral": sample_tetrahedral}


def _thread_count() -> int:
    """Worker count for image application, from LORLUT_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("LORLUT_THREADS", "1")))
    except ValueError:
        return 1


def apply_lut(
    lut: np.ndarray,
    image: np.ndarray,
    kind: str = "trilinear",
    clamp_output: bool = True,
) -> np.ndarray:
    """Map every pixel of an (H, W, 3) image through the LUT.

    Per-pixel results are independent, so the optional row-parallel path
    (LORLUT_THREADS > 1) is bit-identical to the sequential one.
    """
    if kind not in _SAMPLERS:
        raise ValueError(f"unknown interpolation kind {kind!r}")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected image shape (H, W, 3), got {image.shape}")
    sampler = _SAMPLERS[kind]

    workers = _thread_count()
    if workers > 1 and image.shape[0] >= 2 * workers:
        chunks = np.array_split(image, workers, axis=0)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda rows: sampler(lut, rows), chunks))
        out = np.concatenate(parts, axis=0)
    else:
        out = sampler(lut, image)
    if clamp_output:
        np.clip(out, 0.0, 1.0, out=out)
    return out


def fuse(bases: list[np.ndarray], alphas: np.ndarray) -> np.ndarray:
    """Entrywise weighted sum of basis LUTs sharing one grid size.

    Weights are unconstrained reals; nothing forces them to be convex or to
    sum to one.
    """
    if len(bases) == 0:
        raise ValueError("fuse requires at least one basis LUT")
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.shape != (len(bases),):
        raise ValueError(
            f"expected {len(bases)} fusion weights, got shape {alphas.shape}"
        )
    g = lut_grid_size(bases[0])
    for k, basis in enumerate(bases[1:], start=1):
        if lut_grid_size(basis) != g:
            raise ValueError(
                f"basis {k} grid size {basis.shape[0]} != basis 0 grid size {g}"
            )
    return np.tensordot(alphas, np.stack(bases), axes=1)
