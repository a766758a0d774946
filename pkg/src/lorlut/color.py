"""Color conversion and the image quality metrics used by the loss and evaluation.

All functions are vectorized over trailing-channel arrays: colors are (..., 3)
float arrays, images are (H, W, 3) in [0, 1].  PSNR uses peak 1.0 and returns
``math.inf`` for identical inputs; SSIM follows the de-facto reference settings
(11x11 Gaussian window, sigma 1.5, K1=0.01, K2=0.03, dynamic range 1.0).
"""

from __future__ import annotations

import math

import numpy as np

# Linear sRGB -> XYZ (D65, 2 degree observer), derived from the sRGB primaries.
# The white point is taken as the matrix row sums so that RGB (1,1,1) maps to
# exactly L=100, a=b=0.
_SRGB_TO_XYZ = np.array(
    [
        [0.4123907992659595, 0.35758433938387796, 0.18048078840183429],
        [0.21263900587151036, 0.7151686787677559, 0.07219231536073371],
        [0.01933081871559185, 0.11919477979462599, 0.9505321522496607],
    ]
)
_WHITE_XYZ = _SRGB_TO_XYZ.sum(axis=1)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def srgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert sRGB (..., 3) in [0, 1] to CIELAB (D65); out-of-range input is clamped."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValueError(f"expected trailing channel axis of size 3, got {rgb.shape}")
    if not np.all(np.isfinite(rgb)):
        raise ValueError("non-finite RGB components")
    c = np.clip(rgb, 0.0, 1.0)

    linear = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _WHITE_XYZ

    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]

    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    return lab


def delta_e00(lab1: np.ndarray, lab2: np.ndarray) -> np.ndarray:
    """CIEDE2000 color difference between Lab arrays (..., 3), hue rotation included.

    Symmetric, non-negative, zero exactly on identical inputs.  Scalar inputs
    give a scalar; arrays broadcast elementwise.
    """
    lab1 = np.asarray(lab1, dtype=np.float64)
    lab2 = np.asarray(lab2, dtype=np.float64)
    if not (np.all(np.isfinite(lab1)) and np.all(np.isfinite(lab2))):
        raise ValueError("non-finite Lab components")
    l1, a1, b1 = lab1[..., 0], lab1[..., 1], lab1[..., 2]
    l2, a2, b2 = lab2[..., 0], lab2[..., 1], lab2[..., 2]

    c1 = np.hypot(a1, b1)
    c2 = np.hypot(a2, b2)
    cbar = 0.5 * (c1 + c2)
    c7 = cbar**7
    g = 0.5 * (1.0 - np.sqrt(c7 / (c7 + 25.0**7)))
    a1p = (1.0 + g) * a1
    a2p = (1.0 + g) * a2
    c1p = np.hypot(a1p, b1)
    c2p = np.hypot(a2p, b2)

    h1p = np.degrees(np.arctan2(b1, a1p)) % 360.0
    h2p = np.degrees(np.arctan2(b2, a2p)) % 360.0
    h1p = np.where((a1p == 0) & (b1 == 0), 0.0, h1p)
    h2p = np.where((a2p == 0) & (b2 == 0), 0.0, h2p)

    dl = l2 - l1
    dc = c2p - c1p
    achromatic = c1p * c2p == 0
    dh = h2p - h1p
    dh = np.where(dh > 180.0, dh - 360.0, dh)
    dh = np.where(dh < -180.0, dh + 360.0, dh)
    dh = np.where(achromatic, 0.0, dh)
    dhh = 2.0 * np.sqrt(c1p * c2p) * np.sin(np.radians(0.5 * dh))

    lbar = 0.5 * (l1 + l2)
    cbarp = 0.5 * (c1p + c2p)
    hsum = h1p + h2p
    habs = np.abs(h1p - h2p)
    hbar = np.where(habs <= 180.0, 0.5 * hsum,
                    np.where(hsum < 360.0, 0.5 * (hsum + 360.0), 0.5 * (hsum - 360.0)))
    hbar = np.where(achromatic, hsum, hbar)

    t = (
        1.0
        - 0.17 * np.cos(np.radians(hbar - 30.0))
        + 0.24 * np.cos(np.radians(2.0 * hbar))
        + 0.32 * np.cos(np.radians(3.0 * hbar + 6.0))
        - 0.20 * np.cos(np.radians(4.0 * hbar - 63.0))
    )
    dtheta = 30.0 * np.exp(-(((hbar - 275.0) / 25.0) ** 2))
    cbarp7 = cbarp**7
    rc = 2.0 * np.sqrt(cbarp7 / (cbarp7 + 25.0**7))
    lm50 = (lbar - 50.0) ** 2
    sl = 1.0 + 0.015 * lm50 / np.sqrt(20.0 + lm50)
    sc = 1.0 + 0.045 * cbarp
    sh = 1.0 + 0.015 * cbarp * t
    rt = -np.sin(np.radians(2.0 * dtheta)) * rc

    tl = dl / sl
    tc = dc / sc
    th = dhh / sh
    return np.sqrt(tl**2 + tc**2 + th**2 + rt * tc * th)


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB with peak 1.0 over all pixels and channels; inf when identical."""
    a, b = _check_same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    r = size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable valid-mode 2D correlation of an (H, W) array."""
    win = kernel.size
    rows = np.lib.stride_tricks.sliding_window_view(img, win, axis=0) @ kernel
    return np.lib.stride_tricks.sliding_window_view(rows, win, axis=1) @ kernel


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM over a Gaussian window, per channel, averaged over channels."""
    a, b = _check_same_shape(a, b)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"expected image shape (H, W, 3), got {a.shape}")
    if min(a.shape[0], a.shape[1]) < SSIM_WINDOW:
        raise ValueError(
            f"image {a.shape[1]}x{a.shape[0]} smaller than the "
            f"{SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )
    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    c1 = 0.01**2
    c2 = 0.03**2

    per_channel = []
    for ch in range(3):
        x = a[..., ch]
        y = b[..., ch]
        mx = _filter_valid(x, kernel)
        my = _filter_valid(y, kernel)
        vx = _filter_valid(x * x, kernel) - mx * mx
        vy = _filter_valid(y * y, kernel) - my * my
        cov = _filter_valid(x * y, kernel) - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
        den = (mx * mx + my * my + c1) * (vx + vy + c2)
        per_channel.append(float(np.mean(num / den)))
    return float(np.mean(per_channel))


def mean_delta_e00(a: np.ndarray, b: np.ndarray) -> float:
    """Per-pixel CIEDE2000 after sRGB->Lab conversion, averaged over all pixels."""
    a, b = _check_same_shape(a, b)
    return float(np.mean(delta_e00(srgb_to_lab(a), srgb_to_lab(b))))
