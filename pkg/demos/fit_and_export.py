"""Fit a factored LUT to one before/after pair and export the results.

Walks the core loop end to end: synthesize a graded target, fit the rank-R
residual by gradient descent, report the metrics, then write the model file,
a .cube export, and before/after previews.

Run:  python3 demos/fit_and_export.py [--out DIR] [--steps N]
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np

from lorlut import (
    FitConfig,
    LossWeights,
    apply_lut_model,
    fit_image_pair,
    save_image,
    write_cube,
    write_model,
)
from lorlut.lowrank import compose_lut


def synthetic_photo(height: int = 192, width: int = 256, seed: int = 0) -> np.ndarray:
    """Smooth gradients plus texture noise, enough tonal spread to fit against."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width]
    base = np.stack(
        [
            0.25 + 0.5 * x / (width - 1),
            0.2 + 0.6 * y / (height - 1),
            0.5 + 0.3 * np.sin(6.0 * x / width) * np.cos(4.0 * y / height),
        ],
        axis=-1,
    )
    return np.clip(base + rng.normal(0.0, 0.04, base.shape), 0.0, 1.0)


def grade(img: np.ndarray) -> np.ndarray:
    """A warm filmic look: per-channel gamma, mild channel mix, shadow lift."""
    mix = np.array(
        [
            [0.93, 0.05, 0.02],
            [0.03, 0.94, 0.03],
            [0.02, 0.04, 0.94],
        ]
    )
    toned = np.power(img, [0.85, 1.0, 1.15]) @ mix.T
    return np.clip(toned * 0.95 + 0.03, 0.0, 1.0)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).parent / "out")
    parser.add_argument("--steps", type=int, default=800)
    parser.add_argument("--rank", type=int, default=8)
    parser.add_argument("--grid", type=int, default=17)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    before = synthetic_photo()
    after = grade(before)
    print(f"fitting rank {args.rank} at grid {args.grid} for {args.steps} steps ...")

    config = FitConfig(
        steps=args.steps,
        rank=args.rank,
        grid_size=args.grid,
        rng_seed=0,
        weights=LossWeights(l1=1.0, tv=1e-6, l2=1e-6),
    )
    start = time.perf_counter()
    model, report = fit_image_pair(before, after, config)
    elapsed = time.perf_counter() - start

    print(f"done in {elapsed:.1f} s")
    print(f"final loss {report.final_loss:.6g}")
    print(f"PSNR {report.psnr:.2f} dB  SSIM {report.ssim:.4f}  deltaE00 {report.mean_de00:.3f}")

    model_path = args.out / "warm_look.lorlut"
    cube_path = args.out / "warm_look.cube"
    model_path.write_text(write_model(model, meta=report.as_json_dict()))
    cube_path.write_text(write_cube(compose_lut(model), title="warm look"))
    written = [model_path, cube_path]
    for name, img in (
        ("before.png", before),
        ("after_target.png", after),
        ("after_fitted.png", apply_lut_model(model, before)),
    ):
        save_image(args.out / name, img)
        written.append(args.out / name)

    for path in written:
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
