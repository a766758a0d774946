"""Inspect the rank-1 components of a fitted model and rescale them.

Each component is a separable "color brush": a color direction modulated by
one curve per lattice axis.  This walkthrough fits a small model, prints the
per-component geometry, then re-renders the image with individual components
muted or boosted, which is exactly what the viewer's sliders do.

Run:  python3 demos/explore_components.py [--out DIR]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from lorlut import (
    FitConfig,
    LossWeights,
    apply_lut_model,
    component_curves,
    default_scales,
    fit_image_pair,
    save_image,
)


def synthetic_photo(height: int = 160, width: int = 240, seed: int = 3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width]
    base = np.stack(
        [
            0.2 + 0.6 * np.cos(3.0 * x / width) ** 2,
            0.3 + 0.5 * y / (height - 1),
            0.25 + 0.5 * x / (width - 1),
        ],
        axis=-1,
    )
    return np.clip(base + rng.normal(0.0, 0.05, base.shape), 0.0, 1.0)


def split_tone(img: np.ndarray) -> np.ndarray:
    """Teal shadows, amber highlights."""
    luma = img.mean(axis=-1, keepdims=True)
    shadows = np.array([-0.06, 0.02, 0.05])
    highlights = np.array([0.07, 0.02, -0.06])
    return np.clip(img + (1.0 - luma) * shadows + luma * highlights, 0.0, 1.0)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).parent / "out")
    parser.add_argument("--rank", type=int, default=4)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    before = synthetic_photo()
    after = split_tone(before)
    config = FitConfig(
        steps=600,
        rank=args.rank,
        grid_size=9,
        rng_seed=0,
        weights=LossWeights(l1=1.0, tv=1e-6, l2=1e-6),
    )
    model, report = fit_image_pair(before, after, config)
    print(f"fitted rank {args.rank}: PSNR {report.psnr:.2f} dB\n")

    print(f"{'component':>9}  {'magnitude':>9}  color direction")
    for r in range(model.rank):
        curves = component_curves(model.factors, r)
        c = curves["c"]
        direction = c / (np.linalg.norm(c) or 1.0)
        print(
            f"{r:>9}  {curves['magnitude']:>9.4f}"
            f"  ({direction[0]:+.2f}, {direction[1]:+.2f}, {direction[2]:+.2f})"
        )

    save_image(args.out / "tone_before.png", before)
    save_image(args.out / "tone_full.png", apply_lut_model(model, before))

    # Solo the strongest component, then render a boosted variant of it.
    magnitudes = [component_curves(model.factors, r)["magnitude"] for r in range(model.rank)]
    strongest = int(np.argmax(magnitudes))
    solo = np.zeros(model.rank)
    solo[strongest] = 1.0
    save_image(args.out / "tone_solo.png", apply_lut_model(model, before, scales=solo))

    boosted = default_scales(model.rank)
    boosted[strongest] = 2.5
    save_image(args.out / "tone_boosted.png", apply_lut_model(model, before, scales=boosted))

    print(f"\nsoloed and boosted component {strongest}")
    for name in ("tone_before", "tone_full", "tone_solo", "tone_boosted"):
        print(f"wrote {args.out / (name + '.png')}")


if __name__ == "__main__":
    main()
