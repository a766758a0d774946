"""Compress a dense .cube LUT into separable components at several ranks.

Builds an analytic grade as a dense 33-grid lattice, then factors its
residual against the identity with alternating least squares, printing the
rank / parameter / error trade-off the factored form is designed around.

Run:  python3 demos/compress_cube.py [--out DIR]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from lorlut import (
    LorLutModel,
    cp_als_compress,
    dense_param_count,
    identity_lut,
    reconstruct_residual,
    residual_param_count,
    write_cube,
    write_model,
)


def dense_grade_lut(grid: int = 33) -> np.ndarray:
    """A cool cinematic look evaluated exactly on the lattice."""
    lut = identity_lut(grid)
    mix = np.array(
        [
            [0.92, 0.02, 0.06],
            [0.02, 0.95, 0.03],
            [0.05, 0.05, 0.90],
        ]
    )
    toned = np.power(lut, [1.1, 1.0, 0.9]) @ mix.T
    return np.clip(toned, 0.0, 1.0)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).parent / "out")
    parser.add_argument("--grid", type=int, default=33)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    dense = dense_grade_lut(args.grid)
    cube_path = args.out / "cool_look_dense.cube"
    cube_path.write_text(write_cube(dense, title="cool look"))
    print(f"wrote {cube_path}")

    residual = dense - identity_lut(args.grid)
    total = dense_param_count(args.grid)
    print(f"dense lattice holds {total} parameters\n")
    print(f"{'rank':>4}  {'params':>6}  {'share':>6}  {'rel error':>10}  sweeps")

    best = None
    for rank in (1, 2, 4, 8, 16):
        result = cp_als_compress(residual, rank, max_iters=200, rng_seed=0)
        params = residual_param_count(args.grid, rank)
        print(
            f"{rank:>4}  {params:>6}  {params / total:>6.1%}"
            f"  {result.relative_error:>10.2e}  {result.sweeps}"
        )
        if rank == 8:
            best = result

    model = LorLutModel(
        grid_size=args.grid, factors=best.factors, bases=[], alphas=np.zeros(0)
    )
    model_path = args.out / "cool_look_r8.lorlut"
    model_path.write_text(write_model(model))
    approx = np.clip(identity_lut(args.grid) + reconstruct_residual(best.factors), 0.0, 1.0)
    approx_path = args.out / "cool_look_r8.cube"
    approx_path.write_text(write_cube(approx, title="cool look rank 8"))
    print(f"\nwrote {model_path}")
    print(f"wrote {approx_path}")
    print(f"max lattice deviation at rank 8: {np.abs(approx - dense).max():.2e}")


if __name__ == "__main__":
    main()
