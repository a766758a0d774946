"""Rank-R separable residual over the LUT lattice and its composition with bases.

The residual is a sum of R rank-1 terms, each the outer product of three
length-G axis curves and a length-3 color coefficient.  Composing a model
materializes the full (G, G, G, 3) tensor and adds it to the fused (or
identity) base, so downstream interpolation cost is identical to a plain LUT.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .luts import fuse, identity_lut, lut_grid_size


@dataclass
class CpFactors:
    """Axis factors and color coefficients of the rank-R residual.

    us/vs/ws have shape (R, G) (red/green/blue axis curves), cs has shape
    (R, 3).  R may be zero, in which case the residual is the zero tensor.
    """

    us: np.ndarray
    vs: np.ndarray
    ws: np.ndarray
    cs: np.ndarray

    def __post_init__(self) -> None:
        self.us = np.atleast_2d(np.asarray(self.us, dtype=np.float64))
        self.vs = np.atleast_2d(np.asarray(self.vs, dtype=np.float64))
        self.ws = np.atleast_2d(np.asarray(self.ws, dtype=np.float64))
        self.cs = np.atleast_2d(np.asarray(self.cs, dtype=np.float64))
        r, g = self.us.shape
        if self.vs.shape != (r, g) or self.ws.shape != (r, g):
            raise ValueError("axis factor shapes disagree")
        if self.cs.shape != (r, 3):
            raise ValueError(f"expected color coefficients ({r}, 3), got {self.cs.shape}")
        if r > 0 and g < 2:
            raise ValueError("factor grid size must be >= 2")
        for name, arr in (("us", self.us), ("vs", self.vs), ("ws", self.ws), ("cs", self.cs)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")

    @property
    def rank(self) -> int:
        return self.us.shape[0]

    @property
    def grid_size(self) -> int:
        return self.us.shape[1]

    @classmethod
    def zeros(cls, rank: int, grid_size: int) -> "CpFactors":
        return cls(
            us=np.zeros((rank, grid_size)),
            vs=np.zeros((rank, grid_size)),
            ws=np.zeros((rank, grid_size)),
            cs=np.zeros((rank, 3)),
        )

    @classmethod
    def empty(cls, grid_size: int) -> "CpFactors":
        return cls.zeros(0, grid_size)


def default_scales(rank: int) -> np.ndarray:
    """The neutral per-component scales: all ones."""
    return np.ones(rank)


def _check_scales(scales: np.ndarray | None, rank: int) -> np.ndarray:
    if scales is None:
        return default_scales(rank)
    scales = np.asarray(scales, dtype=np.float64).reshape(-1)
    if scales.shape != (rank,):
        raise ValueError(f"expected {rank} component scales, got {scales.size}")
    if not np.all(np.isfinite(scales)):
        raise ValueError("non-finite component scales")
    return scales


def reconstruct_residual(
    factors: CpFactors, scales: np.ndarray | None = None
) -> np.ndarray:
    """Materialize the residual tensor (G, G, G, 3), each component times its scale."""
    scales = _check_scales(scales, factors.rank)
    g = factors.grid_size
    if factors.rank == 0:
        return np.zeros((g, g, g, 3))
    return np.einsum(
        "r,rc,ri,rj,rk->ijkc", scales, factors.cs, factors.us, factors.vs, factors.ws,
        optimize=True,
    )


@dataclass
class LorLutModel:
    """K basis LUTs with fusion weights plus the rank-R residual factors.

    With K = 0 the implicit base is the identity LUT, so an all-zero residual
    composes to an exact identity transform.
    """

    grid_size: int
    factors: CpFactors
    bases: list[np.ndarray] = field(default_factory=list)
    alphas: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        self.alphas = np.asarray(self.alphas, dtype=np.float64).reshape(-1)
        if len(self.bases) != self.alphas.size:
            raise ValueError(
                f"{len(self.bases)} bases but {self.alphas.size} fusion weights"
            )
        self.bases = [np.asarray(b, dtype=np.float64) for b in self.bases]
        for k, basis in enumerate(self.bases):
            if lut_grid_size(basis) != self.grid_size:
                raise ValueError(f"basis {k} grid size != model grid size {self.grid_size}")
        if self.factors.rank > 0 and self.factors.grid_size != self.grid_size:
            raise ValueError("factor grid size != model grid size")
        if not np.all(np.isfinite(self.alphas)):
            raise ValueError("non-finite fusion weights")

    @property
    def num_bases(self) -> int:
        return len(self.bases)

    @property
    def rank(self) -> int:
        return self.factors.rank

    @classmethod
    def identity(cls, grid_size: int, rank: int = 0) -> "LorLutModel":
        """K=0 model whose composition is the identity LUT (zero factors)."""
        return cls(grid_size=grid_size, factors=CpFactors.zeros(rank, grid_size))

    def base_lut(self) -> np.ndarray:
        """The fused base (identity when K = 0)."""
        if not self.bases:
            return identity_lut(self.grid_size)
        return fuse(self.bases, self.alphas)


def compose_lut(model: LorLutModel, scales: np.ndarray | None = None) -> np.ndarray:
    """Base plus scaled residual, as a dense (G, G, G, 3) LUT."""
    return model.base_lut() + reconstruct_residual(model.factors, scales)


def residual_param_count(grid_size: int, rank: int) -> int:
    """Parameters of the rank-R residual: 3*G*R axis values + 3*R coefficients."""
    if grid_size < 2 or rank < 0:
        raise ValueError("require grid_size >= 2 and rank >= 0")
    return 3 * grid_size * rank + 3 * rank

def dense_param_count(grid_size: int) -> int:
    """Parameters of one dense LUT (the comparison point for the residual)."""
    return 3 * grid_size**3


# Fixed parameter count of the two convolutional encoder layers in each of the
# original predictor networks; only enters the bookkeeping below.
_ENCODER_PARAMS = 5088


@dataclass(frozen=True)
class ParamBreakdown:
    weight_predictor: int
    residual_predictor: int
    basis_luts: int

    @property
    def total(self) -> int:
        return self.weight_predictor + self.residual_predictor + self.basis_luts


def total_param_count(grid_size: int, num_bases: int, rank: int) -> ParamBreakdown:
    """Learnable-parameter bookkeeping for a full model configuration.

    weight predictor: encoder + a 32->K head (32K weights + K biases);
    residual predictor: encoder + three 32->RG axis heads and one 32->3R
    color head, together 99R(G+1); basis LUTs: 3KG^3 when K > 0.
    """
    if grid_size < 2 or num_bases < 0 or rank < 0:
        raise ValueError("require grid_size >= 2, num_bases >= 0, rank >= 0")
    weight_predictor = _ENCODER_PARAMS + 33 * num_bases
    residual_predictor = _ENCODER_PARAMS + 99 * rank * (grid_size + 1)
    basis_luts = 3 * num_bases * grid_size**3
    return ParamBreakdown(weight_predictor, residual_predictor, basis_luts)


def component_magnitude(factors: CpFactors, r: int) -> float:
    """Frobenius norm of one rank-1 term: ||c|| * ||u|| * ||v|| * ||w||."""
    if not 0 <= r < factors.rank:
        raise IndexError(f"component {r} out of range for rank {factors.rank}")
    return float(
        np.linalg.norm(factors.cs[r])
        * np.linalg.norm(factors.us[r])
        * np.linalg.norm(factors.vs[r])
        * np.linalg.norm(factors.ws[r])
    )


def component_curves(factors: CpFactors, r: int) -> dict:
    """Plot-ready data for component r: axis curves, coefficient, magnitude."""
    if not 0 <= r < factors.rank:
        raise IndexError(f"component {r} out of range for rank {factors.rank}")
    return {
        "u": factors.us[r].copy(),
        "v": factors.vs[r].copy(),
        "w": factors.ws[r].copy(),
        "c": factors.cs[r].copy(),
        "magnitude": component_magnitude(factors, r),
    }
