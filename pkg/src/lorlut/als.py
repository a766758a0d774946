"""Alternating least squares for fitting separable factors to a dense residual.

Treats the residual as a 4-way tensor (three lattice axes plus the channel
axis of size 3) and solves each factor block in turn against the others.
Used to compress existing dense LUTs into the factored form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lowrank import CpFactors

_RIDGE = 1e-10


@dataclass
class CpAlsResult:
    factors: CpFactors
    error_trace: list[float]
    relative_error: float
    sweeps: int
    converged: bool


def _unfold(tensor: np.ndarray, mode: int) -> np.ndarray:
    return np.moveaxis(tensor, mode, 0).reshape(tensor.shape[mode], -1)


def _khatri_rao(mats: list[np.ndarray]) -> np.ndarray:
    """Column-wise Kronecker product, first matrix varying slowest."""
    rank = mats[0].shape[1]
    out = mats[0]
    for m in mats[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, rank)
    return out


def _reconstruct(mats: list[np.ndarray]) -> np.ndarray:
    return np.einsum(
        "ir,jr,kr,cr->ijkc", mats[0], mats[1], mats[2], mats[3], optimize=True
    )


def _svd_init(
    tensor: np.ndarray, rank: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Leading left singular vectors per mode, random fill when rank exceeds them.

    A small seeded perturbation is added on top: on exactly axis-separable
    tensors (near-neutral LUT residuals, for instance) the pure singular
    vectors can start orthogonal to every needed update direction, which
    stalls the sweeps at a zero reconstruction.
    """
    mats = []
    for mode in range(4):
        unfolding = _unfold(tensor, mode)
        dim = unfolding.shape[0]
        u, _, _ = np.linalg.svd(unfolding, full_matrices=False)
        take = min(rank, u.shape[1])
        mat = np.empty((dim, rank))
        mat[:, :take] = u[:, :take]
        if take < rank:
            mat[:, take:] = rng.normal(0.0, 1.0 / np.sqrt(dim), (dim, rank - take))
        mat += rng.normal(0.0, 0.05 / np.sqrt(dim), mat.shape)
        mats.append(mat)
    return mats


def _normalize(mats: list[np.ndarray]) -> None:
    """Rescale the axis factors to unit norm, pushing magnitudes into the colors."""
    for mode in range(3):
        norms = np.linalg.norm(mats[mode], axis=0)
        norms = np.where(norms > 0.0, norms, 1.0)
        mats[mode] /= norms
        mats[3] *= norms


def cp_als_compress(
    dense: np.ndarray,
    rank: int,
    max_iters: int = 200,
    tol: float = 1e-12,
    rng_seed: int = 0,
) -> CpAlsResult:
    """Factor a (G, G, G, 3) residual tensor into rank separable components.

    Sweeps all four factor blocks per iteration, each solved in closed form
    with a small ridge on the normal equations, and stops when max_iters is
    reached or the relative error improves by less than tol.  The relative
    error trace is non-increasing; a poor final error is reported, not raised.
    """
    dense = np.asarray(dense, dtype=np.float64)
    if dense.ndim != 4 or dense.shape[3] != 3 or len(set(dense.shape[:3])) != 1:
        raise ValueError(f"expected a (G, G, G, 3) tensor, got shape {dense.shape}")
    if not np.all(np.isfinite(dense)):
        raise ValueError("non-finite entries in input tensor")
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    g = dense.shape[0]
    norm = float(np.linalg.norm(dense))
    if norm == 0.0:
        return CpAlsResult(
            factors=CpFactors.zeros(rank, g),
            error_trace=[0.0],
            relative_error=0.0,
            sweeps=0,
            converged=True,
        )

    rng = np.random.default_rng(rng_seed)
    mats = _svd_init(dense, rank, rng)
    unfoldings = [_unfold(dense, mode) for mode in range(4)]
    grams = [m.T @ m for m in mats]
    eye = np.eye(rank)

    error_trace: list[float] = []
    converged = False
    sweeps = 0
    for sweep in range(1, max_iters + 1):
        previous = [m.copy() for m in mats]
        for mode in range(4):
            others = [mats[m] for m in range(4) if m != mode]
            kr = _khatri_rao(others)
            v = np.ones((rank, rank))
            for m in range(4):
                if m != mode:
                    v *= grams[m]
            rhs = unfoldings[mode] @ kr
            mats[mode] = np.linalg.solve(v + _RIDGE * eye, rhs.T).T
            grams[mode] = mats[mode].T @ mats[mode]
        _normalize(mats)
        grams = [m.T @ m for m in mats]
        rel = float(np.linalg.norm(dense - _reconstruct(mats)) / norm)
        if error_trace and rel > error_trace[-1]:
            # The ridge keeps the raw error from improving forever; once a
            # sweep makes it worse, keep the previous factors and stop.
            mats = previous
            converged = True
            break
        sweeps = sweep
        error_trace.append(rel)
        if len(error_trace) > 1 and error_trace[-2] - rel < tol:
            converged = True
            break

    factors = CpFactors(
        us=mats[0].T.copy(), vs=mats[1].T.copy(), ws=mats[2].T.copy(), cs=mats[3].T.copy()
    )
    return CpAlsResult(
        factors=factors,
        error_trace=error_trace,
        relative_error=error_trace[-1],
        sweeps=sweeps,
        converged=converged,
    )
