"""Explicit 3D LUT engine with a separable low-rank residual.

A color transform is stored as a fused (or identity) base LUT plus a sum of
rank-1 components, fitted per image by gradient descent or extracted from an
existing dense LUT by alternating least squares.  The package also ships the
command line tools and the HTTP service behind the interactive viewer.
"""

from .als import CpAlsResult, cp_als_compress
from .amortized import (
    FEATURE_DIM,
    PredictorWeights,
    extract_global_features,
    init_predictor,
    predictor_forward,
    train_amortized,
)
from .color import delta_e00, mean_delta_e00, psnr, srgb_to_lab, ssim
from .losses import LossWeights, l2_residual, loss_total, tv_loss
from .lowrank import (
    CpFactors,
    LorLutModel,
    ParamBreakdown,
    component_curves,
    component_magnitude,
    compose_lut,
    default_scales,
    dense_param_count,
    reconstruct_residual,
    residual_param_count,
    total_param_count,
)
from .luts import (
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
from .model_io import (
    load_image,
    quantize_u8,
    read_cube,
    read_image,
    read_model,
    save_image,
    write_cube,
    write_image,
    write_model,
)
from .optim import (
    FitConfig,
    FitReport,
    Gradients,
    adamw_step,
    apply_lut_model,
    backward,
    fit_image_pair,
    learning_rate_at,
)

__version__ = "0.1.0"

__all__ = [
    "CpAlsResult",
    "CpFactors",
    "FEATURE_DIM",
    "FitConfig",
    "FitReport",
    "Gradients",
    "LorLutModel",
    "LossWeights",
    "ParamBreakdown",
    "PredictorWeights",
    "__version__",
    "adamw_step",
    "apply_lut",
    "apply_lut_model",
    "backward",
    "component_curves",
    "component_magnitude",
    "compose_lut",
    "cp_als_compress",
    "default_scales",
    "delta_e00",
    "dense_param_count",
    "extract_global_features",
    "fit_image_pair",
    "flatten_entries",
    "fuse",
    "identity_lut",
    "init_predictor",
    "l2_residual",
    "learning_rate_at",
    "load_image",
    "loss_total",
    "lut_grid_size",
    "mean_delta_e00",
    "predictor_forward",
    "psnr",
    "quantize_u8",
    "read_cube",
    "read_image",
    "read_model",
    "reconstruct_residual",
    "residual_param_count",
    "sample_tetrahedral",
    "sample_trilinear",
    "save_image",
    "splat_trilinear",
    "srgb_to_lab",
    "ssim",
    "total_param_count",
    "train_amortized",
    "tv_loss",
    "unflatten_entries",
    "write_cube",
    "write_image",
    "write_model",
]
