"""Stereo training data from single images plus relative depth.

Forward warping with edge-aware occlusion handling, pluggable inpainting,
scale/shift-invariant supervision losses and stereo metrics.
"""
__version__ = "0.1.0"

from monostereo.core import (
    DegenerateFitError,
    DimensionError,
    DisparityField,
    EmptySelectionError,
    FormatError,
    MonoStereoError,
    ParameterError,
    mask_and,
    masked_stats,
    popcount,
)
from monostereo.dssi import (
    AffineAlignment,
    combined_loss,
    dssi_loss,
    dssi_loss_grad,
    lstsq_align,
    outlier_mask,
    sparse_loss,
)
from monostereo.edge import build_carry_plan, edge_mask, warp_with_carry
from monostereo.inpaint import inpaint_builtin, inpaint_external
from monostereo.metrics import evaluate
from monostereo.pipeline import GenerationConfig, MixSpec, generate_sample, mix_stream
from monostereo.warp import forward_warp, sample_alpha, scale_disparity
