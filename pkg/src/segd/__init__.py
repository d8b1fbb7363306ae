"""Structural-entropy guided restoration of compound-degraded thermal images.

Submodules:

- ``specialfn``: log-gamma, digamma, trigamma, log-Beta.
- ``degrade``: seeded contrast / blur / noise synthesis and recipes.
- ``evidential``: image statistics, type gating, Beta evidence heads and losses.
- ``restore_ops``: gated residual restoration operators and ordered paths.
- ``seros``: similarity graphs, 2D structural entropy, order selection.
- ``metrics``: PSNR, SSIM, RMSE, MAE.
- ``pipeline``: corpus synthesis, restoration, benchmark harness, CLI.
"""

from .degrade import DegradationRecipe, Kind, synthesize
from .evidential import BetaEvidence, DegradationHeads, compute_stats, edl_loss, gate, train_heads
from .images import ImageError, load_image, save_image
from .metrics import psnr, ssim
from .restore_ops import apply_drm, apply_path
from .seros import (
    CandidateSet,
    Partition,
    SimilarityGraph,
    build_graph,
    minimize_partition,
    node_contribution,
    seros_pipeline,
    two_d_se,
)

__version__ = "0.1.0"

__all__ = [
    "BetaEvidence",
    "CandidateSet",
    "DegradationHeads",
    "DegradationRecipe",
    "ImageError",
    "Kind",
    "Partition",
    "SimilarityGraph",
    "apply_drm",
    "apply_path",
    "build_graph",
    "compute_stats",
    "edl_loss",
    "gate",
    "load_image",
    "minimize_partition",
    "node_contribution",
    "psnr",
    "save_image",
    "seros_pipeline",
    "ssim",
    "synthesize",
    "train_heads",
    "two_d_se",
]
