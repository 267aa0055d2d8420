"""Sim-to-real CT denoising study: phantoms, noise models, FBP, metrics and the study harness."""

from ._core import (
    IoError,
    ValidationError,
    calibrate,
    canonical_config,
    cross_talk,
    denoise,
    fbp,
    forward_project,
    negative_log,
    poisson,
    psnr,
    rasterize,
    run_study,
    sample_phantom,
    set_num_threads,
    ssim,
    synthesize_noisy_pair,
    to_intensity_loss,
)

__all__ = [
    "IoError",
    "ValidationError",
    "calibrate",
    "canonical_config",
    "cross_talk",
    "denoise",
    "fbp",
    "forward_project",
    "negative_log",
    "poisson",
    "psnr",
    "rasterize",
    "run_study",
    "sample_phantom",
    "set_num_threads",
    "ssim",
    "synthesize_noisy_pair",
    "to_intensity_loss",
]
