"""tilesr: tiled real-time super-resolution for microscopy images.

A numpy-based package covering the full loop: a minimal reverse-mode
autodiff tensor core, SRGAN-family generator/discriminator variants
(interpolate-then-conv upsampling, optional batch normalization, GAP or
flatten discriminator heads), GAN training with one-sided label smoothing,
confocal-style data synthesis, PSNR/SSIM/checkerboard metrics, latency
benchmarks, and a PNG-in/PNG-out inference service.
"""

from .tensor import Tensor, ShapeError, no_grad
from .ops import ConvParams, BatchNormState, grad_check
from .models import (
    GeneratorSpec,
    DiscriminatorSpec,
    Model,
    ModelError,
    build_generator,
    build_discriminator,
    parameter_count,
    desk_generator_spec,
    desk_discriminator_spec,
)
from .data import (
    ImageBuffer,
    ChannelScheme,
    TileGrid,
    DataError,
    synthesize_sample,
    load_atlas_sample,
    bicubic_downsample,
    bicubic_upsample,
    nearest_upsample,
    make_training_pair,
    tile,
    stitch,
)
from .metrics import QualityReport, psnr, ssim, checkerboard_index, quality_report
from .training import (
    TrainPlan,
    AdamState,
    FeatureExtractor,
    TrainingDiverged,
    desk_plan,
    smooth_labels,
    pixel_loss,
    content_loss,
    generator_adversarial_loss,
    discriminator_loss,
    learning_rate,
    adam_update,
    run_training,
)
from .weights import WeightFormatError, save_weights, load_weights
from .inference import Roi, crop, sr_patch, sr_image, sr_video_roi
from .bench import BenchResult, time_patch, time_whole_image, video_fps

__all__ = [
    "Tensor", "ShapeError", "no_grad", "ConvParams", "BatchNormState", "grad_check",
    "GeneratorSpec", "DiscriminatorSpec", "Model", "ModelError",
    "build_generator", "build_discriminator", "parameter_count",
    "desk_generator_spec", "desk_discriminator_spec",
    "ImageBuffer", "ChannelScheme", "TileGrid", "DataError",
    "synthesize_sample", "load_atlas_sample", "bicubic_downsample",
    "bicubic_upsample", "nearest_upsample", "make_training_pair", "tile", "stitch",
    "QualityReport", "psnr", "ssim", "checkerboard_index", "quality_report",
    "TrainPlan", "AdamState", "FeatureExtractor", "TrainingDiverged", "desk_plan",
    "smooth_labels", "pixel_loss", "content_loss", "generator_adversarial_loss",
    "discriminator_loss", "learning_rate", "adam_update", "run_training",
    "WeightFormatError", "save_weights", "load_weights",
    "Roi", "crop", "sr_patch", "sr_image", "sr_video_roi",
    "BenchResult", "time_patch", "time_whole_image", "video_fps",
]

__version__ = "0.1.0"
