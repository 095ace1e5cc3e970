"""Adversarial-patch defense for object detectors.

Defends by regenerating every pixel of an input through two complementary
checkerboard inpainting passes, localizing the region the regeneration
disagrees with, and replacing only that region.  See :func:`defend` for the
end-to-end entry point and the ``patchrect`` CLI for batch tooling.
"""

from .checkerboard import GridSpec, checkerboard_masks
from .config import (
    BACKEND_CONSTANT,
    BACKEND_IDENTITY,
    BACKEND_NATIVE,
    BACKEND_REMOTE,
    ENV_BACKEND_URL,
    VARIANT_GRAY,
    VARIANT_REGENERATED,
    DefenseConfig,
    load_config_file,
)
from .evaluation import (
    BBox,
    Detection,
    EvalReport,
    GroundTruthBox,
    SchemaError,
    ap50,
    asr_creating,
    asr_hiding,
    average_recall,
    iou,
    load_coco_annotations,
    load_detections,
)
from .patches import PatchPlacement, apply_patch, paste_geometry, patch_size_for, synth_noise_patch
from .pipeline import DefenseResult, defend
from .raster import (
    BinaryMask,
    DistanceMap,
    Image,
    PngColorTypeError,
    PngDecodeError,
    PngError,
    compose,
    decode_png,
    encode_png,
    load_mask_png,
    load_png,
    mask_from_png_bytes,
    mask_to_png_bytes,
    resize,
    resize_mask_nearest,
    save_mask_png,
    save_png,
)
from .rectification import (
    ClusterResult,
    RectifyParams,
    box_blur,
    detect_adversarial,
    distance_map,
    mean_pixel_distance,
    rectify,
    two_means_1d,
)
from .regeneration import (
    BackendError,
    BackendInfo,
    BackendUnavailableError,
    ConstantFillBackend,
    HarmonicBackend,
    IdentityBackend,
    InpainterBackend,
    InpaintRequest,
    RemoteBackend,
    backend_from_config,
    harmonic_inpaint,
    inpaint,
    regenerate_full,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_CONSTANT",
    "BACKEND_IDENTITY",
    "BACKEND_NATIVE",
    "BACKEND_REMOTE",
    "BBox",
    "BackendError",
    "BackendInfo",
    "BackendUnavailableError",
    "BinaryMask",
    "ClusterResult",
    "ConstantFillBackend",
    "DefenseConfig",
    "DefenseResult",
    "Detection",
    "DistanceMap",
    "ENV_BACKEND_URL",
    "EvalReport",
    "GridSpec",
    "GroundTruthBox",
    "HarmonicBackend",
    "IdentityBackend",
    "Image",
    "InpaintRequest",
    "InpainterBackend",
    "PatchPlacement",
    "PngColorTypeError",
    "PngDecodeError",
    "PngError",
    "RectifyParams",
    "RemoteBackend",
    "SchemaError",
    "VARIANT_GRAY",
    "VARIANT_REGENERATED",
    "ap50",
    "apply_patch",
    "asr_creating",
    "asr_hiding",
    "average_recall",
    "backend_from_config",
    "box_blur",
    "checkerboard_masks",
    "compose",
    "decode_png",
    "defend",
    "detect_adversarial",
    "distance_map",
    "encode_png",
    "harmonic_inpaint",
    "inpaint",
    "iou",
    "load_coco_annotations",
    "load_config_file",
    "load_detections",
    "load_mask_png",
    "load_png",
    "mask_from_png_bytes",
    "mask_to_png_bytes",
    "mean_pixel_distance",
    "paste_geometry",
    "patch_size_for",
    "rectify",
    "regenerate_full",
    "resize",
    "resize_mask_nearest",
    "save_mask_png",
    "save_png",
    "synth_noise_patch",
    "two_means_1d",
]
