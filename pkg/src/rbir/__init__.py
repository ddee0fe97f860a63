"""Region-based image retrieval: Harris-Laplace interest regions encoded as
bit-packed binary signatures over a color palette, indexed in an S-tree and
ranked by an earth-mover's-distance similarity measure."""

from . import emd
from ._backend import BACKEND
from .emd import ground_distance, solve_transportation, weight_vector
from .imgproc import Image, YCbCrImage, load_image, resize, rgb_to_ycbcr, save_ppm
from .interest import DetectorParams, InterestRegion, extract_regions
from .signature import (
    BinarySignature,
    ColorPalette,
    cover_test,
    default_palette,
    image_signature,
    load_palette,
    region_histogram,
    region_signature,
)
from .stree import STree, STreeConfig, tree_stats

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BinarySignature",
    "ColorPalette",
    "DetectorParams",
    "Image",
    "InterestRegion",
    "STree",
    "STreeConfig",
    "YCbCrImage",
    "cover_test",
    "default_palette",
    "emd",
    "extract_regions",
    "ground_distance",
    "image_signature",
    "load_image",
    "load_palette",
    "region_histogram",
    "region_signature",
    "resize",
    "rgb_to_ycbcr",
    "save_ppm",
    "solve_transportation",
    "tree_stats",
    "weight_vector",
    "__version__",
]
