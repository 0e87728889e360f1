"""CLAHE-family contrast enhancement, a from-scratch TinyVGG classifier and
confusion-matrix metrics for with/without-CLAHE classification experiments."""

from .clahe import ClaheParams, TileGrid, blend_tiles, build_tile_luts, clahe, clip_and_redistribute
from .histogram_eq import apply_lut, compute_histogram, equalize, equalize_mapping
from .metrics import ConfusionMatrix, MetricsRow, compute_metrics, tally_confusion, write_report
from .raster_io import decode_image, encode_image, read_gray, to_luma, write_image

__version__ = "0.1.0"
