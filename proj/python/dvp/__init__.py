"""Multi-scale video precoding toolkit."""

import json as _json

from ._dvp import (
    CodecError,
    FormatError,
    Frame,
    InvalidArgument,
    PixelRange,
    ScaleFactor,
    ShapeError,
    Weights,
    all_modes,
    bd_metrics,
    canonical_scales,
    frame_psnr,
    lower_convex_hull,
    netinfo,
    precode,
    prune_monotone,
    read_y4m,
    resize,
    write_y4m,
)
from ._dvp import run_ladder as _run_ladder


def run_ladder(input, bitrates, output_dir, **kwargs):
    """Runs the ladder and returns the result with the manifest as a list of dicts."""
    result = _run_ladder(input, bitrates, output_dir, **kwargs)
    result["manifest"] = _json.loads(result["manifest"])
    return result


__all__ = [
    "CodecError",
    "FormatError",
    "Frame",
    "InvalidArgument",
    "PixelRange",
    "ScaleFactor",
    "ShapeError",
    "Weights",
    "all_modes",
    "bd_metrics",
    "canonical_scales",
    "frame_psnr",
    "lower_convex_hull",
    "netinfo",
    "precode",
    "prune_monotone",
    "read_y4m",
    "resize",
    "run_ladder",
    "write_y4m",
]
