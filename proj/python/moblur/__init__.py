"""Per-object motion blur, panning shots, cinemagraphs and HDR merging.

The heavy lifting lives in the compiled `_core` extension; this package
re-exports its operations.
"""

from ._core import (
    ConfigError,
    ContractError,
    IoError,
    NumericalError,
    color_map,
    composite,
    compute_sigma,
    convolve2d,
    extract_mask,
    farneback_flow,
    generate_scene,
    line_kernel,
    luminance,
    match_colors,
    merge_radiance,
    rank1_backgrounds,
    read_pfm,
    read_png,
    recover_response,
    render_effect,
    run_pipeline,
    tone_map,
    track_sequence,
    write_pfm,
    write_png,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "IoError",
    "NumericalError",
    "color_map",
    "composite",
    "compute_sigma",
    "convolve2d",
    "extract_mask",
    "farneback_flow",
    "generate_scene",
    "line_kernel",
    "luminance",
    "match_colors",
    "merge_radiance",
    "rank1_backgrounds",
    "read_pfm",
    "read_png",
    "recover_response",
    "render_effect",
    "run_pipeline",
    "tone_map",
    "track_sequence",
    "write_pfm",
    "write_png",
]
