"""Color/texture extraction, regularized WCT and color metrics (C++ core)."""

from ._sadis import (
    SadisError,
    SadisIoError,
    average_gray,
    blend_step,
    chist_distance,
    color,
    combine,
    covariance_distance,
    extract_color_embedding,
    extract_texture_embedding,
    grayscale,
    radial_spectrum,
    read_image,
    read_npy,
    reg_wct,
    reweight_singular_values,
    run_trajectory,
    swd_color_distance,
    wct,
    whiten,
    write_image,
    write_npy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
