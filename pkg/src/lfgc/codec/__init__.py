"""Coefficient quantisation, side information, the container and the codec pipeline."""

from .bitstream import MAGIC, VERSION, Bitstream
from .pipeline import (DEFAULT_PSNR_MIN, CodecReport, EncoderParams, auto_spacing, bitrate_report,
                       decode_lightfield, encode_lightfield)
from .quant import (N_GROUPS, CoefficientGroups, QuantConfig, dequantize, dequantize_coefficients, group_bounds,
                    group_of, qp_step, quantize, quantize_coefficients, step_vector)
from .sideinfo import DISPARITY_SCALE, decode_sideinfo, encode_sideinfo

__all__ = [
    "MAGIC", "VERSION", "Bitstream", "DEFAULT_PSNR_MIN", "CodecReport", "EncoderParams", "auto_spacing",
    "bitrate_report", "decode_lightfield", "encode_lightfield", "N_GROUPS", "CoefficientGroups", "QuantConfig",
    "dequantize", "dequantize_coefficients", "group_bounds", "group_of", "qp_step", "quantize",
    "quantize_coefficients", "step_vector", "DISPARITY_SCALE", "decode_sideinfo", "encode_sideinfo",
]
