"""Objective image-quality criteria: MAE, MSE, SNR and PSNR.

Sums are accumulated in 64-bit integers before the single final division,
so results are platform-identical.  A zero-error pair reports infinite
SNR/PSNR, serialized as the sentinel string "inf" (never a crash).
All serialized floats carry four decimal places.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image_core import GrayImage

__all__ = ["MetricsRecord", "compare", "format_metric", "PSNR_PEAK"]

PSNR_PEAK = 255  # 8-bit domain


def format_metric(value: float) -> str:
    """Four decimal places; infinities become 'inf' / '-inf'."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.4f}"


@dataclass(frozen=True)
class MetricsRecord:
    mae: float
    mse: float
    snr_db: float
    psnr_db: float

    def to_csv_row(self) -> str:
        return ",".join(
            format_metric(v) for v in (self.mae, self.mse, self.snr_db, self.psnr_db)
        )

    def to_json_dict(self) -> dict:
        def jsonable(v: float):
            return format_metric(v) if math.isinf(v) else round(v, 4)

        return {
            "mae": jsonable(self.mae),
            "mse": jsonable(self.mse),
            "snr_db": jsonable(self.snr_db),
            "psnr_db": jsonable(self.psnr_db),
        }


def compare(test: GrayImage, reference: GrayImage) -> MetricsRecord:
    """Pixelwise error statistics of ``test`` against ``reference``.

    mae = mean |t-r|, mse = mean (t-r)^2, psnr = 10 log10(255^2/mse),
    snr = 10 log10(sum r^2 / sum (t-r)^2).  Zero mse yields the infinite
    sentinel for both ratios.
    """
    if (test.width, test.height) != (reference.width, reference.height):
        raise ValueError(
            f"dimension mismatch: {test.width}x{test.height} vs "
            f"{reference.width}x{reference.height}"
        )
    t = test.pixels.astype(np.int64)
    r = reference.pixels.astype(np.int64)
    diff = t - r
    n = diff.size
    abs_sum = int(np.abs(diff).sum())
    sq_sum = int((diff * diff).sum())
    ref_sq_sum = int((r * r).sum())

    mae = abs_sum / n
    mse = sq_sum / n
    if sq_sum == 0:
        return MetricsRecord(mae=mae, mse=mse, snr_db=math.inf, psnr_db=math.inf)
    psnr = 10.0 * math.log10(PSNR_PEAK * PSNR_PEAK / mse)
    if ref_sq_sum == 0:
        snr = -math.inf
    else:
        snr = 10.0 * math.log10(ref_sq_sum / sq_sum)
    return MetricsRecord(mae=mae, mse=mse, snr_db=snr, psnr_db=psnr)
