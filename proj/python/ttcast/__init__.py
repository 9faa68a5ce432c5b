"""Gridded spatiotemporal forecasting: TT-DMD, DMD, MAR and forecast metrics.

Arrays use the library's layout: a field series is lat x lon x time, and
flattening is first-index-fastest (numpy order="F").
"""

import json as _json

from ._core import (  # noqa: F401
    DmdModel,
    MarModel,
    TtcastError,
    TtDmdModel,
    __version__,
    dmd_fit,
    dmd_forecast,
    haversine,
    kmeans_haversine,
    linear_fixture,
    load_grid_csv,
    mae,
    mar_fit,
    mar_predict,
    rmse,
    save_grid_csv,
    smape,
    ssim,
    tt_decompose,
    tt_reconstruct,
    ttdmd_fit,
    ttdmd_forecast,
    weather_fixture,
)
from ._core import evaluate_json as _evaluate_json


def evaluate(pred, target):
    """Full metric report of an M x N x k forecast as a dict."""
    return _json.loads(_evaluate_json(pred, target))
