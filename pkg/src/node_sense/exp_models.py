"""Exponential growth, decay and modified (saturating) growth of node counts.

    Growth          y = y₀·e^{kt}        (ẏ = k·y)
    Decay           y = y₀·e^{−kt}       (ẏ = −k·y)
    ModifiedGrowth  n = N·(1 − e^{−kt})  (ṅ = k·(N − n), n(0) = 0)

The rate k is always positive; its sign lives in the model kind.
"""
import logging
import math
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.config import config

from .curve_fit import PointSet, fit_vertical
from .errors import InvalidInputError, ModelOverflowError, ZeroRateError

logger = logging.getLogger("node_sense.exp_models")


class ExpKind(str, Enum):
    GROWTH = "growth"
    DECAY = "decay"
    MODIFIED_GROWTH = "modified"


class CurveClass(str, Enum):
    GROWTH_CURVE = "growth"
    DECAY_CURVE = "decay"
    NEITHER = "neither"


class ExpModel(BaseModel):
    """``scale`` is y₀ for Growth/Decay and the capacity N for ModifiedGrowth."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    kind: ExpKind
    scale: float = Field(..., gt=0)
    rate: float = Field(..., gt=0)


class TimeSeries(BaseModel):
    """Samples (t, y) with strictly increasing t."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    t: Tuple[float, ...] = Field(..., min_length=2)
    y: Tuple[float, ...] = Field(..., min_length=2)

    @model_validator(mode="after")
    def _ordered(self):
        if len(self.t) != len(self.y):
            raise ValueError("t and y must have the same length")
        if any(b <= a for a, b in zip(self.t, self.t[1:])):
            raise ValueError("t must be strictly increasing")
        return self

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[float, float]]) -> "TimeSeries":
        return cls(t=tuple(p[0] for p in pairs), y=tuple(p[1] for p in pairs))


def evaluate(model: ExpModel, t: float) -> float:
    try:
        if model.kind is ExpKind.GROWTH:
            return model.scale * math.exp(model.rate * t)
        if model.kind is ExpKind.DECAY:
            return model.scale * math.exp(-model.rate * t)
        return model.scale * -math.expm1(-model.rate * t)
    except OverflowError as e:
        raise ModelOverflowError(f"{model.kind.value} model overflows at t={t} (rate={model.rate})") from e


def evaluate_many(model: ExpModel, t: np.ndarray) -> np.ndarray:
    """Vectorised :func:`evaluate`."""
    t = np.asarray(t, dtype=float)
    try:
        with np.errstate(over="raise"):
            if model.kind is ExpKind.GROWTH:
                return model.scale * np.exp(model.rate * t)
            if model.kind is ExpKind.DECAY:
                return model.scale * np.exp(-model.rate * t)
            return model.scale * -np.expm1(-model.rate * t)
    except FloatingPointError as e:
        raise ModelOverflowError(f"{model.kind.value} model overflows on the requested range") from e


def derivative(model: ExpModel, t: float) -> float:
    """dy/dt: k·y for growth, −k·y for decay, k·(N − n) for modified growth."""
    if model.kind is ExpKind.GROWTH:
        return model.rate * evaluate(model, t)
    if model.kind is ExpKind.DECAY:
        return -model.rate * evaluate(model, t)
    return model.rate * (model.scale - evaluate(model, t))


def fit_growth_decay(series: TimeSeries) -> ExpModel:
    """Fit y = y₀·e^{±kt} by a vertical least-squares line through (t, ln y)."""
    y = np.asarray(series.y)
    if np.any(y <= 0):
        raise InvalidInputError("growth/decay fitting needs every y > 0")

    line = fit_vertical(PointSet.from_xy(series.t, np.log(y)))
    scale = math.exp(line.intercept)
    if abs(line.slope) <= config.fit.zero_rate_tol:
        raise ZeroRateError("fitted rate is zero: the series neither grows nor decays", scale=scale)

    kind = ExpKind.GROWTH if line.slope > 0 else ExpKind.DECAY
    logger.debug(f"Fitted {kind.value}: scale={scale}, rate={abs(line.slope)}")
    return ExpModel(kind=kind, scale=scale, rate=abs(line.slope))


def fit_modified_growth(series: TimeSeries, capacity: float) -> ExpModel:
    """Fit n = N·(1 − e^{−kt}) for a known capacity N.

    ln(1 − n/N) = −k·t is fitted through the origin, since n(0) = 0 is part
    of the model: k = −Σ tᵢ·ln(1 − nᵢ/N) / Σ tᵢ².
    """
    if not (math.isfinite(capacity) and capacity > 0):
        raise InvalidInputError(f"capacity must be a positive number, got {capacity}")
    t = np.asarray(series.t)
    y = np.asarray(series.y)
    if np.any(y < 0):
        raise InvalidInputError("modified growth fitting needs every n >= 0")
    if np.any(y >= capacity):
        raise InvalidInputError(
            f"n reached the capacity N={capacity}; the model never attains its limit"
        )

    z = np.log1p(-y / capacity)
    denom = float(t @ t)
    k = -float(t @ z) / denom
    if k <= config.fit.zero_rate_tol:
        raise ZeroRateError("fitted rate is not positive: the series does not saturate upward",
                            scale=capacity)

    logger.debug(f"Fitted modified growth: N={capacity}, rate={k}")
    return ExpModel(kind=ExpKind.MODIFIED_GROWTH, scale=capacity, rate=k)


def classify_curve(baseline_scale: float, baseline_rate: float, probe_t: float,
                   probe_p: float, tol: float) -> CurveClass:
    """Decide whether (t₃, P₃) lies on M·e^{at} (growth) or M·e^{−at} (decay).

    Matches are relative to the curve value. Both curves pass through M at
    t = 0; a double match resolves to growth.
    """
    for label, value in (("baseline_scale", baseline_scale), ("baseline_rate", baseline_rate),
                         ("probe_p", probe_p), ("tol", tol)):
        if not (math.isfinite(value) and value > 0):
            raise InvalidInputError(f"{label} must be positive, got {value}")
    if not math.isfinite(probe_t):
        raise InvalidInputError(f"probe_t must be finite, got {probe_t}")

    for kind, label in ((ExpKind.GROWTH, CurveClass.GROWTH_CURVE), (ExpKind.DECAY, CurveClass.DECAY_CURVE)):
        try:
            value = evaluate(ExpModel(kind=kind, scale=baseline_scale, rate=baseline_rate), probe_t)
        except ModelOverflowError:
            # An overflowing branch cannot pass through a finite probe
            logger.debug(f"{kind.value} branch overflows at t={probe_t}")
            continue
        if abs(probe_p - value) <= tol * value:
            return label
    return CurveClass.NEITHER


def sample_curve(model: ExpModel, t1: float, t2: float, steps: int) -> List[Tuple[float, float]]:
    """``steps`` evenly spaced (t, value) pairs over [t1, t2] for plotting."""
    if steps < 2:
        raise InvalidInputError(f"steps must be at least 2, got {steps}")
    if not t1 < t2:
        raise InvalidInputError(f"need t1 < t2, got {t1}, {t2}")
    grid = np.linspace(t1, t2, steps)
    return [(float(t), float(v)) for t, v in zip(grid, evaluate_many(model, grid))]
