"""Predicting element positions from two timed samples of P = M·e^{at}.

For samples on an exponential curve the geometric mean of two positions is
the position at the midpoint time, and the geometric progression continues
to the next equidistant instant.
"""
import logging
import math
import sys

from pydantic import BaseModel, ConfigDict, Field

from .errors import InvalidInputError, ModelOverflowError, NodeSenseError
from .exp_models import CurveClass, classify_curve

logger = logging.getLogger("node_sense.position_prediction")


class PositionSample(BaseModel):
    """Position ``p`` of an element at time ``t``; positions are strictly positive."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    t: float
    p: float = Field(..., gt=0)


class MeanTriple(BaseModel):
    model_config = ConfigDict(frozen=True)

    am: float
    hm: float
    gm: float


def _geometric_mean(a: float, b: float) -> float:
    """√(a·b) for positive a, b, without overflow or underflow in the product."""
    product = a * b
    if math.isfinite(product) and product >= sys.float_info.min:
        return math.sqrt(product)
    return math.sqrt(a) * math.sqrt(b)


def _midpoint(a: float, b: float) -> float:
    mid = (a + b) / 2.0
    return mid if math.isfinite(mid) else a / 2.0 + b / 2.0


def _check_pair(s1: PositionSample, s2: PositionSample):
    if s1.t == s2.t:
        raise InvalidInputError(f"samples must be at different times, both at t={s1.t}")


def predict_midway(s1: PositionSample, s2: PositionSample) -> PositionSample:
    """Position at (t₁+t₂)/2 is √(p₁·p₂)."""
    _check_pair(s1, s2)
    return PositionSample(t=_midpoint(s1.t, s2.t), p=_geometric_mean(s1.p, s2.p))


def predict_extrapolated(s1: PositionSample, s2: PositionSample) -> PositionSample:
    """Next equidistant position: t = 2t₂ − t₁, p = p₂²/p₁."""
    _check_pair(s1, s2)
    t = 2.0 * s2.t - s1.t
    p = s2.p * (s2.p / s1.p)
    if not (math.isfinite(t) and math.isfinite(p) and p > 0):
        raise ModelOverflowError(f"extrapolated sample (t={t}, p={p}) is not representable")
    return PositionSample(t=t, p=p)


def am_hm_gm(t1: float, t2: float) -> MeanTriple:
    """Arithmetic, harmonic and geometric means of two positive instants.

    gm is computed as √(am·hm) and checked against √(t₁·t₂).
    """
    for label, value in (("t1", t1), ("t2", t2)):
        if not (math.isfinite(value) and value > 0):
            raise InvalidInputError(f"{label} must be positive, got {value}")

    am = _midpoint(t1, t2)
    hm = 2.0 / ((1.0 / t1) + (1.0 / t2))
    if not (math.isfinite(hm) and hm >= sys.float_info.min):
        lo, hi = min(t1, t2), max(t1, t2)
        hm = lo * (2.0 / (1.0 + lo / hi))
    gm = _geometric_mean(am, hm)
    direct = _geometric_mean(t1, t2)
    if not math.isclose(gm, direct, rel_tol=1e-12):
        raise NodeSenseError(f"√(am·hm)={gm} differs from √(t1·t2)={direct}",
                             code="mean_identity_violation")
    return MeanTriple(am=am, hm=hm, gm=gm)


def classify_probe(s1: PositionSample, s2: PositionSample, probe: PositionSample,
                   tol: float = 1e-6) -> CurveClass:
    """Is ``probe`` on the growth or the decay branch of the curve through s1, s2?

    M and a are recovered from the two samples (a must come out positive).
    """
    _check_pair(s1, s2)
    a = math.log(s2.p / s1.p) / (s2.t - s1.t)
    if not a > 0:
        raise InvalidInputError(f"samples do not describe a growing baseline (a={a})")
    try:
        m = s1.p * math.exp(-a * s1.t)
    except OverflowError as e:
        raise ModelOverflowError(f"baseline scale overflows (a={a}, t1={s1.t})") from e
    if not m > 0:
        raise ModelOverflowError(f"baseline scale underflows (a={a}, t1={s1.t})")
    logger.debug(f"Baseline through samples: M={m}, a={a}")
    return classify_curve(m, a, probe.t, probe.p, tol)
