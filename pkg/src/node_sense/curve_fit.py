"""Linear least-squares fitting of node positions with vertical and perpendicular offsets.

Sums of squares are always computed in centered form, Σ(xᵢ − x̄)², rather
than Σxᵢ² − n·x̄²; the two are equal algebraically but the centered form does
not cancel catastrophically.
"""
import logging
import math
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.config import config

from .errors import DegenerateFitError, InvalidInputError
from .geometry import Point2D

logger = logging.getLogger("node_sense.curve_fit")


class OffsetMethod(str, Enum):
    VERTICAL = "vertical"
    PERPENDICULAR = "perpendicular"


class PointSet(BaseModel):
    """An ordered set of at least two finite node positions."""
    model_config = ConfigDict(frozen=True)

    points: Tuple[Point2D, ...] = Field(..., min_length=2)

    @classmethod
    def from_xy(cls, xs: Sequence[float], ys: Sequence[float]) -> "PointSet":
        if len(xs) != len(ys):
            raise InvalidInputError(f"x and y lengths differ ({len(xs)} vs {len(ys)})")
        return cls(points=tuple(Point2D(x=float(x), y=float(y)) for x, y in zip(xs, ys)))

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def xs(self) -> np.ndarray:
        return np.array([p.x for p in self.points], dtype=float)

    @property
    def ys(self) -> np.ndarray:
        return np.array([p.y for p in self.points], dtype=float)


class SummaryStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    mean_x: float
    mean_y: float
    ss_xx: float = Field(..., ge=0)
    ss_yy: float = Field(..., ge=0)
    ss_xy: float
    var_x: float
    var_y: float
    cov_xy: float

    @property
    def std_x(self) -> float:
        return math.sqrt(self.var_x)

    @property
    def std_y(self) -> float:
        return math.sqrt(self.var_y)


class LinearFit(BaseModel):
    """A fitted line y = a + b·x.

    When ``vertical_line`` is set the line is x = ``intercept`` and ``slope``
    is infinite; only perpendicular fitting produces such lines.
    ``residual`` is R² for vertical offsets and R⊥² for perpendicular ones.
    """
    model_config = ConfigDict(frozen=True)

    method: OffsetMethod
    intercept: float
    slope: float
    r: float = Field(..., ge=-1.0, le=1.0)
    r_squared: float = Field(..., ge=0.0, le=1.0)
    se_a: float = Field(..., ge=0)
    se_b: float = Field(..., ge=0)
    s: float = Field(..., ge=0)
    residual: float = Field(..., ge=0)
    n: int
    vertical_line: bool = False

    @property
    def direction(self) -> Tuple[float, float]:
        """Unit direction vector of the line, pointing to increasing x (or y if vertical)."""
        if self.vertical_line:
            return (0.0, 1.0)
        norm = math.hypot(1.0, self.slope)
        return (1.0 / norm, self.slope / norm)

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.vertical_line:
            raise DegenerateFitError("a vertical line has no y for a given x", code="vertical_line")
        return self.intercept + self.slope * np.asarray(x, dtype=float)


def _centered(values: np.ndarray) -> Tuple[float, np.ndarray]:
    # Identical values keep an exact mean so their deviations are exactly zero
    mean = float(values[0]) if np.all(values == values[0]) else float(values.mean())
    return mean, values - mean


def summary_stats(points: PointSet) -> SummaryStats:
    """x̄, ȳ, SSxx, SSyy, SSxy and the population variances/covariance (divisor n)."""
    n = points.n
    mean_x, dx = _centered(points.xs)
    mean_y, dy = _centered(points.ys)
    ss_xx = float(dx @ dx)
    ss_yy = float(dy @ dy)
    ss_xy = float(dx @ dy)
    return SummaryStats(
        n=n,
        mean_x=mean_x,
        mean_y=mean_y,
        ss_xx=ss_xx,
        ss_yy=ss_yy,
        ss_xy=ss_xy,
        var_x=ss_xx / n,
        var_y=ss_yy / n,
        cov_xy=ss_xy / n,
    )


def _r_from_stats(stats: SummaryStats) -> float:
    # Rounding can push |SSxy| a hair past √(SSxx·SSyy)
    r = stats.ss_xy / (math.sqrt(stats.ss_xx) * math.sqrt(stats.ss_yy))
    return min(1.0, max(-1.0, r))


def _safe_r(stats: SummaryStats) -> float:
    """Correlation, or 0 when either coordinate has zero spread."""
    if stats.ss_xx == 0.0 or stats.ss_yy == 0.0:
        return 0.0
    return _r_from_stats(stats)


def correlation(points: PointSet) -> float:
    """r = SSxy / √(SSxx·SSyy); r² is the overall quality of fit."""
    stats = summary_stats(points)
    if stats.ss_xx == 0.0 or stats.ss_yy == 0.0:
        raise DegenerateFitError(
            "correlation is undefined when x or y has zero variance", code="zero_variance"
        )
    return _r_from_stats(stats)


class CorrelationStrength(str, Enum):
    PERFECT = "perfect"
    STRONG = "strong"
    MODERATE = "moderate"
    WEAK = "weak"
    NONE = "none"


class CorrelationDirection(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NONE = "none"


class CorrelationReading(BaseModel):
    model_config = ConfigDict(frozen=True)

    strength: CorrelationStrength
    direction: CorrelationDirection


# Lower |r| bound of each strength band, strongest first
_STRENGTH_BANDS = (
    (1.0 - 1e-12, CorrelationStrength.PERFECT),
    (0.7, CorrelationStrength.STRONG),
    (0.3, CorrelationStrength.MODERATE),
    (0.1, CorrelationStrength.WEAK),
)


def interpret_correlation(r: float) -> CorrelationReading:
    """Read r as a strength and a direction of linear dependence.

    |r| near 1 is a strong linear relation and r near 0 none at all; the sign
    gives the direction. r = 0 does not imply independence, only that no
    linear trend is present.
    """
    if not (math.isfinite(r) and abs(r) <= 1.0 + 1e-12):
        raise InvalidInputError(f"correlation must lie in [-1, 1], got {r}")
    magnitude = abs(r)
    strength = next((label for bound, label in _STRENGTH_BANDS if magnitude >= bound),
                    CorrelationStrength.NONE)
    if strength is CorrelationStrength.NONE:
        direction = CorrelationDirection.NONE
    else:
        direction = CorrelationDirection.POSITIVE if r > 0 else CorrelationDirection.NEGATIVE
    return CorrelationReading(strength=strength, direction=direction)


def vertical_residual(points: PointSet, a: float, b: float) -> float:
    """R²(a, b) = Σ[yᵢ − (a + b·xᵢ)]²."""
    e = points.ys - (a + b * points.xs)
    return float(e @ e)


def perpendicular_residual(points: PointSet, a: float, b: float) -> float:
    """R⊥²(a, b) = Σ[yᵢ − (a + b·xᵢ)]² / (1 + b²)."""
    return vertical_residual(points, a, b) / (1.0 + b * b)


def _standard_errors(stats: SummaryStats, rss: float) -> Tuple[float, float, float]:
    n = stats.n
    s = math.sqrt(rss / (n - 2)) if n > 2 else 0.0
    if stats.ss_xx == 0.0:
        return s, 0.0, 0.0
    se_a = s * math.sqrt(1.0 / n + stats.mean_x ** 2 / stats.ss_xx)
    se_b = s / math.sqrt(stats.ss_xx)
    return s, se_a, se_b


def solve_normal_equations(points: PointSet) -> Tuple[float, float]:
    """Solve the 2×2 normal equations for (a, b) directly.

    [[n, Σx], [Σx, Σx²]] · [a, b] = [Σy, Σxy]
    """
    x, y = points.xs, points.ys
    if np.all(x == x[0]):
        raise DegenerateFitError(
            "all x values are equal; the normal equations are singular", code="degenerate_vertical"
        )
    lhs = np.array([[points.n, x.sum()], [x.sum(), x @ x]])
    rhs = np.array([y.sum(), x @ y])
    a, b = np.linalg.solve(lhs, rhs)
    return float(a), float(b)


def fit_vertical(points: PointSet) -> LinearFit:
    """Ordinary least squares: minimise the squared vertical offsets R²."""
    stats = summary_stats(points)
    if stats.ss_xx == 0.0:
        raise DegenerateFitError(
            "all x values are equal (points on a vertical line); use perpendicular fitting instead",
            code="degenerate_vertical",
        )

    b = stats.ss_xy / stats.ss_xx
    a = stats.mean_y - b * stats.mean_x
    rss = vertical_residual(points, a, b)
    s, se_a, se_b = _standard_errors(stats, rss)
    r = _safe_r(stats)

    logger.debug(f"Vertical fit n={stats.n}: a={a}, b={b}, R2={rss}")
    return LinearFit(
        method=OffsetMethod.VERTICAL,
        intercept=a,
        slope=b,
        r=r,
        r_squared=r * r,
        se_a=se_a,
        se_b=se_b,
        s=s,
        residual=rss,
        n=stats.n,
    )


def slope_roots(B: float) -> Tuple[float, float]:
    """Both roots of b² + 2Bb − 1 = 0, i.e. b = −B ± √(B² + 1).

    The root whose terms would cancel is recovered from the product
    b₊·b₋ = −1 instead of by subtraction.
    """
    root = math.hypot(B, 1.0)
    if B >= 0:
        minus = -B - root
        plus = -1.0 / minus
    else:
        plus = -B + root
        minus = -1.0 / plus
    return plus, minus


def fit_perpendicular(points: PointSet) -> LinearFit:
    """Total least squares: minimise the squared perpendicular offsets R⊥².

    The best line passes through the centroid; of the two slope roots the
    one with the smaller R⊥² is kept (the other is the worst-fitting,
    perpendicular direction).
    """
    stats = summary_stats(points)
    spread = stats.ss_xx + stats.ss_yy
    if spread == 0.0:
        raise DegenerateFitError("all points coincide; no line is defined",
                                 code="degenerate_perpendicular")

    tol = config.fit.degenerate_tol * spread
    vertical_line = False

    if abs(stats.ss_xy) <= tol:
        if abs(stats.ss_xx - stats.ss_yy) <= tol:
            raise DegenerateFitError(
                "SSxy = 0 and SSxx = SSyy: the orientation of the best line is indeterminate",
                code="degenerate_perpendicular",
            )
        if stats.ss_xx > stats.ss_yy:
            b = 0.0
            a = stats.mean_y
            residual = stats.ss_yy
        else:
            vertical_line = True
            b = math.inf
            a = stats.mean_x
            residual = stats.ss_xx
    else:
        # B = [(Σy² − nȳ²) − (Σx² − nx̄²)] / [2(n·x̄·ȳ − Σxy)]
        B = (stats.ss_yy - stats.ss_xx) / (2.0 * -stats.ss_xy)
        _, dx = _centered(points.xs)
        _, dy = _centered(points.ys)

        def centered_residual(slope: float) -> float:
            e = dy - slope * dx
            return float(e @ e) / (1.0 + slope * slope)

        b, residual = min(((root, centered_residual(root)) for root in slope_roots(B)),
                          key=lambda pair: pair[1])
        a = stats.mean_y - b * stats.mean_x

    n = stats.n
    s = math.sqrt(residual / (n - 2)) if n > 2 else 0.0
    if vertical_line or stats.ss_xx == 0.0:
        se_a = se_b = 0.0
    else:
        _, se_a, se_b = _standard_errors(stats, residual)
    r = _safe_r(stats)

    logger.debug(f"Perpendicular fit n={n}: a={a}, b={b}, R_perp2={residual}")
    return LinearFit(
        method=OffsetMethod.PERPENDICULAR,
        intercept=a,
        slope=b,
        r=r,
        r_squared=r * r,
        se_a=se_a,
        se_b=se_b,
        s=s,
        residual=residual,
        n=n,
        vertical_line=vertical_line,
    )


def fit(points: PointSet, method: OffsetMethod) -> LinearFit:
    if method is OffsetMethod.VERTICAL:
        return fit_vertical(points)
    return fit_perpendicular(points)


def sample_line(line: LinearFit, start: float, stop: float, steps: int) -> List[Tuple[float, float]]:
    """``steps`` evenly spaced points of the fitted line for plotting.

    For a vertical line the range is taken along y.
    """
    if steps < 2:
        raise InvalidInputError(f"steps must be at least 2, got {steps}")
    grid = np.linspace(start, stop, steps)
    if line.vertical_line:
        return [(line.intercept, float(v)) for v in grid]
    return [(float(x), float(y)) for x, y in zip(grid, line.predict(grid))]
