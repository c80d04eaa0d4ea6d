"""Seeded Monte Carlo estimation of areas, acceptance ratios and in-region node counts.

A point (node) is drawn uniformly over a bounding rectangle and accepted when
it falls in the target region; the acceptance ratio scaled by the rectangle
area estimates the region's area. Boundary points are always accepted.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.config import config as app_config
from src.logging_config import log_run_metrics

from .errors import InvalidHeightBoundError, InvalidInputError
from .geometry import Point2D
from .rng import split_samples, stream_generator

logger = logging.getLogger("node_sense.mc_estimation")

MAX_SEED = 2**64 - 1


class McConfig(BaseModel):
    """Sample count, seed and number of independent sub-streams for one run."""
    model_config = ConfigDict(frozen=True)

    samples: int = Field(..., ge=1, description="Total number of sampled points N")
    seed: int = Field(0, ge=0, le=MAX_SEED)
    streams: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _streams_fit_samples(self):
        if self.streams > self.samples:
            raise ValueError("streams must not exceed samples")
        return self


class McEstimate(BaseModel):
    """Outcome of a Monte Carlo run."""
    model_config = ConfigDict(frozen=True)

    accepted: int = Field(..., ge=0)
    total: int = Field(..., ge=1)
    ratio: float
    estimate: float
    std_error: float = Field(..., ge=0)

    @model_validator(mode="after")
    def _consistent(self):
        if self.accepted > self.total:
            raise ValueError("accepted exceeds total")
        if self.ratio != self.accepted / self.total:
            raise ValueError("ratio must equal accepted / total")
        return self


class FunctionKind(str, Enum):
    POLYNOMIAL = "poly"
    BUILTIN = "builtin"


class Builtin(str, Enum):
    CONSTANT = "constant"
    IDENTITY = "identity"
    SQUARE = "square"
    SEMICIRCLE = "semicircle"


_BUILTINS: dict = {
    Builtin.CONSTANT: lambda x: np.ones_like(x),
    Builtin.IDENTITY: lambda x: x,
    Builtin.SQUARE: lambda x: x * x,
    Builtin.SEMICIRCLE: lambda x: np.sqrt(1.0 - x * x),
}


class BoundedFunction(BaseModel):
    """A function f on [b1, b2] with 0 <= f(x) <= height.

    Polynomials are given by ascending coefficients; builtins by name.
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    kind: FunctionKind
    coefficients: Tuple[float, ...] = ()
    name: Optional[Builtin] = None
    b1: float
    b2: float
    height: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _check(self):
        if not self.b1 < self.b2:
            raise ValueError("domain requires b1 < b2")
        if self.kind is FunctionKind.POLYNOMIAL and not self.coefficients:
            raise ValueError("polynomial needs at least one coefficient")
        if self.kind is FunctionKind.BUILTIN and self.name is None:
            raise ValueError("builtin function needs a name")
        return self

    @classmethod
    def polynomial(cls, coefficients: Sequence[float], b1: float, b2: float,
                   height: float) -> "BoundedFunction":
        return cls(kind=FunctionKind.POLYNOMIAL, coefficients=tuple(coefficients),
                   b1=b1, b2=b2, height=height)

    @classmethod
    def builtin(cls, name: str, b1: float, b2: float, height: float) -> "BoundedFunction":
        return cls(kind=FunctionKind.BUILTIN, name=Builtin(name), b1=b1, b2=b2, height=height)

    @classmethod
    def parse(cls, text: str, b1: float, b2: float, height: float) -> "BoundedFunction":
        """Build from the CLI forms ``poly:c0,c1,...`` and ``builtin:NAME``."""
        prefix, sep, body = text.partition(":")
        if not sep or not body:
            raise InvalidInputError(f"function must look like poly:c0,c1 or builtin:NAME, got {text!r}")
        if prefix == FunctionKind.POLYNOMIAL.value:
            try:
                coefficients = [float(c) for c in body.split(",")]
            except ValueError as e:
                raise InvalidInputError(f"bad polynomial coefficients {body!r}") from e
            return cls.polynomial(coefficients, b1, b2, height)
        if prefix == FunctionKind.BUILTIN.value:
            names = [b.value for b in Builtin]
            if body not in names:
                raise InvalidInputError(f"unknown builtin {body!r}; choose from {', '.join(names)}")
            return cls.builtin(body, b1, b2, height)
        raise InvalidInputError(f"unknown function kind {prefix!r}")

    @property
    def width(self) -> float:
        return self.b2 - self.b1

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is FunctionKind.POLYNOMIAL:
            return P.polyval(x, self.coefficients)
        with np.errstate(invalid="ignore"):
            return _BUILTINS[self.name](x)


def point_in_unit_circle(p: Point2D) -> bool:
    """True iff x² + y² <= 1; points on the circumference count as inside."""
    return p.x * p.x + p.y * p.y <= 1.0


def count_in_unit_circle(points: np.ndarray) -> int:
    """Number of rows (x, y) of ``points`` lying in the closed unit disc."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    return int(np.count_nonzero(np.einsum("ij,ij->i", points, points) <= 1.0))


def _make_estimate(accepted: int, total: int, scale: float) -> McEstimate:
    ratio = accepted / total
    return McEstimate(
        accepted=accepted,
        total=total,
        ratio=ratio,
        estimate=scale * ratio,
        std_error=scale * math.sqrt(ratio * (1.0 - ratio) / total),
    )


def _run_streams(config: McConfig, count: Callable[[np.random.Generator, int], int]) -> int:
    """Sum the accepted counts of every stream.

    Each stream draws its share in fixed-size chunks; draws are consumed in
    order, so the chunk size never changes the result.
    """
    sizes = split_samples(config.samples, config.streams)
    chunk = app_config.sampling.chunk_size

    def run(index: int) -> int:
        rng = stream_generator(config.seed, index)
        accepted = 0
        remaining = sizes[index]
        while remaining > 0:
            k = min(chunk, remaining)
            accepted += count(rng, k)
            remaining -= k
        return accepted

    if config.streams == 1:
        return run(0)

    workers = min(config.streams, app_config.sampling.max_workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(run, range(config.streams)))


def estimate_pi(config: McConfig) -> McEstimate:
    """Estimate π from the fraction of points of [-1,1]² inside the unit circle."""
    start = time.perf_counter()

    def count(rng: np.random.Generator, k: int) -> int:
        return count_in_unit_circle(rng.uniform(-1.0, 1.0, size=(k, 2)))

    accepted = _run_streams(config, count)
    log_run_metrics(logger, "pi", config.samples, accepted, time.perf_counter() - start)
    return _make_estimate(accepted, config.samples, 4.0)


def _acceptance_count(f: BoundedFunction, config: McConfig) -> int:
    def count(rng: np.random.Generator, k: int) -> int:
        u = rng.random(size=(k, 2))
        x = f.b1 + f.width * u[:, 0]
        y = f.height * u[:, 1]
        fx = f.evaluate(x)
        if not np.all(np.isfinite(fx)) or fx.min() < 0.0 or fx.max() > f.height:
            raise InvalidHeightBoundError(
                f"f left [0, {f.height}] on [{f.b1}, {f.b2}] "
                f"(sampled range {np.nanmin(fx)}..{np.nanmax(fx)})"
            )
        return int(np.count_nonzero(y <= fx))

    return _run_streams(config, count)


def estimate_area_under_curve(f: BoundedFunction, config: McConfig) -> McEstimate:
    """Rejection-sample the rectangle [b1,b2]×[0,a]; estimate ≈ ∫f over [b1,b2]."""
    start = time.perf_counter()
    accepted = _acceptance_count(f, config)
    log_run_metrics(logger, "integrate", config.samples, accepted, time.perf_counter() - start)
    return _make_estimate(accepted, config.samples, f.height * f.width)


def estimate_nodes_in_region(total_nodes: int, f: BoundedFunction, config: McConfig) -> McEstimate:
    """Predicted in-region node count N_t·ratio, with its binomial standard error.

    Partially covered nodes carry the same weight as fully covered ones.
    """
    if isinstance(total_nodes, bool) or not isinstance(total_nodes, int) or total_nodes < 1:
        raise InvalidInputError(f"total_nodes must be a positive integer, got {total_nodes!r}")
    start = time.perf_counter()
    accepted = _acceptance_count(f, config)
    log_run_metrics(logger, "nodes", config.samples, accepted, time.perf_counter() - start)
    return _make_estimate(accepted, config.samples, float(total_nodes))


def expected_nodes_in_region(total_nodes: int, f: BoundedFunction, config: McConfig) -> float:
    return estimate_nodes_in_region(total_nodes, f, config).estimate


class ConvergenceRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    samples: int
    seed: int
    estimate: float
    abs_error: float
    std_error: float

    @property
    def within_3sigma(self) -> bool:
        return self.abs_error <= 3.0 * self.std_error


class ConvergenceSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    samples: int
    runs: int
    mean_abs_error: float
    median_abs_error: float
    within_3sigma: int


def convergence_study(sample_sizes: Sequence[int], seeds: Sequence[int],
                      streams: int = 1) -> List[ConvergenceRow]:
    """One π estimate per (N, seed), in the order given."""
    rows = []
    for n in sample_sizes:
        for seed in seeds:
            est = estimate_pi(McConfig(samples=n, seed=seed, streams=streams))
            rows.append(ConvergenceRow(
                samples=n,
                seed=seed,
                estimate=est.estimate,
                abs_error=abs(est.estimate - math.pi),
                std_error=est.std_error,
            ))
    logger.debug(f"Convergence study finished: {len(rows)} runs")
    return rows


def summarise_convergence(rows: Sequence[ConvergenceRow]) -> List[ConvergenceSummary]:
    """Group rows by sample size, preserving first-seen order."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(row.samples, []).append(row)

    summaries = []
    for n, group in groups.items():
        errors = [r.abs_error for r in group]
        summaries.append(ConvergenceSummary(
            samples=n,
            runs=len(group),
            mean_abs_error=float(np.mean(errors)),
            median_abs_error=float(np.median(errors)),
            within_3sigma=sum(1 for r in group if r.within_3sigma),
        ))
    return summaries
