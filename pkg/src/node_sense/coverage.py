"""Cell membership against a circular coverage region, and IP-block partitioning."""
import ipaddress
import logging
from enum import Enum
from typing import Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from src.config import config

from .errors import InvalidInputError
from .geometry import Point2D

logger = logging.getLogger("node_sense.coverage")


class CoverageRegion(BaseModel):
    """Circular dynamic-network region around the center node."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    center: Point2D
    radius: float = Field(..., gt=0)


class Membership(str, Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


class CellMembership(BaseModel):
    model_config = ConfigDict(frozen=True)

    score: float
    membership: Membership


class IpAllocation(BaseModel):
    """Floor split of ``total_ips`` addresses over ``cells`` cells.

    The ``remainder`` addresses are kept unassigned in a global reserve at
    the tail of the address range.
    """
    model_config = ConfigDict(frozen=True)

    total_ips: int = Field(..., ge=1)
    cells: int = Field(..., ge=1)
    per_cell: int = Field(..., ge=0)
    remainder: int = Field(..., ge=0)
    base_address: ipaddress.IPv4Address = ipaddress.IPv4Address("10.0.0.0")

    @model_validator(mode="after")
    def _conserved(self):
        if self.per_cell * self.cells + self.remainder != self.total_ips:
            raise ValueError("per_cell * cells + remainder must equal total_ips")
        if self.remainder >= self.cells:
            raise ValueError("remainder must be smaller than cells")
        return self

    @computed_field
    @property
    def underprovisioned(self) -> bool:
        """True when there are fewer addresses than cells (per_cell == 0)."""
        return self.total_ips < self.cells


def coverage_score(region: CoverageRegion, cell_center: Point2D) -> float:
    """(x1-x2)²/R² + (y1-y2)²/R²."""
    dx = region.center.x - cell_center.x
    dy = region.center.y - cell_center.y
    return (dx * dx + dy * dy) / (region.radius * region.radius)


def classify_cell(region: CoverageRegion, cell_center: Point2D,
                  epsilon: Optional[float] = None) -> CellMembership:
    """Inside if score < 1, Outside if score > 1, Boundary within ``epsilon`` of 1."""
    if epsilon is None:
        epsilon = config.fit.boundary_epsilon
    if not epsilon >= 0:
        raise InvalidInputError(f"epsilon must be non-negative, got {epsilon}")

    score = coverage_score(region, cell_center)
    if abs(score - 1.0) <= epsilon:
        membership = Membership.BOUNDARY
    elif score < 1.0:
        membership = Membership.INSIDE
    else:
        membership = Membership.OUTSIDE
    return CellMembership(score=score, membership=membership)


def classify_cells(region: CoverageRegion, cells: Iterable[Tuple[str, Point2D]],
                   epsilon: Optional[float] = None) -> List[Tuple[str, CellMembership]]:
    """Classify (id, center) pairs, preserving input order."""
    results = [(cell_id, classify_cell(region, center, epsilon)) for cell_id, center in cells]
    logger.debug(f"Classified {len(results)} cells against R={region.radius}")
    return results


def partition_ips(m: int, n: int, base_address: Optional[str] = None) -> IpAllocation:
    """Give each of ``n`` cells floor(m/n) addresses; hold m mod n in reserve."""
    for label, value in (("m", m), ("n", n)):
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise InvalidInputError(f"{label} must be a positive integer, got {value!r}")
    try:
        base = ipaddress.IPv4Address(base_address or config.simulation.base_address)
    except ipaddress.AddressValueError as e:
        raise InvalidInputError(f"invalid base address: {e}") from e
    if int(base) + m - 1 > int(ipaddress.IPv4Address("255.255.255.255")):
        raise InvalidInputError(f"{m} addresses do not fit above {base}")

    per_cell, remainder = divmod(m, n)
    allocation = IpAllocation(total_ips=m, cells=n, per_cell=per_cell,
                              remainder=remainder, base_address=base)
    if allocation.underprovisioned:
        logger.warning(f"Only {m} addresses for {n} cells: every cell starts with an empty pool")
    return allocation


def cell_block(allocation: IpAllocation, cell: int) -> List[ipaddress.IPv4Address]:
    """Addresses owned by ``cell``, in ascending order."""
    if not 0 <= cell < allocation.cells:
        raise InvalidInputError(f"cell {cell} out of range 0..{allocation.cells - 1}")
    start = cell * allocation.per_cell
    return [allocation.base_address + offset
            for offset in range(start, start + allocation.per_cell)]


def reserve_block(allocation: IpAllocation) -> List[ipaddress.IPv4Address]:
    """The unassigned remainder addresses."""
    start = allocation.cells * allocation.per_cell
    return [allocation.base_address + offset
            for offset in range(start, start + allocation.remainder)]
