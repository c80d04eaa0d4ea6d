"""Planar coordinates shared by the estimators, the classifier and the fitters."""
from pydantic import BaseModel, ConfigDict


class Point2D(BaseModel):
    """A node or cell-center position. Both coordinates must be finite."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float
    y: float

    @classmethod
    def of(cls, x: float, y: float) -> "Point2D":
        return cls(x=x, y=y)
