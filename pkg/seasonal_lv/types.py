import math
from enum import Enum
from typing import Mapping

import numpy as np
from pydantic import BaseModel, root_validator


class Species(str, Enum):
    U = "U"
    V = "V"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            for member in cls:
                if member.value == value.upper():
                    return member
        return None


class Interval(BaseModel):
    """Closed interval [left, right] of finite reals."""

    class Config:
        validate_assignment = True
        frozen = True

    left: float
    right: float

    @classmethod
    def __get_validators__(cls):
        yield cls.validate_field

    @classmethod
    def validate_field(cls, v, field=None):
        if isinstance(v, cls):
            return v

        if isinstance(v, (tuple, list)):
            left, right = v
        elif isinstance(v, Mapping):
            left = v.get("left", None)
            right = v.get("right", None)
        elif hasattr(v, "left") and hasattr(v, "right"):
            left = v.left
            right = v.right
        else:
            left, right = v, v

        return cls(left=left, right=right)

    @root_validator(skip_on_failure=True)
    def check_ordered(cls, values):
        left, right = values.get("left"), values.get("right")

        if not (math.isfinite(left) and math.isfinite(right)):
            raise ValueError("Interval boundaries must be finite.")

        if left > right:
            raise ValueError("Interval left must be less than or equal to right.")

        return values

    @property
    def width(self) -> float:
        return self.right - self.left

    def contains(self, x: float) -> bool:
        return self.left <= x <= self.right

    def centers(self, n: int) -> np.ndarray:
        """Midpoints of n equal cells covering the interval"""
        edges = np.linspace(self.left, self.right, n + 1)
        return 0.5 * (edges[:-1] + edges[1:])

    def linspace(self, n: int) -> np.ndarray:
        return np.linspace(self.left, self.right, n)

    def as_tuple(self):
        return self.left, self.right
