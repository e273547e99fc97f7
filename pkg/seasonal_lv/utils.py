import json
import math
from collections.abc import Mapping
from enum import Enum
from numbers import Integral, Real

import fsspec
import numpy as np
from pydantic import BaseModel

# 17 significant digits identify every double uniquely
FLOAT_FORMAT = "%.17g"


def jsonable(obj):
    """Convert obj into plain JSON types.
    Floats are kept as python floats, their repr is
    the shortest string that round-trips exactly.
    """

    if obj is None:
        return obj

    if isinstance(obj, BaseModel):
        return {k: jsonable(v) for k, v in obj.dict().items()}

    if isinstance(obj, Enum):
        return obj.value

    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]

    if isinstance(obj, Mapping):
        return {str(jsonable(k)): jsonable(v) for k, v in obj.items()}

    if hasattr(obj, "_asdict"):
        return {k: jsonable(v) for k, v in obj._asdict().items()}

    if isinstance(obj, (list, set, frozenset, tuple)):
        return [jsonable(v) for v in obj]

    if isinstance(obj, bool):
        return obj

    if isinstance(obj, (str, int)):
        return obj

    if isinstance(obj, Integral):
        return int(obj)

    if isinstance(obj, Real):
        value = float(obj)
        if not math.isfinite(value):
            # JSON has no inf/nan
            return str(value)
        return value

    raise TypeError(f"Cannot convert {type(obj)} to JSON")


def dumps(obj, indent=2) -> str:
    return json.dumps(jsonable(obj), indent=indent, allow_nan=False)


def read_json(url: str, **kwargs):
    with fsspec.open(url, "r", **kwargs) as f:
        return json.load(f)


def write_json(url: str, obj, **kwargs):
    with fsspec.open(url, "w", **kwargs) as f:
        f.write(dumps(obj))
        f.write("\n")


def write_frame(url: str, df, index=False, **kwargs):
    """Write a dataframe as CSV with full float precision.
    pandas formatting does not depend on the locale.
    """
    with fsspec.open(url, "w", newline="", **kwargs) as f:
        df.to_csv(f, index=index, float_format=FLOAT_FORMAT)
