from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict


def readonly_array(value: Any, ndim: int) -> np.ndarray:
    """Copy `value` into a read-only float64 array of the given rank."""
    array = np.array(value, dtype=float, copy=True)
    if array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-dimensional array, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError("array has non-finite entries")
    array.setflags(write=False)
    return array


class ArrayModel(BaseModel):
    """Immutable pydantic model whose fields may hold numpy arrays."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def __eq__(self, other: object) -> bool:
        if type(self) is not type(other):
            return NotImplemented
        for name in type(self).model_fields:
            left, right = getattr(self, name), getattr(other, name)
            if isinstance(left, np.ndarray) or isinstance(right, np.ndarray):
                if not np.array_equal(left, right):
                    return False
            elif left != right:
                return False
        return True

    def __hash__(self) -> int:
        parts = []
        for name in type(self).model_fields:
            value = getattr(self, name)
            parts.append(value.tobytes() if isinstance(value, np.ndarray) else value)
        return hash(tuple(parts))
