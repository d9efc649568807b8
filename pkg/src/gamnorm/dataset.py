"""Sample container shared by the distribution and estimation layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Dataset"]


@dataclass(frozen=True)
class Dataset:
    """An ordered real-valued sample, optionally pre-shifted.

    ``values`` holds the working values after subtracting ``shift``;
    reported location estimates add ``shift`` back.  Shifting the data
    by a constant leaves the distribution family invariant (the location
    parameter absorbs it), so large raw measurements can be moved near
    the origin for numerical comfort without changing any estimate.
    """

    values: np.ndarray
    shift: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if arr.size < 1:
            raise ValueError("Dataset requires at least one value")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Dataset values must all be finite")
        if not np.isfinite(self.shift):
            raise ValueError("Dataset shift must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "shift", float(self.shift))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def original_values(self) -> np.ndarray:
        """The sample on its original scale (working values + shift)."""
        return self.values + self.shift

    def shifted(self, constant: float) -> "Dataset":
        """Move the working values down by ``constant``, recording it."""
        return Dataset(self.values - constant, self.shift + constant)
