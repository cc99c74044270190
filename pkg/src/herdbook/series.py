"""Uniformly sampled time series."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SampledSeries:
    """Values on a uniform time grid ``t0 + k * sample_interval``.

    ``kind`` tags the payload: price, trades, abs-return, modulating-return,
    x or y.  ``norm_mode``/``norm_value`` record how (if at all) the values
    were rescaled, so downstream curves can carry the normalization.
    """

    values: np.ndarray
    sample_interval: float
    t0: float = 0.0
    kind: str = "generic"
    norm_mode: str | None = None
    norm_value: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("values must be a nonempty 1-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        if not (self.sample_interval > 0 and np.isfinite(self.sample_interval)):
            raise ValueError(f"sample_interval must be positive, got {self.sample_interval!r}")

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.values.size) * self.sample_interval
