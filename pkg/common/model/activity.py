"""
Per-device activity timelines.
"""
from dataclasses import dataclass

import numpy as np

from common.utils.errors import ValidationError


@dataclass(frozen=True, eq=False)
class ActivityTimeline:
    """Per-bin flags marking when a device was evidently operating."""
    device: str
    active: np.ndarray

    def __post_init__(self):
        active = np.array(self.active, dtype=bool, copy=True)
        if active.ndim != 1:
            raise ValidationError("ActivityTimeline: active flags must be one-dimensional")
        active.setflags(write=False)
        object.__setattr__(self, "active", active)

    def __len__(self):
        return len(self.active)

    @property
    def active_bins(self) -> int:
        return int(self.active.sum())

    @property
    def active_fraction(self) -> float:
        return float(self.active.mean()) if len(self.active) else 0.0

    def __eq__(self, other):
        return (isinstance(other, ActivityTimeline) and self.device == other.device
                and np.array_equal(self.active, other.active))

    __hash__ = None


__all__ = ["ActivityTimeline"]
