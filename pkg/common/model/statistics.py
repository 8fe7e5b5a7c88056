"""
Containers for validation statistics.
"""
import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional

from common.utils.errors import ValidationError


@dataclass(frozen=True)
class ContingencyTable:
    """Pooled dyad-bin counts for two sources: a both hit, b A only, c B only, d neither."""
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValidationError(f"Contingency cell {name} must be a non-negative count, got {value}")
            object.__setattr__(self, name, int(value))

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d

    def __add__(self, other: "ContingencyTable") -> "ContingencyTable":
        return ContingencyTable(self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d)

    def to_dict(self) -> Dict[str, int]:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d, "total": self.total}


@dataclass(frozen=True)
class TableStats:
    """Association statistics of a contingency table."""
    phi: float
    chi2: float
    p_value: float
    odds_A: float
    odds_B: float
    sensitivity: float
    specificity: float

    def __post_init__(self):
        if not -1.0 - 1e-12 <= self.phi <= 1.0 + 1e-12:
            raise ValidationError(f"phi must lie in [-1, 1], got {self.phi}")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValidationError(f"p_value must lie in [0, 1], got {self.p_value}")
        if self.odds_A < 0 or self.odds_B < 0:
            raise ValidationError("odds must be non-negative")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class MantelResult:
    """Spearman Mantel statistic with its permutation p-value and optional CI."""
    rho: float
    p_value: float
    n_permutations: int
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    def __post_init__(self):
        if math.isnan(self.rho) or not -1.0 <= self.rho <= 1.0:
            raise ValidationError(f"rho must lie in [-1, 1], got {self.rho}")
        if not 0.0 < self.p_value <= 1.0:
            raise ValidationError(f"p_value must lie in (0, 1], got {self.p_value}")
        if self.p_value < 1.0 / (self.n_permutations + 1) - 1e-12:
            raise ValidationError(
                f"p_value {self.p_value} below the attainable minimum for {self.n_permutations} permutations"
            )
        if (self.ci_low is None) != (self.ci_high is None):
            raise ValidationError("ci_low and ci_high must be given together")
        if self.ci_low is not None and not self.ci_low <= self.rho <= self.ci_high:
            raise ValidationError(f"Interval [{self.ci_low}, {self.ci_high}] does not contain rho {self.rho}")

    def with_ci(self, ci_low: float, ci_high: float) -> "MantelResult":
        return MantelResult(self.rho, self.p_value, self.n_permutations, ci_low, ci_high)

    def to_dict(self) -> Dict:
        return asdict(self)


__all__ = ["ContingencyTable", "TableStats", "MantelResult"]
