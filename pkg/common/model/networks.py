"""
Network containers shared by every pipeline stage.

All containers copy their matrix, validate it and freeze it, so they are safe
to share.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np

from common.config import MAX_NOMINEES
from common.utils.errors import DataIntegrityError, ValidationError

logger = logging.getLogger("proxnet")

_TOLERANCE = 1e-12


def _frozen(matrix, dtype, roster, name) -> np.ndarray:
    array = np.array(matrix, dtype=dtype, copy=True)
    n = len(roster)
    if array.shape != (n, n):
        raise DataIntegrityError(f"{name}: matrix shape {array.shape} does not match roster of {n}")
    if len(set(roster)) != n:
        raise DataIntegrityError(f"{name}: roster labels must be unique")
    array.setflags(write=False)
    return array


class _Network:
    roster: Tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.roster)

    def index(self, label: str) -> int:
        try:
            return self.roster.index(label)
        except ValueError:
            raise ValidationError(f"{label!r} is not in the roster")

    def _positions(self, labels: Iterable[str]) -> List[int]:
        return [self.index(label) for label in labels]

    @property
    def matrix(self) -> np.ndarray:
        raise NotImplementedError

    def upper_triangle(self) -> np.ndarray:
        """Entries above the diagonal, row-major (i < j)."""
        rows, cols = np.triu_indices(self.n, k=1)
        return self.matrix[rows, cols]


@dataclass(frozen=True, eq=False)
class WeightedNetwork(_Network):
    """Symmetric weighted network with zero diagonal and weights in [0, 1]."""
    roster: Tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "roster", tuple(self.roster))
        w = _frozen(self.weights, float, self.roster, "WeightedNetwork")
        if not np.all(np.isfinite(w)):
            raise DataIntegrityError("WeightedNetwork: weights must be finite")
        if not np.allclose(w, w.T, atol=_TOLERANCE, rtol=0.0):
            raise DataIntegrityError("WeightedNetwork: matrix is not symmetric")
        if np.any(np.diag(w) != 0):
            raise DataIntegrityError("WeightedNetwork: diagonal must be zero")
        if np.any(w < 0) or np.any(w > 1):
            raise DataIntegrityError("WeightedNetwork: weights must lie in [0, 1]")
        object.__setattr__(self, "weights", w)

    @property
    def matrix(self) -> np.ndarray:
        return self.weights

    def restrict(self, labels: Iterable[str]) -> "WeightedNetwork":
        labels = tuple(labels)
        idx = self._positions(labels)
        return WeightedNetwork(labels, self.weights[np.ix_(idx, idx)])

    def __eq__(self, other):
        return (isinstance(other, WeightedNetwork) and self.roster == other.roster
                and np.array_equal(self.weights, other.weights))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryNetwork(_Network):
    """Symmetric 0/1 network with zero diagonal."""
    roster: Tuple[str, ...]
    adjacency: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "roster", tuple(self.roster))
        a = np.asarray(self.adjacency)
        if not np.all(np.isin(a, (0, 1))):
            raise DataIntegrityError("BinaryNetwork: entries must be 0 or 1")
        a = _frozen(a, np.int8, self.roster, "BinaryNetwork")
        if not np.array_equal(a, a.T):
            raise DataIntegrityError("BinaryNetwork: matrix is not symmetric")
        if np.any(np.diag(a) != 0):
            raise DataIntegrityError("BinaryNetwork: diagonal must be zero")
        object.__setattr__(self, "adjacency", a)

    @property
    def matrix(self) -> np.ndarray:
        return self.adjacency

    def edges(self) -> List[Tuple[int, int]]:
        """Undirected edges as (i, j) with i < j, in lexicographic order."""
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(rows.tolist(), cols.tolist()))

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, k=1).sum())

    def restrict(self, labels: Iterable[str]) -> "BinaryNetwork":
        labels = tuple(labels)
        idx = self._positions(labels)
        return BinaryNetwork(labels, self.adjacency[np.ix_(idx, idx)])

    def __eq__(self, other):
        return (isinstance(other, BinaryNetwork) and self.roster == other.roster
                and np.array_equal(self.adjacency, other.adjacency))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DirectedSurveyNetwork(_Network):
    """Directed nomination network; row i holds the nominees of respondent i."""
    roster: Tuple[str, ...]
    adjacency: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "roster", tuple(self.roster))
        a = np.asarray(self.adjacency)
        if not np.all(np.isin(a, (0, 1))):
            raise DataIntegrityError("DirectedSurveyNetwork: entries must be 0 or 1")
        a = _frozen(a, np.int8, self.roster, "DirectedSurveyNetwork")
        if np.any(np.diag(a) != 0):
            raise DataIntegrityError("DirectedSurveyNetwork: self-nominations are not allowed")
        if a.size and a.sum(axis=1).max() > MAX_NOMINEES:
            raise DataIntegrityError(f"DirectedSurveyNetwork: more than {MAX_NOMINEES} nominees in a row")
        object.__setattr__(self, "adjacency", a)

    @property
    def matrix(self) -> np.ndarray:
        return self.adjacency

    def __eq__(self, other):
        return (isinstance(other, DirectedSurveyNetwork) and self.roster == other.roster
                and np.array_equal(self.adjacency, other.adjacency))

    __hash__ = None


__all__ = ["WeightedNetwork", "BinaryNetwork", "DirectedSurveyNetwork"]
