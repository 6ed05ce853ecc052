"""Possibility degrees, measures, min-max algebra and probability/possibility transforms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PROBABILITY_TOLERANCE = 1e-9


class ValidationError(ValueError):
    """Raised when user-supplied data violates a structural or range constraint."""


@dataclass(frozen=True)
class Domain:
    """Ordered, duplicate-free list of value labels of an attribute."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))
        if not self.labels:
            raise ValidationError("a domain needs at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"duplicate labels in domain {list(self.labels)}")

    def __len__(self):
        return len(self.labels)

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise ValidationError(f"unknown label {label!r}; expected one of {list(self.labels)}") from None

    def indices(self, labels: Iterable) -> frozenset[int]:
        return frozenset(self.index(label) for label in labels)


def as_degrees(values, name: str = "degrees") -> np.ndarray:
    """Convert to a float vector and check every entry lies in [0, 1]."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    bad = np.flatnonzero(~((arr >= 0.0) & (arr <= 1.0)))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"{name}[{i}] = {arr[i]!r} is outside [0, 1]")
    return arr


def check_possibility(values, renormalize: bool = False, name: str = "possibility distribution") -> np.ndarray:
    """Validate a normalized possibility distribution, optionally dividing by its max first."""
    arr = np.asarray(values, dtype=float)
    if renormalize and arr.size and np.all(arr >= 0):
        top = arr.max()
        if top > 0 and top != 1.0:
            arr = arr / top
    arr = as_degrees(arr, name)
    if arr.size == 0 or arr.max() != 1.0:
        raise ValidationError(f"{name} is not normalized (max degree {arr.max() if arr.size else None})")
    return arr


def check_probability(values, renormalize: bool = False, name: str = "probability distribution") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if renormalize and arr.size and np.all(arr >= 0) and arr.sum() > 0:
        arr = arr / arr.sum()
    arr = as_degrees(arr, name)
    if arr.size == 0 or abs(arr.sum() - 1.0) > PROBABILITY_TOLERANCE:
        raise ValidationError(f"{name} sums to {arr.sum()!r}, expected 1")
    return arr


def _subset_mask(size: int, subset: Iterable[int]) -> np.ndarray:
    mask = np.zeros(size, dtype=bool)
    for i in subset:
        if not 0 <= i < size:
            raise IndexError(f"index {i} outside domain of size {size}")
        mask[i] = True
    return mask


def possibility_measure(pi, subset: Iterable[int]) -> float:
    """Pi(A): the largest degree over A, 0 for the empty set."""
    pi = np.asarray(pi, dtype=float)
    mask = _subset_mask(pi.size, subset)
    return float(pi[mask].max()) if mask.any() else 0.0


def necessity_measure(pi, subset: Iterable[int]) -> float:
    """N(A) = 1 - Pi(complement of A)."""
    pi = np.asarray(pi, dtype=float)
    mask = _subset_mask(pi.size, subset)
    rest = pi[~mask]
    return 1.0 - (float(rest.max()) if rest.size else 0.0)


def _check_product_shapes(matrix: np.ndarray, vector: np.ndarray):
    if matrix.ndim != 2 or vector.ndim != 1 or matrix.shape[1] != vector.shape[0]:
        raise ValueError(f"shape mismatch: matrix {matrix.shape} and vector {vector.shape}")


def minmax_product(matrix, vector) -> np.ndarray:
    """out_i = min_j max(matrix[i, j], vector[j])."""
    matrix = np.asarray(matrix, dtype=float)
    vector = np.asarray(vector, dtype=float)
    _check_product_shapes(matrix, vector)
    if matrix.shape[1] == 0:
        return np.ones(matrix.shape[0])
    return np.maximum(matrix, vector[None, :]).min(axis=1)


def epsilon_product(x: float, y: float) -> float:
    """x eps y = y if x < y else 0."""
    return y if x < y else 0.0


def maxeps_product(matrix, vector) -> np.ndarray:
    """out_l = max_i (matrix[l, i] eps vector[i]), with a strict comparison."""
    matrix = np.asarray(matrix, dtype=float)
    vector = np.asarray(vector, dtype=float)
    _check_product_shapes(matrix, vector)
    if matrix.shape[1] == 0:
        return np.zeros(matrix.shape[0])
    picked = np.where(matrix < vector[None, :], vector[None, :], 0.0)
    return picked.max(axis=1)


def _descending_order(values: np.ndarray) -> np.ndarray:
    # stable: equal values keep their label order
    return np.argsort(-values, kind="stable")


def antipignistic(p, renormalize: bool = False) -> np.ndarray:
    """Probability to possibility: pi_i = i p_i + sum_{j>i} p_j on the descending view."""
    p = check_probability(p, renormalize)
    order = _descending_order(p)
    ps = p[order]
    n = ps.size
    tail = np.concatenate([np.cumsum(ps[::-1])[::-1][1:], [0.0]])
    sorted_pi = np.arange(1, n + 1) * ps + tail
    # equal masses give equal degrees; ties are forced to share the exact same float
    for i in range(1, n):
        if ps[i] == ps[i - 1]:
            sorted_pi[i] = sorted_pi[i - 1]
    sorted_pi[0] = 1.0
    pi = np.empty(n)
    pi[order] = np.clip(sorted_pi, 0.0, 1.0)
    return pi


def antipignistic_inverse(pi, renormalize: bool = False) -> np.ndarray:
    """Possibility to probability: p_i = sum_{j>=i} (pi_j - pi_{j+1}) / j on the descending view."""
    pi = check_possibility(pi, renormalize)
    order = _descending_order(pi)
    ps = pi[order]
    n = ps.size
    steps = (ps - np.concatenate([ps[1:], [0.0]])) / np.arange(1, n + 1)
    sorted_p = np.cumsum(steps[::-1])[::-1]
    p = np.empty(n)
    p[order] = np.clip(sorted_p, 0.0, 1.0)
    return p


def min_specificity(p, renormalize: bool = False) -> np.ndarray:
    """Probability to possibility: pi*_i = sum_{j>=i} p_j on the descending view.

    Tied masses get distinct degrees according to their position in the stable sort.
    """
    p = check_probability(p, renormalize)
    order = _descending_order(p)
    ps = p[order]
    sorted_pi = np.cumsum(ps[::-1])[::-1]
    sorted_pi[0] = 1.0
    pi = np.empty(ps.size)
    pi[order] = np.clip(sorted_pi, 0.0, 1.0)
    return pi


TRANSFORMS = {
    "antipignistic": antipignistic,
    "minspec": min_specificity,
}


def to_possibility(values, transform: str = "none", renormalize: bool = False) -> np.ndarray:
    """Turn one input row into a normalized possibility distribution.

    `transform` is "none" when the row already holds possibility degrees.
    """
    if transform == "none":
        return check_possibility(values, renormalize)
    try:
        fn = TRANSFORMS[transform]
    except KeyError:
        raise ValidationError(f"unknown transform {transform!r}") from None
    return fn(values, renormalize)


def argmax_label(degrees: Sequence[float]) -> int | None:
    """Index of the unique largest degree, or None when the maximum is shared."""
    arr = np.asarray(degrees, dtype=float)
    winners = np.flatnonzero(arr == arr.max())
    return int(winners[0]) if winners.size == 1 else None
