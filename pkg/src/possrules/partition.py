"""Ordered partition of an output domain induced by rule conclusions.

Each cell of the partition is the set of output values that agree on membership
in every conclusion Q_1..Q_n. A cell is identified by its sign tuple: entry j is
+j when the cell lies inside Q_j and -j when it lies outside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import ValidationError


def _bits(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def _members(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def psi_index(signs: Sequence) -> int:
    """Position index 1 + sum of 2^(i-1) over the negative entries (i is 1-based).

    `signs` holds either signed rule numbers such as (-1, 2) or booleans (True = positive).
    """
    index = 1
    for i, t in enumerate(signs):
        positive = t if isinstance(t, (bool, np.bool_)) else t > 0
        if not positive:
            index += 1 << i
    return index


@dataclass(frozen=True)
class PartitionIndex:
    """Cells of the output domain in ascending psi order.

    `negatives[k]` is the bitmask of rules whose sign is negative for cell k, so
    psi of cell k is 1 + negatives[k]. `cells[k]` is the bitmask of output indices.
    """

    n_rules: int
    domain_size: int
    negatives: tuple[int, ...]
    cells: tuple[int, ...]
    operations: int = 0
    top: tuple[tuple[int, ...], ...] = field(init=False)
    bot: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        top, bot = [], []
        for j in range(self.n_rules):
            bit = 1 << j
            top.append(tuple(k for k, neg in enumerate(self.negatives) if not neg & bit))
            bot.append(tuple(k for k, neg in enumerate(self.negatives) if neg & bit))
        object.__setattr__(self, "top", tuple(top))
        object.__setattr__(self, "bot", tuple(bot))

    @property
    def omega(self) -> int:
        return len(self.cells)

    def sign_tuple(self, k: int) -> tuple[int, ...]:
        neg = self.negatives[k]
        return tuple(-(j + 1) if neg >> j & 1 else j + 1 for j in range(self.n_rules))

    @property
    def tuples(self) -> list[tuple[int, ...]]:
        return [self.sign_tuple(k) for k in range(self.omega)]

    def psi(self, k: int) -> int:
        return 1 + self.negatives[k]

    def cell_members(self, k: int) -> list[int]:
        return _members(self.cells[k])

    def cell_of_value(self) -> np.ndarray:
        """For every output index, the position of the cell that contains it."""
        owner = np.empty(self.domain_size, dtype=np.intp)
        for k, cell in enumerate(self.cells):
            owner[_members(cell)] = k
        return owner

    def sign_matrix(self) -> np.ndarray:
        """Boolean omega x n array, True where the cell sits inside the rule conclusion."""
        out = np.ones((self.omega, self.n_rules), dtype=bool)
        for k, neg in enumerate(self.negatives):
            for j in _members(neg):
                out[k, j] = False
        return out

    def dump(self, labels: Sequence[str] | None = None) -> str:
        lines = []
        for k in range(self.omega):
            members = self.cell_members(k)
            names = [labels[i] for i in members] if labels is not None else [str(i) for i in members]
            signs = ", ".join(str(t) for t in self.sign_tuple(k))
            lines.append(f"({signs}) -> {{{', '.join(names)}}}")
        return "\n".join(lines)


def build_partition(conclusions: Sequence[Iterable[int]], domain_size: int) -> PartitionIndex:
    """Build the ordered partition incrementally, one conclusion at a time.

    At step i every current cell is split against Q_i, keeping only non-empty
    parts. Only existing cells are ever visited, so the work stays linear in
    domain_size * n. `operations` counts the intersections computed: one per
    visited cell plus one more for every cell that splits in two.
    """
    if domain_size < 1:
        raise ValidationError("output domain is empty")
    if not conclusions:
        raise ValidationError("a rule set needs at least one rule")
    full = (1 << domain_size) - 1
    masks = []
    for i, q in enumerate(conclusions, start=1):
        q = list(q)
        if not q:
            raise ValidationError(f"rule {i} has an empty conclusion")
        if any(not 0 <= v < domain_size for v in q):
            raise ValidationError(f"rule {i} conclusion has values outside the output domain")
        masks.append(_bits(q))

    first = masks[0]
    entries: list[tuple[int, int]] = [(0, first)]
    if first != full:
        entries.append((1, full & ~first))
    operations = 1
    for j, q in enumerate(masks[1:], start=1):
        bit = 1 << j
        extended = []
        for neg, cell in entries:
            inside = cell & q
            operations += 1
            if inside == 0:
                extended.append((neg | bit, cell))
            elif inside == cell:
                extended.append((neg, cell))
            else:
                operations += 1
                extended.append((neg, inside))
                extended.append((neg | bit, cell & ~q))
        entries = extended
    # python ints are unbounded, so ordering by the mask is ordering by psi for any n
    entries.sort(key=lambda e: e[0])
    return PartitionIndex(
        n_rules=len(masks),
        domain_size=domain_size,
        negatives=tuple(e[0] for e in entries),
        cells=tuple(e[1] for e in entries),
        operations=operations,
    )
