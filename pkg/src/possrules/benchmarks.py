"""Rule-system generators for digit addition and Sudoku validity, synthetic classifier outputs, evaluation."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Domain, ValidationError, argmax_label, to_possibility
from .inference import Cascade, Proposition, Rule, RuleSet
from .learning import Sample
from .parallel import parallel_map

DIGITS = Domain(tuple(str(d) for d in range(10)))
BINARY = Domain(("0", "1"))


def _pair_label(*values) -> str:
    return "(" + ",".join(str(v) for v in values) + ")"


def _rule(attr: str, value: int, conclusion) -> Rule:
    return Rule((Proposition(attr, frozenset([value])),), frozenset(conclusion))


def addition_attributes(k: int) -> dict[str, Domain]:
    attrs = {f"a_{i}": DIGITS for i in range(1, 2 * k + 1)}
    attrs[f"c_{k}"] = Domain(tuple(_pair_label(u, v) for u in range(10) for v in range(10)))
    triples = Domain(tuple(_pair_label(u, v, w) for u in range(10) for v in range(10) for w in range(2)))
    for i in range(1, k):
        attrs[f"c_{i}"] = triples
    for i in range(1, k + 1):
        attrs[f"w_{i}"] = BINARY
        attrs[f"y_{i}"] = DIGITS
    attrs["y_0"] = BINARY
    return attrs


def addition_cascade(k: int) -> Cascade:
    """Rule system adding two k-digit numbers a_1..a_k and a_{k+1}..a_{2k} (a_k, a_{2k} are units).

    Stages come in inference order: c_k, w_k, then c_i, w_i for i = k-1 .. 1,
    then y_1 .. y_k and finally y_0. All parameters start at 0.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    attrs = addition_attributes(k)

    def build(name, rules, group):
        used = {p.attribute for rule in rules for p in rule.premise} | {name}
        return RuleSet(name, name, {a: attrs[a] for a in used}, rules, tau_group=group)

    def tuple_sum(i, label):
        return sum(int(part) for part in label.strip("()").split(","))

    stages = []
    units = [_rule(f"a_{k}", j, [j * 10 + v for v in range(10)]) for j in range(10)]
    units += [_rule(f"a_{2 * k}", j, [u * 10 + j for u in range(10)]) for j in range(10)]
    for i in range(k, 0, -1):
        c, w = f"c_{i}", f"w_{i}"
        if i == k:
            stages.append(build(c, units, "c"))
        else:
            rules = [_rule(f"a_{i}", j, [(j * 10 + v) * 2 + x for v in range(10) for x in range(2)])
                     for j in range(10)]
            rules += [_rule(f"a_{k + i}", j, [(u * 10 + j) * 2 + x for u in range(10) for x in range(2)])
                      for j in range(10)]
            rules.append(_rule(f"w_{i + 1}", 0, [(u * 10 + v) * 2 for u in range(10) for v in range(10)]))
            stages.append(build(c, rules, "c"))
        labels = attrs[c].labels
        overflow = frozenset(idx for idx, label in enumerate(labels) if tuple_sum(i, label) >= 10)
        carry = Rule((Proposition(c, overflow),), frozenset([1]))
        stages.append(build(w, [carry], "w"))
    for i in range(1, k + 1):
        c = f"c_{i}"
        labels = attrs[c].labels
        rules = []
        for j in range(10):
            values = frozenset(idx for idx, label in enumerate(labels) if tuple_sum(i, label) % 10 == j)
            rules.append(Rule((Proposition(c, values),), frozenset([j])))
        stages.append(build(f"y_{i}", rules, "y"))
    stages.append(build("y_0", [_rule("w_1", 0, [0])], "y"))
    return Cascade(attrs, stages)


def addition_targets(digits: Sequence[int], k: int) -> dict[str, int]:
    """Target label index of every produced attribute for the operand digits a_1..a_2k."""
    if len(digits) != 2 * k:
        raise ValidationError(f"expected {2 * k} digits, got {len(digits)}")
    targets = {}
    carry = 0
    for i in range(k, 0, -1):
        u, v = int(digits[i - 1]), int(digits[k + i - 1])
        if i == k:
            targets[f"c_{i}"] = u * 10 + v
        else:
            targets[f"c_{i}"] = (u * 10 + v) * 2 + carry
        total = u + v + carry
        carry = int(total >= 10)
        targets[f"w_{i}"] = carry
        targets[f"y_{i}"] = total % 10
    targets["y_0"] = carry
    return targets


def sudoku_constraints(side: int) -> list[tuple[int, int, int, int]]:
    """Cell pairs (i, j, i', j') that must differ: same row, same column or same box. 1-based."""
    box = {4: 2, 9: 3}.get(side)
    if box is None:
        raise ValidationError("side must be 4 or 9")
    found = []
    for i in range(1, side + 1):
        found += [(i, j, i, j2) for j in range(1, side + 1) for j2 in range(j + 1, side + 1)]
    for j in range(1, side + 1):
        found += [(i, j, i2, j) for i in range(1, side + 1) for i2 in range(i + 1, side + 1)]

    def row(s, i):
        return (s - 1) // box * box + (i - 1) // box + 1

    def col(s, i):
        return (s - 1) % box * box + (i - 1) % box + 1

    for s in range(1, side + 1):
        found += [(row(s, i), col(s, i), row(s, i2), col(s, i2))
                  for i in range(1, side + 1) for i2 in range(i + 1, side + 1)]
    return list(dict.fromkeys(found))


def sudoku_cascade(side: int) -> Cascade:
    """One rule set per constraint pair feeding a single validity rule on attribute c."""
    constraints = sudoku_constraints(side)
    cell = Domain(tuple(str(d) for d in range(side)))
    pair = Domain(tuple(_pair_label(u, v) for u in range(side) for v in range(side)))
    attrs = {f"a_{i}_{j}": cell for i in range(1, side + 1) for j in range(1, side + 1)}
    stages = []
    different = frozenset(u * side + v for u in range(side) for v in range(side) if u != v)
    premise = []
    for i, j, i2, j2 in constraints:
        left, right, name = f"a_{i}_{j}", f"a_{i2}_{j2}", f"b_{i}_{j}_{i2}_{j2}"
        attrs[name] = pair
        rules = [_rule(left, d, [d * side + v for v in range(side)]) for d in range(side)]
        rules += [_rule(right, d, [u * side + d for u in range(side)]) for d in range(side)]
        stages.append(RuleSet(name, name, {left: cell, right: cell, name: pair}, rules, tau_group="pair"))
        premise.append(Proposition(name, different))
    attrs["c"] = BINARY
    validity = Rule(tuple(premise), frozenset([1]))
    domains = {p.attribute: pair for p in premise}
    domains["c"] = BINARY
    stages.append(RuleSet("c", "c", domains, [validity], tau_group="valid"))
    return Cascade(attrs, stages)


def sudoku_targets(grid, valid: bool) -> dict[str, int]:
    grid = np.asarray(grid, dtype=int)
    side = grid.shape[0]
    targets = {f"b_{i}_{j}_{i2}_{j2}": int(grid[i - 1, j - 1]) * side + int(grid[i2 - 1, j2 - 1])
               for i, j, i2, j2 in sudoku_constraints(side)}
    targets["c"] = int(bool(valid))
    return targets


def sudoku_is_valid(grid) -> bool:
    grid = np.asarray(grid, dtype=int)
    return all(grid[i - 1, j - 1] != grid[i2 - 1, j2 - 1] for i, j, i2, j2 in sudoku_constraints(grid.shape[0]))


VALID_SUDOKU_4 = [[0, 1, 2, 3], [2, 3, 0, 1], [1, 0, 3, 2], [3, 2, 1, 0]]
INVALID_SUDOKU_4 = [[0, 1, 2, 3], [2, 3, 0, 1], [1, 0, 3, 2], [3, 2, 0, 1]]


@dataclass(frozen=True)
class SyntheticNoiseModel:
    """Classifier stand-in: mass `base` on the true label, the rest spread by softmaxed Gaussian noise.

    temperature 0 spreads the remainder uniformly; `flip` is the chance that the
    peak lands on a wrong label instead of the true one.
    """

    base: float = 1.0
    temperature: float = 0.0
    flip: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.flip <= 1.0 or self.temperature < 0:
            raise ValidationError("flip must lie in [0, 1] and temperature must be non-negative")


def synthetic_distributions(truth: Sequence[int], size: int, model: SyntheticNoiseModel,
                            rng: np.random.Generator | None = None) -> np.ndarray:
    """One probability row per true label index."""
    if not 1.0 / size < model.base <= 1.0:
        raise ValidationError(f"base mass must lie in (1/{size}, 1]")
    rng = np.random.default_rng(model.seed) if rng is None else rng
    truth = np.asarray(truth, dtype=int)
    rows = np.zeros((truth.size, size))
    for n, label in enumerate(truth):
        peak = label
        if model.flip and rng.random() < model.flip:
            peak = int(rng.choice([v for v in range(size) if v != label]))
        rest = [v for v in range(size) if v != peak]
        if model.temperature > 0:
            noise = rng.normal(size=size - 1) * model.temperature
            weights = np.exp(noise - noise.max())
            weights /= weights.sum()
        else:
            weights = np.full(size - 1, 1.0 / (size - 1))
        rows[n, rest] = (1.0 - model.base) * weights
        rows[n, peak] = model.base
        rows[n] /= rows[n].sum()
    return rows


@dataclass
class Dataset:
    """Probability rows for each input attribute plus the true label of every attribute."""

    attributes: list[str]
    probabilities: np.ndarray  # samples x attributes x labels
    labels: np.ndarray  # samples x attributes, true label indices
    targets: list[dict[str, int]]

    def samples(self, transform: str = "antipignistic") -> list[Sample]:
        out = []
        for probs, targets in zip(self.probabilities, self.targets):
            inputs = {attr: to_possibility(row, transform) for attr, row in zip(self.attributes, probs)}
            out.append(Sample(inputs, dict(targets)))
        return out


def addition_dataset(k: int, count: int, model: SyntheticNoiseModel) -> Dataset:
    rng = np.random.default_rng(model.seed)
    digits = rng.integers(0, 10, size=(count, 2 * k))
    probs = synthetic_distributions(digits.ravel(), 10, model, rng).reshape(count, 2 * k, 10)
    return Dataset([f"a_{i}" for i in range(1, 2 * k + 1)], probs, digits,
                   [addition_targets(row, k) for row in digits])


def sudoku_dataset(grids: Sequence, model: SyntheticNoiseModel) -> Dataset:
    rng = np.random.default_rng(model.seed)
    grids = np.asarray(grids, dtype=int)
    count, side = grids.shape[0], grids.shape[1]
    flat = grids.reshape(count, side * side)
    probs = synthetic_distributions(flat.ravel(), side, model, rng).reshape(count, side * side, side)
    attrs = [f"a_{i}_{j}" for i in range(1, side + 1) for j in range(1, side + 1)]
    return Dataset(attrs, probs, flat, [sudoku_targets(g, sudoku_is_valid(g)) for g in grids])


@dataclass
class EvalReport:
    accuracy: float
    correct: int
    total: int
    ambiguous: int
    stage_seconds: dict[str, float] = field(default_factory=dict)
    predictions: list[dict[str, int | None]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "correct": self.correct, "total": self.total,
                "ambiguous": self.ambiguous, "stage_seconds": self.stage_seconds}


def _evaluate_one(cascade: Cascade, attributes: Sequence[str], transform: str, sample: Sample):
    inputs = {attr: to_possibility(row, transform) for attr, row in sample.inputs.items()}
    timings: dict[str, float] = {}
    outputs = cascade.infer(inputs, timings=timings)
    picks = {attr: argmax_label(outputs[attr]) for attr in attributes}
    ambiguous = any(p is None for p in picks.values())
    correct = all(picks[attr] == sample.targets[attr] for attr in attributes)
    return correct, ambiguous, timings, picks


def evaluate(cascade: Cascade, samples: Sequence[Sample], transform: str = "none",
             attributes: Sequence[str] | None = None, jobs: int | None = 1) -> EvalReport:
    """Share of samples whose every final output has a unique argmax equal to the target.

    `transform` converts raw probability inputs first; "none" means inputs are already possibility degrees.
    """
    attributes = list(attributes or cascade.final_outputs)
    results = parallel_map(functools.partial(_evaluate_one, cascade, attributes, transform), samples, jobs)
    seconds: dict[str, float] = {}
    for _, _, timings, _ in results:
        for name, value in timings.items():
            seconds[name] = seconds.get(name, 0.0) + value
    correct = sum(1 for ok, _, _, _ in results if ok)
    total = len(results)
    return EvalReport(correct / total if total else 0.0, correct, total,
                      sum(1 for _, amb, _, _ in results if amb), seconds, [p for _, _, _, p in results])


def random_sudoku_grids(side: int, count: int, seed: int = 0) -> np.ndarray:
    """Alternating valid and corrupted grids; a corrupted grid has one cell overwritten with a clashing digit."""
    box = {4: 2, 9: 3}.get(side)
    if box is None:
        raise ValidationError("side must be 4 or 9")
    rng = np.random.default_rng(seed)
    pattern = np.array([[(box * (r % box) + r // box + c) % side for c in range(side)] for r in range(side)])
    grids = []
    for n in range(count):
        digits = rng.permutation(side)
        bands = rng.permutation(box)
        rows = [b * box + r for b in bands for r in rng.permutation(box)]
        stacks = rng.permutation(box)
        cols = [s * box + c for s in stacks for c in rng.permutation(box)]
        grid = digits[pattern[np.ix_(rows, cols)]]
        if n % 2:
            i, j = rng.integers(side, size=2)
            j2 = (j + 1 + rng.integers(side - 1)) % side
            grid = grid.copy()
            grid[i, j] = grid[i, j2]
        grids.append(grid)
    return np.array(grids)
