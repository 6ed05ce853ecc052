"""Possibilistic rules, their matrix relation and forward inference through cascades."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Domain, ValidationError, as_degrees, check_possibility, minmax_product
from .partition import PartitionIndex, build_partition


@dataclass(frozen=True)
class Proposition:
    """"attribute(x) in values", with values given as domain indices."""

    attribute: str
    values: frozenset[int]


@dataclass(frozen=True)
class Rule:
    premise: tuple[Proposition, ...]
    conclusion: frozenset[int]
    s: float = 0.0
    r: float = 0.0


@dataclass(frozen=True)
class PremiseDegrees:
    """lam[i] = possibility of premise i, rho[i] = possibility of its negation."""

    lam: np.ndarray
    rho: np.ndarray

    def input_vector(self) -> np.ndarray:
        """Interleaved (lam_1, rho_1, ..., lam_n, rho_n)."""
        out = np.empty(2 * self.lam.size)
        out[0::2] = self.lam
        out[1::2] = self.rho
        return out


class RuleSet:
    """n rules sharing one output attribute.

    `domains` maps every attribute the rules mention (premise attributes and the
    output) to its Domain. Instances are treated as immutable; use
    `with_parameters` to get a copy with new (s, r) values.
    """

    def __init__(self, name: str, output: str, domains: Mapping[str, Domain], rules: Sequence[Rule],
                 tau_group: str | None = None):
        self.name = name
        self.output = output
        self.domains = dict(domains)
        self.rules = tuple(rules)
        self.tau_group = tau_group or name
        if output not in self.domains:
            raise ValidationError(f"rule set {name!r}: output attribute {output!r} has no domain")
        if not self.rules:
            raise ValidationError(f"rule set {name!r} has no rules")
        out_size = self.domains[output].size
        for i, rule in enumerate(self.rules, start=1):
            if not rule.premise:
                raise ValidationError(f"rule set {name!r}, rule {i}: empty premise")
            if not rule.conclusion:
                raise ValidationError(f"rule set {name!r}, rule {i}: empty conclusion")
            if any(not 0 <= v < out_size for v in rule.conclusion):
                raise ValidationError(f"rule set {name!r}, rule {i}: conclusion outside output domain")
            if not (0.0 <= rule.s <= 1.0 and 0.0 <= rule.r <= 1.0):
                raise ValidationError(f"rule set {name!r}, rule {i}: parameters must lie in [0, 1]")
            for prop in rule.premise:
                if prop.attribute not in self.domains:
                    raise ValidationError(f"rule set {name!r}, rule {i}: undeclared attribute {prop.attribute!r}")
                if prop.attribute == output:
                    raise ValidationError(f"rule set {name!r}, rule {i}: premise uses the output attribute")
                size = self.domains[prop.attribute].size
                if not prop.values or any(not 0 <= v < size for v in prop.values):
                    raise ValidationError(
                        f"rule set {name!r}, rule {i}: proposition on {prop.attribute!r} has an empty or "
                        "out-of-domain value set")
        self._partition: PartitionIndex | None = None

    def __repr__(self):
        return f"RuleSet({self.name!r}, output={self.output!r}, rules={len(self.rules)})"

    @property
    def n(self) -> int:
        return len(self.rules)

    @property
    def output_domain(self) -> Domain:
        return self.domains[self.output]

    @property
    def input_attributes(self) -> list[str]:
        seen = []
        for rule in self.rules:
            for prop in rule.premise:
                if prop.attribute not in seen:
                    seen.append(prop.attribute)
        return seen

    @property
    def partition(self) -> PartitionIndex:
        if self._partition is None:
            self._partition = build_partition([rule.conclusion for rule in self.rules], self.output_domain.size)
        return self._partition

    @property
    def s(self) -> np.ndarray:
        return np.array([rule.s for rule in self.rules])

    @property
    def r(self) -> np.ndarray:
        return np.array([rule.r for rule in self.rules])

    def with_parameters(self, s: Iterable[float], r: Iterable[float]) -> "RuleSet":
        rules = [replace(rule, s=float(si), r=float(ri)) for rule, si, ri in zip(self.rules, s, r)]
        if len(rules) != self.n:
            raise ValidationError("parameter vectors must have one entry per rule")
        out = RuleSet(self.name, self.output, self.domains, rules, self.tau_group)
        out._partition = self._partition
        return out

    @cached_property
    def _premise_masks(self):
        out = []
        for rule in self.rules:
            props = []
            for prop in rule.premise:
                mask = np.zeros(self.domains[prop.attribute].size, dtype=bool)
                mask[list(prop.values)] = True
                props.append((prop.attribute, mask, ~mask))
            out.append(props)
        return out

    @cached_property
    def sign_matrix(self) -> np.ndarray:
        return self.partition.sign_matrix()

    @cached_property
    def cell_of_value(self) -> np.ndarray:
        return self.partition.cell_of_value()

    @cached_property
    def matrix(self) -> np.ndarray:
        return inference_matrix(self)

    def warnings(self) -> list[str]:
        """Rules that can produce a non-normalized output distribution."""
        out = []
        size = self.output_domain.size
        for i, rule in enumerate(self.rules, start=1):
            if len(rule.conclusion) == size:
                out.append(f"rule set {self.name!r}, rule {i}: conclusion covers the whole output domain; "
                           "the rule is incoherent when its premise is not fully possible")
        return out


def premise_degrees(rules: RuleSet, inputs: Mapping[str, np.ndarray], renormalize: bool = False) -> PremiseDegrees:
    """lam_i = min over propositions of Pi(P), rho_i = max over propositions of Pi(complement of P)."""
    checked = {}
    for attr in rules.input_attributes:
        if attr not in inputs:
            raise ValidationError(f"rule set {rules.name!r}: no input distribution for attribute {attr!r}")
        pi = check_possibility(inputs[attr], renormalize, name=f"input distribution of {attr!r}")
        if pi.size != rules.domains[attr].size:
            raise ValidationError(f"input distribution of {attr!r} has {pi.size} degrees, "
                                  f"domain has {rules.domains[attr].size}")
        checked[attr] = pi
    lam = np.empty(rules.n)
    rho = np.empty(rules.n)
    for i, props in enumerate(rules._premise_masks):
        low, high = 1.0, 0.0
        for attr, inside, outside in props:
            pi = checked[attr]
            low = min(low, float(pi[inside].max()))
            if outside.any():
                high = max(high, float(pi[outside].max()))
        lam[i] = low
        rho[i] = high
    return PremiseDegrees(lam, rho)


def _interleave(on_top: np.ndarray, top_values: np.ndarray, bot_values: np.ndarray) -> np.ndarray:
    omega, n = on_top.shape
    out = np.ones((omega, 2 * n))
    out[:, 0::2] = np.where(on_top, top_values[None, :], 1.0)
    out[:, 1::2] = np.where(on_top, 1.0, bot_values[None, :])
    return out


def inference_matrix(rules: RuleSet) -> np.ndarray:
    """omega x 2n matrix: row mu has (s_j, 1) at rule j if mu is inside Q_j, else (1, r_j)."""
    return _interleave(rules.sign_matrix, rules.s, rules.r)


def infer_cells(rules: RuleSet, inputs: Mapping[str, np.ndarray], renormalize: bool = False) -> np.ndarray:
    """Output vector O, one degree per partition cell."""
    degrees = premise_degrees(rules, inputs, renormalize)
    return minmax_product(rules.matrix, degrees.input_vector())


def infer(rules: RuleSet, inputs: Mapping[str, np.ndarray], renormalize: bool = False) -> np.ndarray:
    """Output possibility distribution over the output domain, in label order."""
    return infer_cells(rules, inputs, renormalize)[rules.cell_of_value]


def direct_inference(rules: RuleSet, inputs: Mapping[str, np.ndarray]) -> np.ndarray:
    """Rule-by-rule min combination, without the partition. Slow; used as a reference."""
    degrees = premise_degrees(rules, inputs)
    size = rules.output_domain.size
    out = np.ones(size)
    for i, rule in enumerate(rules.rules):
        alpha = max(rule.s, degrees.lam[i])
        beta = max(rule.r, degrees.rho[i])
        for u in range(size):
            out[u] = min(out[u], alpha if u in rule.conclusion else beta)
    return out


def chain(outputs: np.ndarray, next_rules: RuleSet, attribute: str | None = None,
          renormalize: bool = False, other_inputs: Mapping[str, np.ndarray] | None = None) -> np.ndarray:
    """Feed an inferred distribution into the next rule set and infer from it."""
    if attribute is None:
        candidates = next_rules.input_attributes
        if len(candidates) != 1:
            raise ValidationError(f"rule set {next_rules.name!r} reads {candidates}; name the chained attribute")
        attribute = candidates[0]
    if attribute not in next_rules.domains or next_rules.domains[attribute].size != len(outputs):
        raise ValidationError(f"chained distribution does not match the domain of {attribute!r}")
    inputs = dict(other_inputs or {})
    inputs[attribute] = _chained(outputs, attribute, renormalize)
    return infer(next_rules, inputs, renormalize)


def _chained(outputs: np.ndarray, attribute: str, renormalize: bool) -> np.ndarray:
    arr = as_degrees(outputs, f"inferred distribution of {attribute!r}")
    if arr.max() != 1.0 and not renormalize:
        raise ValidationError(f"inferred distribution of {attribute!r} is not normalized "
                              f"(max {arr.max():.12g}); enable renormalize to divide by the max")
    return check_possibility(arr, renormalize, name=f"inferred distribution of {attribute!r}")


class Cascade:
    """Rule sets listed in inference order; a stage may read attributes produced by earlier stages."""

    def __init__(self, attributes: Mapping[str, Domain], stages: Sequence[RuleSet]):
        self.attributes = dict(attributes)
        self.stages = list(stages)
        produced: set[str] = set()
        for stage in self.stages:
            for attr, dom in stage.domains.items():
                if attr in self.attributes and self.attributes[attr] != dom:
                    raise ValidationError(f"rule set {stage.name!r} disagrees on the domain of {attr!r}")
            if stage.output in produced:
                raise ValidationError(f"attribute {stage.output!r} is produced by two rule sets")
            produced.add(stage.output)
        order = {stage.output: i for i, stage in enumerate(self.stages)}
        for i, stage in enumerate(self.stages):
            for attr in stage.input_attributes:
                if attr in order and order[attr] > i:
                    raise ValidationError(f"rule set {stage.name!r} reads {attr!r} before it is inferred")

    def __repr__(self):
        return f"Cascade({[s.name for s in self.stages]})"

    @property
    def produced(self) -> list[str]:
        return [stage.output for stage in self.stages]

    @property
    def input_attributes(self) -> list[str]:
        produced = set(self.produced)
        out = []
        for stage in self.stages:
            for attr in stage.input_attributes:
                if attr not in produced and attr not in out:
                    out.append(attr)
        return out

    @property
    def final_outputs(self) -> list[str]:
        consumed = {attr for stage in self.stages for attr in stage.input_attributes}
        return [attr for attr in self.produced if attr not in consumed]

    def chained_attributes(self, stage: RuleSet) -> list[str]:
        produced = set(self.produced)
        return [attr for attr in stage.input_attributes if attr in produced]

    def stage(self, name: str) -> RuleSet:
        for stage in self.stages:
            if stage.name == name:
                return stage
        raise ValidationError(f"no rule set named {name!r}")

    def with_stages(self, stages: Sequence[RuleSet]) -> "Cascade":
        return Cascade(self.attributes, stages)

    def infer(self, inputs: Mapping[str, np.ndarray], renormalize: bool = False,
              timings: dict[str, float] | None = None) -> dict[str, np.ndarray]:
        """Run every stage; returns inferred distributions keyed by output attribute."""
        known = {attr: check_possibility(inputs[attr], renormalize, name=f"input distribution of {attr!r}")
                 for attr in self.input_attributes if attr in inputs}
        missing = [attr for attr in self.input_attributes if attr not in known]
        if missing:
            raise ValidationError(f"missing input distributions for {missing}")
        consumed = {attr for stage in self.stages for attr in stage.input_attributes}
        results = {}
        for stage in self.stages:
            started = time.perf_counter()
            out = infer(stage, known)
            if timings is not None:
                timings[stage.name] = timings.get(stage.name, 0.0) + time.perf_counter() - started
            if out.max() != 1.0:
                warnings.warn(f"rule set {stage.name!r} produced a non-normalized distribution", stacklevel=2)
            results[stage.output] = out
            if stage.output in consumed:
                known[stage.output] = _chained(out, stage.output, renormalize)
        return results
