"""Running inference backwards: from a wanted output distribution to input distributions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import ValidationError, maxeps_product, minmax_product
from .inference import RuleSet, infer_cells
from .learning import cell_maxima, chebyshev_distance, EquationSystem, upper_solution


class Conflict(ValueError):
    """Two rules demand incompatible degrees from the same attribute value."""

    def __init__(self, attribute: str, value: str, message: str):
        super().__init__(message)
        self.attribute = attribute
        self.value = value


class UnsupportedPremiseShape(ValueError):
    """Premises with several propositions; `constraints` holds (rule, lam*, rho*) triples."""

    def __init__(self, message: str, constraints: list[tuple[int, float, float]]):
        super().__init__(message)
        self.constraints = constraints


@dataclass(frozen=True)
class OmegaSystem:
    """o_target = m (min-max) X where X = (lam_1, rho_1, ..., lam_n, rho_n) is unknown."""

    m: np.ndarray
    o_target: np.ndarray
    signs: np.ndarray


@dataclass(frozen=True)
class PremiseSolution:
    f_low: np.ndarray
    f_high: np.ndarray
    consistent: bool

    def pick(self, which: str = "low") -> np.ndarray:
        if which not in ("low", "high"):
            raise ValidationError("pick must be 'low' or 'high'")
        return self.f_low if which == "low" else self.f_high


def omega_system(rules: RuleSet, target) -> OmegaSystem:
    o = cell_maxima(rules, target)
    if o.size and o.max() != 1.0:
        raise ValidationError("the target output distribution must be normalized")
    return OmegaSystem(rules.matrix, o, rules.sign_matrix)


def solve_omega(system: OmegaSystem) -> PremiseSolution:
    f_low = maxeps_product(system.m.T, system.o_target)
    f_high = upper_solution(system.signs, system.o_target)
    consistent = chebyshev_distance(EquationSystem(system.m, system.o_target)) == 0.0
    return PremiseSolution(f_low, f_high, consistent)


def targeted_inputs(rules: RuleSet, solution: PremiseSolution, pick: str = "low") -> dict[str, np.ndarray]:
    """Input distributions whose premise degrees equal the chosen solution.

    Each rule j with premise "a in P" asks for max over P = lam*_j and max off P = rho*_j.
    The returned distribution of each attribute is the greatest one meeting every
    upper bound those equalities imply; it satisfies the equalities whenever any
    distribution does, otherwise Conflict is raised.
    """
    if not solution.consistent:
        raise ValidationError("the target output cannot be reached with these rule parameters")
    x = solution.pick(pick)
    lam, rho = x[0::2], x[1::2]
    constraints = [(i + 1, float(lam[i]), float(rho[i])) for i in range(rules.n)]
    for i, rule in enumerate(rules.rules):
        if len(rule.premise) != 1:
            raise UnsupportedPremiseShape(
                f"rule {i + 1} of {rules.name!r} has {len(rule.premise)} propositions; only the premise "
                "degrees can be returned", constraints)
        if max(lam[i], rho[i]) != 1.0:
            raise ValidationError(f"rule {i + 1}: chosen solution has max(lam, rho) < 1, "
                                  "no normalized input can produce it")
    caps = {attr: np.ones(rules.domains[attr].size) for attr in rules.input_attributes}
    for i, rule in enumerate(rules.rules):
        prop = rule.premise[0]
        inside = np.zeros(caps[prop.attribute].size, dtype=bool)
        inside[list(prop.values)] = True
        cap = caps[prop.attribute]
        cap[inside] = np.minimum(cap[inside], lam[i])
        cap[~inside] = np.minimum(cap[~inside], rho[i])
    for i, rule in enumerate(rules.rules):
        prop = rule.premise[0]
        cap = caps[prop.attribute]
        inside = np.zeros(cap.size, dtype=bool)
        inside[list(prop.values)] = True
        labels = rules.domains[prop.attribute].labels
        for part, wanted in ((inside, lam[i]), (~inside, rho[i])):
            if not part.any():
                if wanted != 0.0:
                    raise Conflict(prop.attribute, "", f"rule {i + 1} needs a value outside the whole domain "
                                                       f"of {prop.attribute!r}")
                continue
            reached = float(cap[part].max())
            if reached != wanted:
                blocked = int(np.flatnonzero(part)[0])
                raise Conflict(prop.attribute, labels[blocked],
                               f"rule {i + 1} needs degree {wanted:.12g} on {prop.attribute!r} but other rules "
                               f"cap it at {reached:.12g} (first value {labels[blocked]!r})")
    return caps


def distance_to_target(rules: RuleSet, inputs: Mapping[str, np.ndarray], target) -> float:
    """L-infinity gap between the inferred cell vector and the target cell vector."""
    produced = infer_cells(rules, inputs)
    return float(np.abs(produced - cell_maxima(rules, target)).max())


def reinfer(system: OmegaSystem, x) -> np.ndarray:
    return minmax_product(system.m, x)
