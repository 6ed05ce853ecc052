import numpy as np
import pytest

from conftest import random_inputs, random_rules
from possrules.backprop import (
    Conflict,
    PremiseSolution,
    UnsupportedPremiseShape,
    distance_to_target,
    omega_system,
    reinfer,
    solve_omega,
    targeted_inputs,
)
from possrules.core import Domain, ValidationError, antipignistic_inverse, minmax_product
from possrules.inference import Proposition, Rule, RuleSet, infer_cells

# target b = (1,0), listed over (0,0), (0,1), (1,0), (1,1)
TARGET_10 = [0, 0, 1, 0]


def test_omega_system_shape(running_example):
    system = omega_system(running_example.stage("first"), TARGET_10)
    assert system.o_target.tolist() == [0, 0, 1, 0]
    assert system.m.tolist() == [
        [1, 0, 0, 1, 1, 0, 0, 1],
        [0, 1, 1, 0, 1, 0, 0, 1],
        [1, 0, 0, 1, 0, 1, 1, 0],
        [0, 1, 1, 0, 0, 1, 1, 0],
    ]


def test_backprop_single_target(running_example):
    first = running_example.stage("first")
    solution = solve_omega(omega_system(first, TARGET_10))
    assert solution.f_low.tolist() == [0, 1, 1, 0, 1, 0, 0, 1]
    assert solution.consistent
    inputs = targeted_inputs(first, solution)
    assert inputs["a1"].tolist() == [0, 1]
    assert inputs["a2"].tolist() == [1, 0]
    assert antipignistic_inverse(inputs["a1"]).tolist() == [0, 1]
    assert antipignistic_inverse(inputs["a2"]).tolist() == [1, 0]
    assert infer_cells(first, inputs).tolist() == [0, 0, 1, 0]
    assert distance_to_target(first, inputs, TARGET_10) == 0


def test_all_one_target(running_example):
    first = running_example.stage("first")
    solution = solve_omega(omega_system(first, [1, 1, 1, 1]))
    assert solution.f_low.tolist() == [1] * 8
    assert targeted_inputs(first, solution)["a1"].tolist() == [1, 1]
    open_rules = first.with_parameters([1] * 4, [1] * 4)
    solution = solve_omega(omega_system(open_rules, [1, 1, 1, 1]))
    assert solution.f_low.tolist() == [0] * 8
    assert solution.consistent


def test_unnormalized_target_rejected(running_example):
    with pytest.raises(ValidationError):
        omega_system(running_example.stage("first"), [0.5, 0, 0, 0])


def test_inconsistent_target_rejected(running_example):
    first = running_example.stage("first").with_parameters([0.2, 0.2, 0.2, 0.2], [0.2, 0.2, 0.2, 0.2])
    solution = solve_omega(omega_system(first, TARGET_10))
    assert not solution.consistent
    with pytest.raises(ValidationError):
        targeted_inputs(first, solution)


def test_invariants_on_random_parameterizations():
    rng = np.random.default_rng(21)
    consistent_seen = 0
    for _ in range(200):
        rules = random_rules(rng, int(rng.integers(1, 6)), int(rng.integers(2, 8)), max_props=1)
        inputs = random_inputs(rng, rules)
        cells = infer_cells(rules, inputs)
        if cells.max() != 1.0:
            continue
        target = cells[rules.cell_of_value]
        system = omega_system(rules, target)
        solution = solve_omega(system)
        assert np.all(solution.f_low <= solution.f_high)
        assert np.array_equal(reinfer(system, solution.f_low), reinfer(system, solution.f_high))
        assert solution.consistent
        consistent_seen += 1
        assert np.array_equal(reinfer(system, solution.f_low), system.o_target)
        from possrules.inference import premise_degrees

        actual = premise_degrees(rules, inputs).input_vector()
        assert np.all(solution.f_low <= actual)
    assert consistent_seen > 50


def test_consistency_matches_grid_oracle(running_example):
    first = running_example.stage("first").with_parameters([0.2, 0, 0.6, 0], [0, 0.4, 0, 0])
    grid = np.linspace(0, 1, 6)
    xs = np.stack(np.meshgrid(*[grid] * 8, indexing="ij"), axis=-1).reshape(-1, 8)
    outs = np.maximum(first.matrix[None, :, :], xs[:, None, :]).min(axis=2)
    reachable = {tuple(row) for row in np.round(outs[outs.max(axis=1) == 1.0], 10)}
    checked = 0
    for o in sorted(reachable):
        target = np.array(o)[first.cell_of_value]
        assert solve_omega(omega_system(first, target)).consistent
        checked += 1
    rng = np.random.default_rng(22)
    for _ in range(200):
        o = rng.choice(grid, size=4)
        o[rng.integers(4)] = 1.0
        solution = solve_omega(omega_system(first, o[first.cell_of_value]))
        if solution.consistent:
            assert np.allclose(minmax_product(first.matrix, solution.f_low), o)
        else:
            assert tuple(np.round(o, 10)) not in reachable
    assert checked > 10


def test_conflict():
    domains = {"a": Domain(("0", "1", "2")), "y": Domain(("0", "1"))}
    rules = RuleSet("conflict", "y", domains, [
        Rule((Proposition("a", frozenset({0})),), frozenset({0})),
        Rule((Proposition("a", frozenset({0, 1})),), frozenset({1})),
    ])
    solution = PremiseSolution(np.array([1, 0, 0.3, 1.0]), np.array([1, 0, 0.3, 1.0]), True)
    with pytest.raises(Conflict) as info:
        targeted_inputs(rules, solution)
    assert info.value.attribute == "a"
    assert info.value.value == "0"


def test_unsupported_premise_shape():
    domains = {"a": Domain(("0", "1")), "b": Domain(("0", "1")), "y": Domain(("0", "1"))}
    rules = RuleSet("joint", "y", domains, [
        Rule((Proposition("a", frozenset({0})), Proposition("b", frozenset({1}))), frozenset({0})),
        Rule((Proposition("a", frozenset({1})),), frozenset({1})),
    ])
    solution = solve_omega(omega_system(rules, [1, 0]))
    assert solution.consistent
    with pytest.raises(UnsupportedPremiseShape) as info:
        targeted_inputs(rules, solution)
    assert [c[0] for c in info.value.constraints] == [1, 2]
    assert info.value.constraints[0][1:] == (solution.f_low[0], solution.f_low[1])
