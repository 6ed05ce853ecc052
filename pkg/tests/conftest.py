from pathlib import Path

import pytest

from possrules.files import load_cascade, read_samples

FIXTURES = Path(__file__).parent / "fixtures"

# cell order of the first rule set: (1,1), (0,1), (1,0), (0,0)
CELL_LABELS = ["(1,1)", "(0,1)", "(1,0)", "(0,0)"]


@pytest.fixture
def running_example():
    return load_cascade(FIXTURES / "running_example.json")


@pytest.fixture
def running_samples(running_example):
    return read_samples(FIXTURES / "running_example_train.jsonl", running_example)


def random_rules(rng, n_rules, domain_size, n_inputs=3, input_size=4, max_props=2, params=True):
    """Random rule set over inputs x0..x{n_inputs-1} and output y."""
    from possrules.core import Domain
    from possrules.inference import Proposition, Rule, RuleSet

    domains = {f"x{i}": Domain(tuple(str(v) for v in range(input_size))) for i in range(n_inputs)}
    domains["y"] = Domain(tuple(str(v) for v in range(domain_size)))
    rules = []
    for _ in range(n_rules):
        props = []
        for attr in rng.choice(n_inputs, size=rng.integers(1, max_props + 1), replace=False):
            values = rng.choice(input_size, size=rng.integers(1, input_size + 1), replace=False)
            props.append(Proposition(f"x{attr}", frozenset(int(v) for v in values)))
        q = rng.choice(domain_size, size=rng.integers(1, domain_size + 1), replace=False)
        s, r = (rng.random(2) * rng.integers(0, 2)) if params else (0.0, 0.0)
        rules.append(Rule(tuple(props), frozenset(int(v) for v in q), float(s), float(r)))
    return RuleSet("random", "y", domains, rules)


def random_inputs(rng, rules):
    out = {}
    for attr in rules.input_attributes:
        size = rules.domains[attr].size
        pi = rng.choice([0.0, 0.1, 0.3, 0.5, 0.8, 1.0], size=size) if rng.random() < 0.5 else rng.random(size)
        pi[rng.integers(size)] = 1.0
        out[attr] = pi
    return out
