import itertools

import numpy as np
import pytest

from possrules.core import (
    Domain,
    ValidationError,
    antipignistic,
    antipignistic_inverse,
    argmax_label,
    maxeps_product,
    min_specificity,
    minmax_product,
    necessity_measure,
    possibility_measure,
    to_possibility,
)

AMBIGUOUS_P = [0.15, 0.14, 0.13, 0.12, 0.11, 0.09, 0.08, 0.07, 0.06, 0.05]
PEAKED_P = [0.91] + [0.01] * 9


def test_domain_rejects_duplicates_and_empty():
    with pytest.raises(ValidationError):
        Domain(("a", "a"))
    with pytest.raises(ValidationError):
        Domain(())
    assert Domain(("x", "y")).index("y") == 1


def test_possibility_measure():
    assert possibility_measure([1, 0.1], {0}) == 1
    assert possibility_measure([1, 0.1], {1}) == 0.1
    assert possibility_measure([0.3, 0.7, 1.0], set()) == 0
    assert possibility_measure([0.3, 0.7, 1.0], {0, 1}) == 0.7
    with pytest.raises(IndexError):
        possibility_measure([1, 0.2], {2})


def test_necessity_measure():
    assert necessity_measure([1, 0.1], {0}) == pytest.approx(0.9, abs=1e-15)
    assert necessity_measure([0.2, 1, 0.4], {0, 1, 2}) == 1
    assert necessity_measure([0.2, 1, 0.4], set()) == 0


def _naive_minmax(a, x):
    return np.array([min(max(a[i, j], x[j]) for j in range(a.shape[1])) for i in range(a.shape[0])])


def _naive_maxeps(at, y):
    return np.array([max((y[i] if at[l, i] < y[i] else 0.0) for i in range(at.shape[1])) for l in range(at.shape[0])])


def test_minmax_product_example():
    m = np.array([[1, 0, 0, 1, 1, 0, 0, 1], [0, 1, 1, 0, 1, 0, 0, 1],
                  [1, 0, 0, 1, 0, 1, 1, 0], [0, 1, 1, 0, 0, 1, 1, 0]], dtype=float)
    i = [1, 0.01, 0.01, 1, 0.04, 1, 1, 0.04]
    assert minmax_product(m, i).tolist() == [0.01, 1, 0.01, 0.04]
    assert minmax_product(np.ones((3, 4)), np.random.default_rng(0).random(4)).tolist() == [1, 1, 1]


def test_products_match_scalar_loops():
    rng = np.random.default_rng(1)
    for _ in range(40):
        rows, cols = rng.integers(1, 65, size=2)
        a = rng.random((rows, cols))
        a[rng.random((rows, cols)) < 0.3] = 1.0
        x = rng.random(cols)
        assert np.array_equal(minmax_product(a, x), _naive_minmax(a, x))
        y = rng.random(cols)
        assert np.array_equal(maxeps_product(a, y), _naive_maxeps(a, y))


def test_maxeps_strict_comparison_and_zero():
    assert maxeps_product([[0.5, 0.2]], [0.5, 0.3]).tolist() == [0.3]
    assert maxeps_product(np.zeros((2, 3)), np.zeros(3)).tolist() == [0, 0]


def test_product_shape_errors():
    with pytest.raises(ValueError):
        minmax_product(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        maxeps_product(np.ones((2, 3)), np.ones(4))


def test_antipignistic_examples():
    assert np.round(antipignistic(PEAKED_P), 2).tolist() == [1.0] + [0.1] * 9
    assert np.round(antipignistic(AMBIGUOUS_P), 2).tolist() == [1.00, 0.99, 0.97, 0.94, 0.90, 0.80, 0.74, 0.67,
                                                                 0.59, 0.50]
    assert np.allclose(antipignistic([0.25] * 4), 1.0)


def test_antipignistic_unsorts_to_label_order():
    assert np.round(antipignistic([0.1, 0.7, 0.2]), 12).tolist() == [0.3, 1.0, 0.5]


def test_antipignistic_inverse():
    assert np.allclose(antipignistic_inverse([1, 0.1]), [0.95, 0.05], atol=1e-15)
    assert np.allclose(antipignistic_inverse([1, 1, 1]), [1 / 3] * 3)
    with pytest.raises(ValidationError):
        antipignistic_inverse([0.5, 0.2])


def test_min_specificity_examples():
    assert np.round(min_specificity(PEAKED_P), 2).tolist() == [1.00, 0.09, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03,
                                                                0.02, 0.01]
    assert np.round(min_specificity(AMBIGUOUS_P), 2).tolist() == [1.00, 0.85, 0.71, 0.58, 0.46, 0.35, 0.26, 0.18,
                                                                   0.11, 0.05]
    assert min_specificity([0, 1, 0]).tolist() == [0, 1, 0]


def test_transform_round_trip_and_dominance():
    rng = np.random.default_rng(2)
    for _ in range(300):
        p = rng.dirichlet(np.ones(rng.integers(2, 12)))
        pi = antipignistic(p)
        assert np.max(np.abs(antipignistic_inverse(pi) - p)) < 1e-12
        assert np.all(min_specificity(p) <= pi + 1e-15)


def test_shape_preservation():
    rng = np.random.default_rng(3)
    for _ in range(200):
        p = np.sort(rng.dirichlet(np.ones(6)))[::-1]
        pi = antipignistic(p)
        assert pi[0] == 1.0
        for i in range(5):
            assert (p[i] > p[i + 1]) == (pi[i] > pi[i + 1])


def test_necessity_probability_possibility_framing():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        p = rng.dirichlet(np.ones(n))
        for pi in (antipignistic(p), min_specificity(p)):
            for size in range(n + 1):
                for subset in itertools.combinations(range(n), size):
                    prob = p[list(subset)].sum()
                    assert necessity_measure(pi, subset) <= prob + 1e-12
                    assert prob <= possibility_measure(pi, subset) + 1e-12


def test_validation_and_renormalize():
    with pytest.raises(ValidationError):
        antipignistic([0.5, 0.6])
    assert np.allclose(antipignistic([1, 1], renormalize=True), [1, 1])
    with pytest.raises(ValidationError):
        to_possibility([0.5, 0.2])
    assert to_possibility([0.5, 0.25], renormalize=True).tolist() == [1.0, 0.5]
    with pytest.raises(ValidationError):
        to_possibility([1.2, 1.0])


def test_argmax_label_reports_ties():
    assert argmax_label([0.1, 1.0, 0.3]) == 1
    assert argmax_label([1.0, 1.0]) is None
