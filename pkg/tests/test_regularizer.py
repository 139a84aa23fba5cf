import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sparse_diffusion.regularizer import RegularizerSpec, eval_f, subgradient, subgradient_max_norm

ZA = RegularizerSpec("l1")
RZA = RegularizerSpec("reweighted_l1", 0.1)
NONE = RegularizerSpec("none")

vectors = st.integers(1, 10).flatmap(
    lambda m: arrays(np.float64, m, elements=st.floats(-5, 5, allow_nan=False, allow_subnormal=False)))


def test_eval_examples():
    assert eval_f(ZA, [1, -2, 0]) == 3
    assert eval_f(RZA, np.zeros(4)) == 0
    assert eval_f(RZA, [1, 0, 0, 0]) == pytest.approx(1 / 1.1)
    assert eval_f(NONE, [1, 2]) == 0


def test_subgradient_examples():
    np.testing.assert_array_equal(subgradient(ZA, [3, -0.5, 0]), [1, -1, 0])
    np.testing.assert_allclose(subgradient(RZA, [1.0]), [1 / 1.1])
    for spec in (ZA, RZA, NONE):
        np.testing.assert_array_equal(subgradient(spec, np.zeros(5)), np.zeros(5))


def test_max_norm_examples():
    assert subgradient_max_norm(ZA, 4) == 2
    assert subgradient_max_norm(RZA, 4) == pytest.approx(20)
    assert subgradient_max_norm(NONE, 4) == 0


def test_spec_validation_and_names():
    with pytest.raises(ValueError):
        RegularizerSpec("reweighted_l1")
    with pytest.raises(ValueError):
        RegularizerSpec("reweighted_l1", 0.0)
    with pytest.raises(ValueError):
        RegularizerSpec("l2")
    assert RegularizerSpec.from_name("rza", 0.2) == RegularizerSpec("reweighted_l1", 0.2)
    assert RegularizerSpec.from_name("ZA", 0.2) == ZA
    with pytest.raises(ValueError):
        RegularizerSpec.from_name("lasso")


def test_stacked_rows():
    W = np.array([[1.0, -1.0], [0.0, 2.0]])
    np.testing.assert_array_equal(eval_f(ZA, W), [2.0, 2.0])
    np.testing.assert_array_equal(subgradient(ZA, W), np.sign(W))


@given(vectors, st.data())
def test_l1_subgradient_inequality(x, data):
    y = data.draw(arrays(np.float64, x.shape, elements=st.floats(-5, 5, allow_nan=False)))
    assert eval_f(ZA, x + y) - eval_f(ZA, x) >= subgradient(ZA, x) @ y - 1e-12


@given(vectors, st.data())
def test_reweighted_subgradient_inequality_on_frozen_weights(x, data):
    # the reweighted penalty is the weighted l1 norm with weights 1/(eps+|x|) frozen at x
    y = data.draw(arrays(np.float64, x.shape, elements=st.floats(-5, 5, allow_nan=False)))
    weights = 1.0 / (RZA.epsilon + np.abs(x))
    g = subgradient(RZA, x)
    assert np.sum(weights * np.abs(x + y)) - np.sum(weights * np.abs(x)) >= g @ y - 1e-12
    np.testing.assert_allclose(np.sum(weights * np.abs(x)), eval_f(RZA, x), rtol=1e-12)


def test_subgradient_inequality_sampling_1000_trials(rng):
    for _ in range(1000):
        m = rng.integers(1, 11)
        x = rng.normal(size=m) * rng.choice([0, 1], size=m)
        y = rng.normal(size=m)
        assert eval_f(ZA, x + y) - eval_f(ZA, x) >= subgradient(ZA, x) @ y - 1e-12


@given(vectors)
def test_componentwise_bounds(w):
    assert np.all(np.abs(subgradient(ZA, w)) <= 1)
    assert np.all(np.abs(subgradient(RZA, w)) <= 1 / RZA.epsilon)
    for spec in (ZA, RZA, NONE):
        assert np.linalg.norm(subgradient(spec, w)) <= subgradient_max_norm(spec, w.size) + 1e-12


@given(vectors)
def test_large_epsilon_limit(w):
    eps = 1e6
    spec = RegularizerSpec("reweighted_l1", eps)
    np.testing.assert_allclose(eps * subgradient(spec, w), np.sign(w), atol=1e-5)


@given(vectors)
def test_sign_pattern_preserved(w):
    for spec in (ZA, RZA):
        np.testing.assert_array_equal(np.sign(subgradient(spec, w)), np.sign(w))


@given(vectors)
def test_penalties_nonnegative(w):
    for spec in (ZA, RZA, NONE):
        assert eval_f(spec, w) >= 0
