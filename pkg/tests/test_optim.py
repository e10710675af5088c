import numpy as np
import pytest

from apcgnn.autodiff import ShapeError
from apcgnn.optim import AdamState, adam_step


def reference_adam_scalar(grad_fn, w0, lr, steps, beta1=0.9, beta2=0.999, eps=1e-8):
    """Textbook scalar Adam recurrence, independent of the implementation."""
    w, m, v = w0, 0.0, 0.0
    for t in range(1, steps + 1):
        g = grad_fn(w)
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        w = w - lr * m_hat / (np.sqrt(v_hat) + eps)
    return w


def test_zero_gradient_leaves_parameters_unchanged():
    state = AdamState()
    params = {"w": np.array([[1.0, -2.0]])}
    out = adam_step(state, params, {"w": np.zeros((1, 2))}, lr=0.1)
    assert np.array_equal(out["w"], params["w"])


def test_first_step_is_signed_learning_rate():
    state = AdamState()
    g = np.array([[0.3, -4.0, 1e-3]])
    out = adam_step(state, {"w": np.zeros((1, 3))}, {"w": g}, lr=0.05)
    assert np.allclose(out["w"], -0.05 * np.sign(g), rtol=1e-4)


def test_hundred_steps_on_quadratic_converges_near_three():
    # f(w) = (w - 3)^2 from w0 = 1; the scalar recurrence lands at 3.0107.
    state = AdamState()
    params = {"w": np.ones((1, 1))}
    for _ in range(100):
        grad = {"w": 2.0 * (params["w"] - 3.0)}
        params = adam_step(state, params, grad, lr=0.05)
    assert abs(params["w"][0, 0] - 3.0) < 0.05
    # and the endpoint matches the independent scalar recurrence
    expected = reference_adam_scalar(lambda w: 2.0 * (w - 3.0), 1.0, 0.05, 100)
    assert params["w"][0, 0] == pytest.approx(expected, abs=1e-12)


def test_weight_decay_folds_into_gradient():
    p = np.array([[2.0, -1.0]])
    g = np.array([[0.5, 0.25]])
    with_decay = adam_step(AdamState(), {"w": p}, {"w": g}, lr=0.01, weight_decay=0.1)
    folded = adam_step(AdamState(), {"w": p}, {"w": g + 0.1 * p}, lr=0.01)
    assert np.array_equal(with_decay["w"], folded["w"])


def test_step_counter_increases():
    state = AdamState()
    params = {"w": np.ones((1, 1))}
    grads = {"w": np.ones((1, 1))}
    for expected in (1, 2, 3):
        params = adam_step(state, params, grads, lr=0.01)
        assert state.step_count == expected


def test_shape_mismatch_rejected():
    with pytest.raises(ShapeError):
        adam_step(AdamState(), {"w": np.ones((2, 2))}, {"w": np.ones((1, 2))}, lr=0.01)


def test_key_mismatch_rejected():
    with pytest.raises(ShapeError):
        adam_step(AdamState(), {"w": np.ones((1, 1))}, {"v": np.ones((1, 1))}, lr=0.01)


def test_nonpositive_learning_rate_rejected():
    with pytest.raises(ValueError):
        adam_step(AdamState(), {"w": np.ones((1, 1))}, {"w": np.ones((1, 1))}, lr=0.0)


def test_inputs_not_mutated():
    params = {"w": np.ones((1, 2))}
    grads = {"w": np.full((1, 2), 0.5)}
    adam_step(AdamState(), params, grads, lr=0.1, weight_decay=0.01)
    assert np.array_equal(params["w"], np.ones((1, 2)))
    assert np.array_equal(grads["w"], np.full((1, 2), 0.5))
