import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apcgnn import autodiff as ad
from apcgnn.autodiff import ShapeError, Tape, TapeError, Tensor, backward

from helpers import finite_difference, relative_error


def triple_loop_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestMatmul:
    def test_identity(self):
        m = [[1.0, 2.0], [3.0, 4.0]]
        out = ad.matmul(Tensor(np.eye(2)), Tensor(m))
        assert np.array_equal(out.value, m)

    def test_hand_case(self):
        out = ad.matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]]))
        assert out.value[0, 0] == pytest.approx(11.0)

    def test_against_triple_loop(self, rng):
        a = rng.uniform(-2, 2, size=(3, 4))
        b = rng.uniform(-2, 2, size=(4, 2))
        out = ad.matmul(Tensor(a), Tensor(b))
        assert np.allclose(out.value, triple_loop_matmul(a, b), atol=1e-12)

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestActivations:
    def test_relu(self):
        out = ad.relu(Tensor([[-1.0, 0.0, 2.0]]))
        assert np.array_equal(out.value, [[0.0, 0.0, 2.0]])

    def test_sigmoid_zero(self):
        assert ad.sigmoid(Tensor([[0.0]])).value[0, 0] == 0.5

    def test_sigmoid_extremes_stable(self):
        out = ad.sigmoid(Tensor([[-800.0, 800.0]])).value
        assert np.isfinite(out).all()
        assert 0.0 <= out[0, 0] < 1e-15
        assert out[0, 1] == 1.0  # saturates, no overflow

    def test_softmax_symmetry(self):
        out = ad.softmax_rows(Tensor([[0.0, 0.0, 0.0]]))
        assert np.allclose(out.value, 1 / 3, atol=1e-15)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_softmax_rows_sum_to_one(self, seed):
        x = np.random.default_rng(seed).uniform(-50, 50, size=(4, 5))
        rows = ad.softmax_rows(Tensor(x)).value.sum(axis=1)
        assert np.all(np.abs(rows - 1.0) <= 1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_ranges(self, seed):
        x = np.random.default_rng(seed).uniform(-20, 20, size=(3, 4))
        assert ad.sigmoid(Tensor(x)).value.min() > 0.0
        assert ad.sigmoid(Tensor(x)).value.max() < 1.0
        assert ad.relu(Tensor(x)).value.min() >= 0.0


class TestConstruction:
    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            Tensor([[np.nan]])

    def test_inf_rejected(self):
        with pytest.raises(ValueError):
            Tensor([[np.inf, 1.0]])

    def test_one_dimensional_rejected(self):
        with pytest.raises(ShapeError):
            Tensor([1.0, 2.0])


class TestBackward:
    def test_sum_gradient_is_ones(self):
        tape = Tape()
        w = tape.watch(np.arange(4.0).reshape(2, 2))
        backward(ad.sum_all(w))
        assert np.array_equal(w.grad, np.ones((2, 2)))

    def test_square_norm_gradient_is_two_w(self):
        tape = Tape()
        w = tape.watch([[1.0, -2.0]])
        backward(ad.square_norm(w))
        assert np.array_equal(w.grad, [[2.0, -4.0]])

    def test_reuse_accumulates_both_paths(self):
        tape = Tape()
        x = tape.watch([[3.0]])
        backward(ad.sum_all(ad.add(x, x)))
        assert np.array_equal(x.grad, [[2.0]])

    def test_unused_parameter_gets_exact_zero(self):
        tape = Tape()
        used = tape.watch([[1.0, 2.0]])
        unused = tape.watch([[5.0, 6.0]])
        backward(ad.sum_all(used))
        assert np.array_equal(unused.grad, np.zeros((1, 2)))

    def test_non_scalar_loss_rejected(self):
        tape = Tape()
        w = tape.watch(np.ones((2, 2)))
        with pytest.raises(TapeError):
            backward(ad.relu(w))

    def test_untaped_loss_rejected(self):
        with pytest.raises(TapeError):
            backward(Tensor([[1.0]]))

    def test_double_backward_rejected(self):
        tape = Tape()
        w = tape.watch(np.ones((1, 1)))
        loss = ad.sum_all(w)
        backward(loss)
        with pytest.raises(TapeError):
            backward(loss)

    def test_mixed_tapes_rejected(self):
        a = Tape().watch(np.ones((2, 2)))
        b = Tape().watch(np.ones((2, 2)))
        with pytest.raises(TapeError):
            ad.add(a, b)


# ---------------------------------------------------------------------------
# Central-difference gradient property for every primitive.

def _mix(rng, shape):
    # Fixed random mixing constant so reductions see asymmetric gradients.
    return Tensor(rng.uniform(0.5, 1.5, size=shape))


def _case_matmul(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    b = rng.uniform(-2, 2, size=(4, 2))
    return (a, b), lambda ta, tb: ad.matmul(ta, tb)


def _case_add(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    b = rng.uniform(-2, 2, size=(3, 4))
    return (a, b), lambda ta, tb: ad.add(ta, tb)


def _case_add_bias(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    b = rng.uniform(-2, 2, size=(1, 4))
    return (a, b), lambda ta, tb: ad.add(ta, tb)


def _case_sub(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    b = rng.uniform(-2, 2, size=(3, 4))
    return (a, b), lambda ta, tb: ad.sub(ta, tb)


def _case_mul(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    b = rng.uniform(-2, 2, size=(3, 4))
    return (a, b), lambda ta, tb: ad.mul(ta, tb)


def _case_mul_column(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    b = rng.uniform(-2, 2, size=(3, 1))
    return (a, b), lambda ta, tb: ad.mul(ta, tb)


def _case_scale(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    return (a,), lambda ta: ad.scale(ta, -1.7)


def _case_relu(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    a[np.abs(a) < 1e-3] = 0.5  # keep away from the kink
    return (a,), lambda ta: ad.relu(ta)


def _case_sigmoid(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    return (a,), lambda ta: ad.sigmoid(ta)


def _case_softmax(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    mix = _mix(rng, (3, 4))
    return (a,), lambda ta: ad.mul(ad.softmax_rows(ta), mix)


def _case_mean(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    return (a,), lambda ta: ad.mean_all(ta)


def _case_square_norm(rng):
    a = rng.uniform(-2, 2, size=(3, 4))
    return (a,), lambda ta: ad.square_norm(ta)


def _case_cross_entropy(rng):
    logits = rng.uniform(-2, 2, size=(5, 3))
    labels = rng.integers(0, 3, size=5)
    mask = np.array([True, False, True, True, False])
    return (logits,), lambda tl: ad.softmax_cross_entropy(tl, labels, mask)


def _case_gather(rng):
    a = rng.uniform(-2, 2, size=(4, 3))
    idx = np.array([0, 2, 2, 1, 0])  # repeats exercise accumulation
    mix = _mix(rng, (5, 3))
    return (a,), lambda ta: ad.mul(ad.gather_rows(ta, idx), mix)


def _case_scatter(rng):
    a = rng.uniform(-2, 2, size=(5, 3))
    idx = np.array([0, 2, 2, 1, 0])
    mix = _mix(rng, (4, 3))
    return (a,), lambda ta: ad.mul(ad.scatter_add_rows(ta, idx, 4), mix)


def _case_concat(rng):
    a = rng.uniform(-2, 2, size=(3, 2))
    b = rng.uniform(-2, 2, size=(3, 4))
    mix = _mix(rng, (3, 6))
    return (a, b), lambda ta, tb: ad.mul(ad.concat_cols(ta, tb), mix)


OP_CASES = [
    _case_matmul, _case_add, _case_add_bias, _case_sub, _case_mul,
    _case_mul_column, _case_scale, _case_relu, _case_sigmoid, _case_softmax,
    _case_mean, _case_square_norm, _case_cross_entropy, _case_gather,
    _case_scatter, _case_concat,
]


@pytest.mark.parametrize("case", OP_CASES, ids=lambda c: c.__name__[6:])
@pytest.mark.parametrize("seed", range(8))
def test_primitive_gradients_match_finite_differences(case, seed):
    # 16 primitives x 8 seeds = 128 random instances.
    rng = np.random.default_rng(seed * 1009 + 17)
    inputs, build = case(rng)
    tape = Tape()
    leaves = [tape.watch(x) for x in inputs]
    backward(ad.sum_all(build(*leaves)))
    for pos, x in enumerate(inputs):
        def loss_at(values, pos=pos):
            replaced = list(inputs)
            replaced[pos] = values
            fresh_rng = np.random.default_rng(seed * 1009 + 17)
            fresh_inputs, fresh_build = case(fresh_rng)
            tensors = [Tensor(v) for v in replaced]
            return float(ad.sum_all(fresh_build(*tensors)).value[0, 0])

        fd = finite_difference(loss_at, x)
        analytic = leaves[pos].grad
        worst = max(
            relative_error(analytic[idx], fd[idx]) for idx in np.ndindex(x.shape)
        )
        assert worst < 1e-4
