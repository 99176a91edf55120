"""Unit tests for the reverse-mode tensor core.

Every primitive gets a value check against hand arithmetic and a gradient
check against the central-difference oracle in conftest. Matmul is verified
first on its own, both in closed form and by finite differences, because the
other gradient checks use a matmul sandwich to reduce outputs to a scalar.
"""

import numpy as np
import pytest

from conftest import central_difference, max_relative_error

from memonet.errors import ShapeError
from memonet.tensor import (
    GradTape,
    Tensor,
    add,
    add_bias,
    bce_mean,
    clamp,
    concat_cols,
    concat_rows,
    elementwise_mul,
    flatten,
    gather_rows,
    matmul,
    relu,
    reshape,
    scale_rows,
    sigmoid,
    slice_cols,
)


class TestTensorBasics:
    def test_one_dimensional_input_becomes_a_row_vector(self):
        t = Tensor([1.0, 2.0, 3.0])
        assert t.shape == (1, 3)

    def test_higher_rank_input_is_rejected(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros((2, 2, 2)))

    def test_zeros_constructor(self):
        t = Tensor.zeros(3, 4)
        assert t.shape == (3, 4)
        assert not t.data.any()

    def test_backward_requires_scalar_loss(self):
        tape = GradTape()
        x = Tensor([[1.0, 2.0]])
        y = relu(tape, x)
        with pytest.raises(ShapeError):
            tape.backward(y)


def _sandwich(tape, out, u_data, v_data):
    """Reduce a p x q tensor to 1 x 1 with fixed left/right weights."""
    u = Tensor(u_data)
    v = Tensor(v_data)
    return matmul(tape, matmul(tape, u, out), v)


def _check_gradients(build, tensors, tol=1e-6):
    """Compare tape gradients of build(tape) against central differences.

    build must return a 1 x 1 tensor and re-run the whole forward pass on
    every call, reading the current data of the given tensors.
    """
    tape = GradTape()
    loss = build(tape)
    assert loss.shape == (1, 1)
    for t in tensors:
        t.zero_grad()
    tape.backward(loss)
    for t in tensors:
        numeric = central_difference(lambda: float(build(None).data[0, 0]), t)
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad
        err = max_relative_error(analytic, numeric)
        assert err < tol, f"gradient mismatch: rel err {err:.3g}"


class TestMatmul:
    def test_identity_case(self):
        a = Tensor([[1.0, 2.0], [3.0, 4.0]])
        eye = Tensor(np.eye(2))
        out = matmul(None, a, eye)
        np.testing.assert_array_equal(out.data, a.data)

    def test_row_times_column(self):
        out = matmul(None, Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]]))
        np.testing.assert_array_equal(out.data, [[11.0]])

    def test_inner_dim_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
            matmul(None, Tensor.zeros(2, 3), Tensor.zeros(2, 2))

    def test_gradient_of_total_sum_is_ones_times_b_transpose(self):
        rng = np.random.default_rng(11)
        a = Tensor(rng.uniform(-1, 1, (3, 4)))
        b = Tensor(rng.uniform(-1, 1, (4, 2)))
        tape = GradTape()
        out = matmul(tape, a, b)
        loss = _sandwich(tape, out, np.ones((1, 3)), np.ones((2, 1)))
        tape.backward(loss)
        np.testing.assert_allclose(a.grad, np.ones((3, 2)) @ b.data.T, atol=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(12)
        a = Tensor(rng.uniform(-1, 1, (2, 3)))
        b = Tensor(rng.uniform(-1, 1, (3, 2)))

        def build(tape):
            return _sandwich(
                tape, matmul(tape, a, b), np.ones((1, 2)), np.ones((2, 1))
            )

        _check_gradients(build, [a, b])

    def test_deterministic_reruns(self):
        rng = np.random.default_rng(13)
        a = rng.uniform(-1, 1, (5, 7))
        b = rng.uniform(-1, 1, (7, 3))
        first = matmul(None, Tensor(a), Tensor(b)).data
        second = matmul(None, Tensor(a), Tensor(b)).data
        assert np.array_equal(first, second)


class TestElementwiseOps:
    def test_relu_values(self):
        out = relu(None, Tensor([-1.0, 0.0, 2.0]))
        np.testing.assert_array_equal(out.data, [[0.0, 0.0, 2.0]])

    def test_sigmoid_at_zero(self):
        assert sigmoid(None, Tensor([[0.0]])).data[0, 0] == 0.5

    def test_sigmoid_is_stable_far_from_zero(self):
        # exp(-1000) underflows to zero, so the extremes saturate cleanly
        # instead of overflowing; the model clamps predictions afterwards.
        out = sigmoid(None, Tensor([[-1000.0, 1000.0, -30.0, 30.0]]))
        assert np.all(np.isfinite(out.data))
        assert 0.0 <= out.data[0, 0] < 1e-12
        assert 1.0 - 1e-12 < out.data[0, 1] <= 1.0
        assert 0.0 < out.data[0, 2] < 1e-12
        assert 1.0 - 1e-12 < out.data[0, 3] < 1.0

    def test_elementwise_mul_values(self):
        out = elementwise_mul(None, Tensor([1.0, 2.0, 3.0]), Tensor([0.0, 1.0, 2.0]))
        np.testing.assert_array_equal(out.data, [[0.0, 2.0, 6.0]])

    def test_elementwise_mul_shape_mismatch(self):
        with pytest.raises(ShapeError):
            elementwise_mul(None, Tensor.zeros(1, 3), Tensor.zeros(1, 4))

    def test_add_shape_mismatch(self):
        with pytest.raises(ShapeError):
            add(None, Tensor.zeros(2, 3), Tensor.zeros(3, 2))

    def test_add_bias_broadcasts_over_rows(self):
        x = Tensor([[1.0, 2.0], [3.0, 4.0]])
        out = add_bias(None, x, Tensor([[10.0, 20.0]]))
        np.testing.assert_array_equal(out.data, [[11.0, 22.0], [13.0, 24.0]])

    def test_gradients_of_unary_and_binary_ops(self):
        rng = np.random.default_rng(21)
        # Keep relu inputs away from the kink at zero.
        raw = rng.uniform(0.05, 1.0, (3, 4)) * rng.choice([-1.0, 1.0], (3, 4))
        x = Tensor(raw)
        y = Tensor(rng.uniform(-1, 1, (3, 4)))
        bias = Tensor(rng.uniform(-1, 1, (1, 4)))
        scales = Tensor(rng.uniform(-1, 1, (3, 1)))
        u = rng.uniform(0.5, 1.5, (1, 3))
        v = rng.uniform(0.5, 1.5, (4, 1))

        def build_relu(tape):
            return _sandwich(tape, relu(tape, x), u, v)

        def build_sigmoid(tape):
            return _sandwich(tape, sigmoid(tape, x), u, v)

        def build_mul(tape):
            return _sandwich(tape, elementwise_mul(tape, x, y), u, v)

        def build_add(tape):
            return _sandwich(tape, add(tape, x, y), u, v)

        def build_bias(tape):
            return _sandwich(tape, add_bias(tape, x, bias), u, v)

        def build_scale(tape):
            return _sandwich(tape, scale_rows(tape, scales, x), u, v)

        _check_gradients(build_relu, [x])
        _check_gradients(build_sigmoid, [x])
        _check_gradients(build_mul, [x, y])
        _check_gradients(build_add, [x, y])
        _check_gradients(build_bias, [x, bias])
        _check_gradients(build_scale, [x, scales])


class TestClamp:
    def test_values_inside_pass_through(self):
        x = Tensor([[0.2, 0.8]])
        out = clamp(None, x, 0.0, 1.0)
        np.testing.assert_array_equal(out.data, x.data)

    def test_values_outside_are_pinned_with_zero_gradient(self):
        x = Tensor([[-0.5, 0.5, 1.5]])
        tape = GradTape()
        out = clamp(tape, x, 0.0, 1.0)
        np.testing.assert_array_equal(out.data, [[0.0, 0.5, 1.0]])
        loss = _sandwich(tape, out, np.ones((1, 1)), np.ones((3, 1)))
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, [[0.0, 1.0, 0.0]])

    def test_gradient_matches_finite_differences_strictly_inside(self):
        rng = np.random.default_rng(31)
        x = Tensor(rng.uniform(0.1, 0.9, (2, 3)))
        u = np.ones((1, 2))
        v = np.ones((3, 1))

        def build(tape):
            return _sandwich(tape, clamp(tape, x, 0.0, 1.0), u, v)

        _check_gradients(build, [x])


class TestShapeOps:
    def test_reshape_and_flatten_round_trip(self):
        x = Tensor([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        flat = flatten(None, x)
        assert flat.shape == (1, 6)
        np.testing.assert_array_equal(flat.data, [[1, 2, 3, 4, 5, 6]])
        back = reshape(None, flat, 2, 3)
        np.testing.assert_array_equal(back.data, x.data)

    def test_reshape_size_mismatch(self):
        with pytest.raises(ShapeError):
            reshape(None, Tensor.zeros(2, 3), 4, 2)

    def test_concat_cols_values(self):
        out = concat_cols(None, [Tensor([[1.0], [2.0]]), Tensor([[3.0, 4.0], [5.0, 6.0]])])
        np.testing.assert_array_equal(out.data, [[1, 3, 4], [2, 5, 6]])

    def test_concat_rows_values(self):
        out = concat_rows(None, [Tensor([[1.0, 2.0]]), Tensor([[3.0, 4.0]])])
        np.testing.assert_array_equal(out.data, [[1, 2], [3, 4]])

    def test_slice_cols_values(self):
        x = Tensor([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        out = slice_cols(None, x, 1, 3)
        np.testing.assert_array_equal(out.data, [[2, 3], [5, 6]])

    def test_gradients_flow_through_shape_ops(self):
        rng = np.random.default_rng(41)
        a = Tensor(rng.uniform(-1, 1, (2, 3)))
        b = Tensor(rng.uniform(-1, 1, (2, 2)))
        u = rng.uniform(0.5, 1.5, (1, 2))

        def build(tape):
            joined = concat_cols(tape, [a, b])
            wide = reshape(tape, joined, 1, 10)
            stacked = concat_rows(tape, [wide, wide])
            piece = slice_cols(tape, stacked, 2, 9)
            return _sandwich(tape, piece, u, np.ones((7, 1)))

        _check_gradients(build, [a, b])


class TestGatherRows:
    def test_zero_table_gathers_zeros(self):
        out = gather_rows(None, Tensor.zeros(4, 2), [1, 3])
        np.testing.assert_array_equal(out.data, np.zeros((2, 2)))

    def test_duplicate_indices_accumulate_gradients(self):
        table = Tensor(np.arange(8.0).reshape(4, 2))
        tape = GradTape()
        out = gather_rows(tape, table, [2, 2])
        loss = _sandwich(tape, out, np.array([[1.0, 10.0]]), np.ones((2, 1)))
        tape.backward(loss)
        np.testing.assert_array_equal(table.grad[2], [11.0, 11.0])
        assert not table.grad[[0, 1, 3]].any()

    def test_out_of_range_index_names_index_and_size(self):
        with pytest.raises(ShapeError, match="7.*4|4.*7"):
            gather_rows(None, Tensor.zeros(4, 2), [0, 7])

    def test_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(51)
        table = Tensor(rng.uniform(-1, 1, (5, 3)))
        u = rng.uniform(0.5, 1.5, (1, 4))
        v = rng.uniform(0.5, 1.5, (3, 1))

        def build(tape):
            return _sandwich(tape, gather_rows(tape, table, [0, 2, 2, 4]), u, v)

        _check_gradients(build, [table])

    def test_backward_is_linear_in_upstream_gradient(self):
        rng = np.random.default_rng(52)
        table = Tensor(rng.uniform(-1, 1, (6, 2)))
        weights = rng.uniform(-1, 1, (1, 3))

        def run(scale):
            tape = GradTape()
            out = gather_rows(tape, table, [1, 4, 4])
            loss = _sandwich(tape, out, scale * weights, np.ones((2, 1)))
            table.zero_grad()
            tape.backward(loss)
            return table.grad.copy()

        base = run(1.0)
        tripled = run(3.0)
        np.testing.assert_allclose(tripled, 3.0 * base, atol=1e-12)


class TestBceMean:
    def test_matches_hand_logloss(self):
        probs = Tensor([[0.5], [0.5]])
        labels = np.array([1.0, 0.0])
        loss = bce_mean(None, probs, labels)
        assert loss.shape == (1, 1)
        assert abs(loss.data[0, 0] - np.log(2.0)) < 1e-12

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(61)
        probs = Tensor(rng.uniform(0.05, 0.95, (6, 1)))
        labels = rng.integers(0, 2, 6).astype(np.float64)

        def build(tape):
            return bce_mean(tape, probs, labels)

        _check_gradients(build, [probs], tol=1e-7)

    def test_tape_replays_a_deep_composition_correctly(self):
        """End-to-end check that reverse replay handles reused tensors."""
        rng = np.random.default_rng(62)
        x = Tensor(rng.uniform(-1, 1, (4, 3)))
        w = Tensor(rng.uniform(-1, 1, (3, 3)))
        b = Tensor(rng.uniform(-1, 1, (1, 3)))
        w2 = Tensor(rng.uniform(-1, 1, (3, 1)))
        labels = np.array([1.0, 0.0, 1.0, 1.0])

        def build(tape):
            h = relu(tape, add_bias(tape, matmul(tape, x, w), b))
            h = elementwise_mul(tape, h, sigmoid(tape, h))
            z = matmul(tape, h, w2)
            p = clamp(tape, sigmoid(tape, z), 1e-7, 1.0 - 1e-7)
            return bce_mean(tape, p, labels)

        _check_gradients(build, [x, w, b, w2], tol=1e-6)
