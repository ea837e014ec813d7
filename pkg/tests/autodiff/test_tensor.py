"""
Tests for tensors, the tape and the differentiable operations.
"""

import numpy as np
import pytest

from app.autodiff.gradcheck import analytic_gradients, max_relative_error, sampled_relative_error
from app.autodiff.tensor import (
    PROB_EPS,
    GradientError,
    ShapeError,
    Tape,
    Tensor,
    active_tape,
    add,
    bce,
    concat,
    constant,
    gram_schmidt,
    matmul,
    max_rows,
    mean_rows,
    parameter,
    relu,
    rotation_6d,
    scale,
    sigmoid,
    squared_l2,
    sum_all,
)

TOLERANCE = 1e-4


def _project(out: Tensor, weights: np.ndarray) -> Tensor:
    """Reduce a 2-D output to a scalar with fixed random weights."""
    return sum_all(matmul(out, constant(weights)))


class TestTensor:
    """Tests for the Tensor container."""

    def test_tensor_stores_float64(self):
        """Test data is converted to float64."""
        t = Tensor([[1, 2], [3, 4]])
        assert t.data.dtype == np.float64
        assert t.shape == (2, 2)
        assert t.size == 4

    def test_tensor_rejects_three_dimensions(self):
        """Test arrays above two dimensions are refused."""
        with pytest.raises(ShapeError):
            Tensor(np.zeros((2, 2, 2)))

    def test_parameter_copies_input(self):
        """Test parameter() does not alias the caller's array."""
        source = np.ones((2, 2))
        p = parameter(source)
        p.data[0, 0] = 5.0
        assert source[0, 0] == 1.0
        assert p.requires_grad is True

    def test_constant_never_receives_gradient(self):
        """Test a constant input gets no gradient."""
        x = parameter(np.ones((2, 3)))
        c = constant(np.ones((2, 3)))
        with Tape() as tape:
            loss = sum_all(add(x, c))
        tape.backward(loss)
        assert c.grad is None
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


class TestTape:
    """Tests for tape recording and backward."""

    def test_no_recording_without_tape(self):
        """Test operations outside a tape produce untracked tensors."""
        x = parameter(np.ones((2, 2)))
        y = relu(x)
        assert y.tape_id is None
        assert y.requires_grad is False

    def test_sum_gradient_is_ones(self):
        """Test d(sum(x))/dx is all ones."""
        x = parameter(np.arange(6.0).reshape(2, 3))
        with Tape() as tape:
            loss = sum_all(x)
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))

    def test_bce_of_sigmoid_at_zero(self):
        """Test sigmoid then BCE at logit 0 with label 1 gives gradient -0.5."""
        z = parameter(np.zeros((1, 1)))
        with Tape() as tape:
            loss = bce(sigmoid(z), np.ones((1, 1)))
        tape.backward(loss)
        assert z.grad[0, 0] == pytest.approx(-0.5, abs=1e-9)

    def test_non_scalar_loss_rejected(self):
        """Test backward refuses a non-scalar loss."""
        x = parameter(np.ones((2, 2)))
        with Tape() as tape:
            y = relu(x)
        with pytest.raises(GradientError):
            tape.backward(y)

    def test_loss_from_other_tape_rejected(self):
        """Test backward refuses a loss recorded elsewhere."""
        x = parameter(np.ones((2, 2)))
        with Tape():
            loss = sum_all(x)
        with Tape() as other, pytest.raises(GradientError):
            other.backward(loss)

    def test_shared_input_accumulates(self):
        """Test a tensor used twice gets the sum of both gradients."""
        x = parameter(np.ones((1, 2)))
        with Tape() as tape:
            loss = sum_all(add(x, x))
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, np.full((1, 2), 2.0))

    def test_replay_is_deterministic(self):
        """Test identical inputs give bit-identical loss and gradients."""
        rng = np.random.default_rng(3)
        w = rng.normal(size=(4, 3))
        x = rng.normal(size=(5, 4))

        def run():
            p = parameter(w)
            with Tape() as tape:
                loss = sum_all(sigmoid(matmul(constant(x), p)))
            tape.backward(loss)
            return loss.item(), p.grad

        loss_a, grad_a = run()
        loss_b, grad_b = run()
        assert loss_a == loss_b
        np.testing.assert_array_equal(grad_a, grad_b)

    def test_untaped_forward_matches_taped(self):
        """Test the forward values do not depend on recording."""
        rng = np.random.default_rng(4)
        p = parameter(rng.normal(size=(3, 3)))
        x = constant(rng.normal(size=(2, 3)))
        plain = relu(matmul(x, p)).data.copy()
        with Tape():
            taped = relu(matmul(x, p)).data
        np.testing.assert_array_equal(plain, taped)


class TestShapeErrors:
    """Tests for shape validation."""

    def test_matmul_mismatch_names_both_shapes(self):
        """Test the error message carries both operand shapes."""
        with pytest.raises(ShapeError) as exc:
            matmul(constant(np.ones((2, 3))), constant(np.ones((2, 3))))
        assert exc.value.left_shape == (2, 3)
        assert exc.value.right_shape == (2, 3)
        assert "(2, 3)" in str(exc.value)

    def test_add_mismatch(self):
        """Test add rejects unrelated shapes."""
        with pytest.raises(ShapeError):
            add(constant(np.ones((2, 3))), constant(np.ones(2)))

    def test_max_rows_uneven_groups(self):
        """Test max_rows rejects rows that do not split into groups."""
        with pytest.raises(ShapeError):
            max_rows(constant(np.ones((5, 2))), 2)

    def test_bce_label_shape(self):
        """Test bce rejects labels of another shape."""
        with pytest.raises(ShapeError):
            bce(constant(np.full((2, 2), 0.5)), np.ones((2, 3)))


class TestForwardValues:
    """Tests for forward results of individual operations."""

    def test_matmul_transpose(self):
        """Test transpose_b multiplies by the transpose."""
        a = np.arange(6.0).reshape(2, 3)
        b = np.arange(12.0).reshape(4, 3)
        out = matmul(constant(a), constant(b), transpose_b=True)
        np.testing.assert_allclose(out.data, a @ b.T)

    def test_sigmoid_is_stable_for_large_inputs(self):
        """Test sigmoid saturates without overflow."""
        out = sigmoid(constant(np.array([[-1000.0, 0.0, 1000.0]])))
        np.testing.assert_allclose(out.data, [[0.0, 0.5, 1.0]])

    def test_max_rows_groups(self):
        """Test column-wise max within contiguous groups."""
        a = np.array([[1.0, 5.0], [3.0, 2.0], [0.0, -1.0], [-2.0, 4.0]])
        out = max_rows(constant(a), 2)
        np.testing.assert_array_equal(out.data, [[3.0, 5.0], [0.0, 4.0]])

    def test_mean_rows(self):
        """Test mean over rows keeps a single row."""
        out = mean_rows(constant(np.array([[1.0, 2.0], [3.0, 6.0]])))
        np.testing.assert_array_equal(out.data, [[2.0, 4.0]])

    def test_bce_half_probability(self):
        """Test BCE at p=0.5 is count * ln 2."""
        out = bce(constant(np.full((3, 7), 0.5)), np.ones((3, 7)))
        assert out.item() == pytest.approx(21 * np.log(2.0), abs=1e-9)

    def test_bce_clipped_near_perfect(self):
        """Test a perfect prediction costs at most -log(1 - PROB_EPS) per entry."""
        out = bce(constant(np.array([[1.0, 0.0]])), np.array([[1.0, 0.0]]))
        assert out.item() <= 2 * 1e-6
        assert out.item() == pytest.approx(-2 * np.log(1.0 - PROB_EPS))

    def test_squared_l2(self):
        """Test the sum of squared differences."""
        out = squared_l2(constant([[0.1, 0.0, 0.0]]), constant([[0.0, 0.0, 0.0]]))
        assert out.item() == pytest.approx(0.01)


class TestRotation6d:
    """Tests for the 6-D rotation representation."""

    def test_canonical_axes_give_identity(self):
        """Test ([1,0,0],[0,1,0]) maps to the identity."""
        out = rotation_6d(constant([[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]]))
        np.testing.assert_allclose(out.data.reshape(3, 3), np.eye(3))

    def test_output_is_orthonormal(self):
        """Test R^T R = I and det R = +1 for random inputs."""
        rng = np.random.default_rng(0)
        rot, degenerate = gram_schmidt(rng.normal(size=(50, 6)))
        assert not degenerate.any()
        for r in rot:
            np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-9)
            assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-9)

    def test_matches_qr_up_to_sign(self):
        """Test the first two columns agree with a QR factorization up to sign."""
        rng = np.random.default_rng(1)
        six = rng.normal(size=(20, 6))
        rot, _ = gram_schmidt(six)
        for row, r in zip(six, rot, strict=True):
            q, _ = np.linalg.qr(np.stack([row[:3], row[3:]], axis=1))
            for k in range(2):
                dot = abs(float(q[:, k] @ r[:, k]))
                assert dot == pytest.approx(1.0, abs=1e-9)

    def test_parallel_vectors_fall_back_to_identity(self):
        """Test degenerate input returns the identity with zero gradient."""
        six = parameter([[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]])
        with Tape() as tape:
            loss = sum_all(rotation_6d(six))
        tape.backward(loss)
        np.testing.assert_allclose(rotation_6d(constant(six.data)).data.reshape(3, 3), np.eye(3))
        np.testing.assert_array_equal(six.grad, np.zeros((1, 6)))


class TestGradientCheck:
    """Randomized finite-difference checks for every differentiable operation."""

    @pytest.mark.parametrize("seed", range(100))
    def test_matmul_add_relu(self, seed):
        """Test a small affine + rectifier graph."""
        rng = np.random.default_rng(seed)
        x = parameter(rng.normal(size=(3, 4)))
        w = parameter(rng.normal(size=(2, 4)))
        b = parameter(rng.normal(size=2))
        proj = rng.normal(size=(2, 1))

        def fn():
            return _project(relu(add(matmul(x, w, transpose_b=True), b)), proj)

        assert max_relative_error(fn, [x, w, b]) < TOLERANCE

    @pytest.mark.parametrize("seed", range(100))
    def test_concat_sigmoid_bce(self, seed):
        """Test concatenation feeding a sigmoid and BCE."""
        rng = np.random.default_rng(seed)
        a = parameter(rng.normal(size=(3, 2)))
        b = parameter(rng.normal(size=(3, 3)))
        labels = rng.integers(0, 2, size=(3, 5)).astype(float)

        def fn():
            return bce(sigmoid(concat([a, b], axis=1)), labels)

        assert max_relative_error(fn, [a, b]) < TOLERANCE

    @pytest.mark.parametrize("seed", range(100))
    def test_row_concat_mean_scale(self, seed):
        """Test row concatenation, mean over rows and scaling."""
        rng = np.random.default_rng(seed)
        a = parameter(rng.normal(size=(2, 3)))
        b = parameter(rng.normal(size=(1, 3)))
        proj = rng.normal(size=(3, 1))

        def fn():
            return _project(scale(mean_rows(concat([a, b], axis=0)), 0.7), proj)

        assert max_relative_error(fn, [a, b]) < TOLERANCE

    @pytest.mark.parametrize("seed", range(100))
    def test_max_rows(self, seed):
        """Test the grouped max."""
        rng = np.random.default_rng(seed)
        a = parameter(rng.normal(size=(6, 3)))
        proj = rng.normal(size=(3, 1))

        def fn():
            return _project(max_rows(a, 2), proj)

        assert max_relative_error(fn, [a]) < TOLERANCE

    @pytest.mark.parametrize("seed", range(100))
    def test_squared_l2(self, seed):
        """Test the squared distance with gradient into both sides."""
        rng = np.random.default_rng(seed)
        a = parameter(rng.normal(size=(2, 3)))
        b = parameter(rng.normal(size=(2, 3)))

        def fn():
            return squared_l2(a, b)

        assert max_relative_error(fn, [a, b]) < TOLERANCE

    @pytest.mark.parametrize("seed", range(100))
    def test_rotation_6d(self, seed):
        """Test Gram-Schmidt rotation gradients."""
        rng = np.random.default_rng(seed)
        six = parameter(rng.normal(size=(2, 6)))
        proj = rng.normal(size=(9, 1))

        def fn():
            return _project(rotation_6d(six), proj)

        assert max_relative_error(fn, [six]) < TOLERANCE

    def test_analytic_gradient_of_unused_parameter_is_zero(self):
        """Test parameters outside the graph report zero gradient."""
        used = parameter(np.ones((1, 2)))
        unused = parameter(np.ones((1, 2)))
        grads = analytic_gradients(lambda: sum_all(used), [used, unused])
        np.testing.assert_array_equal(grads[1], np.zeros((1, 2)))

    def test_small_gradient_mismatch_is_caught(self):
        """Test a 2x disagreement on a 1e-6 gradient scores as relative, not absolute."""
        a = parameter(np.ones((1, 2)))

        def fn():
            factor = 2e-6 if active_tape() is not None else 1e-6
            return scale(sum_all(a), factor)

        assert max_relative_error(fn, [a]) > 0.3

    def test_small_correct_gradient_passes(self):
        """Test a correct gradient of size 1e-6 stays within tolerance."""
        a = parameter(np.random.default_rng(0).normal(size=(2, 3)))
        assert max_relative_error(lambda: scale(sum_all(a), 1e-6), [a]) < TOLERANCE


class TestSampledGradientCheck:
    """Tests for sampled_relative_error."""

    def test_skips_entry_on_rectifier_kink(self):
        """Test an entry 1e-6 above the rectifier kink is skipped, not scored."""
        a = parameter(np.array([[1e-6, 2.0]]))
        check = sampled_relative_error(lambda: sum_all(relu(a)), [a], np.random.default_rng(0), per_param=2)
        assert check.skipped_kinks == 1
        assert check.checked == 1
        assert check.worst < TOLERANCE

    def test_zero_gradient_entries_not_drawn(self):
        """Test dead rectifier entries are never sampled."""
        a = parameter(np.array([[-1.0, -2.0, 3.0]]))
        check = sampled_relative_error(lambda: sum_all(relu(a)), [a], np.random.default_rng(0), per_param=3)
        assert check.checked == 1

    def test_catches_wrong_gradient(self):
        """Test a tape gradient that disagrees with the function is reported."""
        a = parameter(np.ones((2, 2)))

        def fn():
            factor = 3.0 if active_tape() is not None else 1.0
            return scale(sum_all(a), factor)

        check = sampled_relative_error(fn, [a], np.random.default_rng(0))
        assert check.worst > 0.3
