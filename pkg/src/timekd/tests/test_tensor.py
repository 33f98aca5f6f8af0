"""
Unit tests for the tensor engine and gradient tape.
"""

import numpy as np
import pytest

from timekd.autodiff import (
    MASK_VALUE,
    Tape,
    Tensor,
    backward,
    default_dtype,
    dropout,
    layer_norm,
    precision,
    smooth_l1,
    softmax_rows,
)
from timekd.errors import ContractError, DegenerateRowError, ShapeError


class TestTensor:
    """Tests for Tensor construction and precision."""

    def test_default_precision_is_float32(self):
        """Test that tensors default to 32-bit floats."""
        assert default_dtype() == np.float32
        assert Tensor([1.0, 2.0]).dtype == np.float32

    def test_precision_context(self):
        """Test switching to 64-bit inside a precision block."""
        with precision(np.float64):
            assert Tensor([1.0]).dtype == np.float64
        assert Tensor([1.0]).dtype == np.float32

    def test_grad_allocated_only_when_required(self):
        """Test that only tensors requiring gradients carry a buffer."""
        assert Tensor([1.0]).grad is None
        t = Tensor([[1.0, 2.0]], requires_grad=True)
        np.testing.assert_array_equal(t.grad, np.zeros((1, 2)))

    def test_no_recording_without_gradients(self):
        """Test that constant arithmetic leaves the tape empty."""
        with Tape() as tape:
            Tensor([1.0]) + Tensor([2.0])
        assert len(tape) == 0


class TestBackward:
    """Tests for reverse-mode accumulation."""

    def test_broadcast_add_gradients(self, float64):
        """Test gradients of a broadcast addition sum back to input shapes."""
        a = Tensor(np.ones((2, 3)), requires_grad=True)
        b = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            loss = (a + b).sum()
        backward(loss, tape)

        np.testing.assert_array_equal(a.grad, np.ones((2, 3)))
        np.testing.assert_array_equal(b.grad, np.full(3, 2.0))

    def test_matmul_gradients(self, float64):
        """Test matmul gradients against the closed form."""
        a = Tensor([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
        b = Tensor([[0.5], [-1.0]], requires_grad=True)
        with Tape() as tape:
            loss = (a @ b).sum()
        backward(loss, tape)

        np.testing.assert_allclose(a.grad, [[0.5, -1.0], [0.5, -1.0]])
        np.testing.assert_allclose(b.grad, [[4.0], [6.0]])

    def test_gradients_accumulate(self, float64):
        """Test that a second backward pass adds to existing gradients."""
        x = Tensor([3.0], requires_grad=True)
        for _ in range(2):
            with Tape() as tape:
                loss = (x * x).sum()
            backward(loss, tape)
        np.testing.assert_allclose(x.grad, [12.0])

    def test_detach_blocks_gradient(self, float64):
        """Test that a detached operand is treated as a constant."""
        x = Tensor([2.0, -1.0], requires_grad=True)
        with Tape() as tape:
            loss = (x.detach() * x).sum()
        backward(loss, tape)
        np.testing.assert_allclose(x.grad, [2.0, -1.0])

    def test_shared_subexpression(self, float64):
        """Test that a value used twice receives both contributions."""
        x = Tensor([1.5], requires_grad=True)
        with Tape() as tape:
            y = x * 2.0
            loss = (y * y + y).sum()
        backward(loss, tape)
        # d/dx (4x^2 + 2x) = 8x + 2
        np.testing.assert_allclose(x.grad, [14.0])

    def test_non_scalar_loss_rejected(self, float64):
        """Test that backward needs a single-element root."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = x * 2.0
        with pytest.raises(ContractError):
            backward(y, tape)

    def test_foreign_loss_rejected(self, float64):
        """Test that a loss from outside the tape is rejected."""
        x = Tensor([1.0], requires_grad=True)
        with Tape() as tape:
            pass
        with pytest.raises(ContractError):
            backward((x * 2.0).sum(), tape)

    def test_matmul_shape_error(self):
        """Test that mismatched inner dimensions raise ShapeError."""
        with pytest.raises(ShapeError):
            Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))


class TestSoftmax:
    """Tests for the row softmax."""

    def test_rows_sum_to_one(self, rng):
        """Test that every row is a probability distribution."""
        out = softmax_rows(Tensor(rng.normal(size=(3, 4, 5))))
        np.testing.assert_allclose(out.data.sum(axis=-1), 1.0, rtol=1e-6)

    def test_masked_entries_vanish(self):
        """Test that mask entries get zero probability."""
        out = softmax_rows(Tensor([[0.0, MASK_VALUE, 0.0]]))
        np.testing.assert_allclose(out.data, [[0.5, 0.0, 0.5]])

    def test_large_logits_are_stable(self):
        """Test max subtraction keeps large scores finite."""
        out = softmax_rows(Tensor([[1000.0, 1000.0]], dtype=np.float64))
        np.testing.assert_allclose(out.data, [[0.5, 0.5]])

    def test_fully_masked_row(self):
        """Test that a row with nothing permitted raises DegenerateRowError."""
        with pytest.raises(DegenerateRowError):
            softmax_rows(Tensor([[MASK_VALUE, MASK_VALUE]]))


class TestFusedOps:
    """Tests for layer norm, SmoothL1 and dropout forward values."""

    def test_layer_norm_statistics(self, float64, rng):
        """Test zero mean and unit variance with identity affine."""
        x = Tensor(rng.normal(3.0, 2.0, size=(4, 16)))
        out = layer_norm(x, Tensor(np.ones(16)), Tensor(np.zeros(16)))
        np.testing.assert_allclose(out.data.mean(axis=-1), 0.0, atol=1e-10)
        np.testing.assert_allclose(out.data.var(axis=-1), 1.0, rtol=1e-3)

    def test_layer_norm_shape_error(self):
        """Test that gamma must match the last axis."""
        with pytest.raises(ShapeError):
            layer_norm(Tensor(np.ones((2, 4))), Tensor(np.ones(3)), Tensor(np.zeros(3)))

    def test_smooth_l1_value(self, float64):
        """Test the quadratic and linear regions."""
        loss = smooth_l1(Tensor([0.0, 2.0]), Tensor([0.5, 0.0]))
        # 0.5 * 0.25 and 2 - 0.5
        assert loss.item() == pytest.approx((0.125 + 1.5) / 2)
        assert loss.shape == ()

    @pytest.mark.parametrize(
        "diff, expected", [(0.0, 0.0), (0.5, 0.125), (-0.5, 0.125), (2.0, 1.5), (-2.0, 1.5)]
    )
    def test_smooth_l1_single_values(self, float64, diff, expected):
        """Test SmoothL1 of one difference in each region."""
        assert smooth_l1(Tensor([diff]), Tensor([0.0])).item() == expected

    @staticmethod
    def _smooth_l1_with_slope(diff: float) -> tuple[float, float]:
        pred = Tensor([diff], requires_grad=True)
        with Tape() as tape:
            loss = smooth_l1(pred, Tensor([0.0]))
        backward(loss, tape)
        return loss.item(), float(pred.grad[0])

    @pytest.mark.parametrize("sign", [1.0, -1.0])
    def test_smooth_l1_continuous_at_unit_difference(self, float64, sign):
        """Test that value and slope meet across |d| = 1."""
        eps = 1e-9
        inner, inner_slope = self._smooth_l1_with_slope(sign * (1.0 - eps))
        outer, outer_slope = self._smooth_l1_with_slope(sign * (1.0 + eps))
        at_one, slope_at_one = self._smooth_l1_with_slope(sign)

        assert at_one == 0.5
        assert slope_at_one == sign
        # both branches agree at the same point
        assert abs(inner - ((1.0 - eps) - 0.5)) <= 1e-12
        assert abs(outer - 0.5 * (1.0 + eps) ** 2) <= 1e-12
        assert abs(inner_slope - sign * (1.0 - eps)) <= 1e-12
        assert abs(outer_slope - sign) <= 1e-12
        # jumps shrink with the gap
        assert abs(outer - inner) <= 2 * eps + 1e-12
        assert abs(outer_slope - inner_slope) <= eps + 1e-12

    def test_smooth_l1_shape_error(self):
        """Test that prediction and target must agree."""
        with pytest.raises(ShapeError):
            smooth_l1(Tensor(np.ones(3)), Tensor(np.ones(4)))

    def test_dropout_rescales(self, float64, rng):
        """Test inverted dropout keeps the expectation."""
        out = dropout(Tensor(np.ones(20000)), 0.25, rng)
        kept = out.data[out.data > 0]
        np.testing.assert_allclose(kept, 1.0 / 0.75)
        assert out.data.mean() == pytest.approx(1.0, abs=0.03)

    def test_dropout_zero_rate_is_identity(self, rng):
        """Test that rate 0 returns the input tensor itself."""
        x = Tensor(np.ones(3))
        assert dropout(x, 0.0, rng) is x
