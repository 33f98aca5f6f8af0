"""
Training objectives: reconstruction, forecasting and privileged distillation.

Every loss is a mean SmoothL1. Teacher-side signals are always detached, so
distillation gradients reach the student only.
"""

from ..autodiff.tensor import Tensor, smooth_l1
from ..errors import ShapeError

LossTerm = Tensor | float


def _smooth_l1(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise ShapeError(f"loss inputs differ in shape: {pred.shape} vs {target.shape}")
    return smooth_l1(pred, target)


def reconstruction_loss(x_hat: Tensor, x_g) -> Tensor:
    return _smooth_l1(x_hat, x_g if isinstance(x_g, Tensor) else Tensor(x_g, dtype=x_hat.dtype))


def forecast_loss(prediction: Tensor, target) -> Tensor:
    return reconstruction_loss(prediction, target)


def correlation_loss(a_pe, a_tse: Tensor) -> Tensor:
    """Align the student's variable correlations with the teacher's."""
    teacher = a_pe.detach() if isinstance(a_pe, Tensor) else Tensor(a_pe, dtype=a_tse.dtype)
    return _smooth_l1(a_tse, teacher)


def feature_loss(e_gt, t_bar: Tensor) -> Tensor:
    """Align the student's variable features with the teacher's."""
    teacher = e_gt.detach() if isinstance(e_gt, Tensor) else Tensor(e_gt, dtype=t_bar.dtype)
    return _smooth_l1(t_bar, teacher)


def weighted_sum(terms: list[tuple[float, LossTerm | None]]) -> LossTerm:
    """Sum ``weight * term``; zero-weight and missing terms are skipped entirely."""
    total: LossTerm = 0.0
    for weight, term in terms:
        if weight == 0 or term is None:
            continue
        scaled = term if weight == 1 else term * weight
        total = scaled if isinstance(total, float) and total == 0.0 else total + scaled
    return total


def pkd_loss(l_cd: LossTerm | None, l_fd: LossTerm | None, lambda_c: float, lambda_e: float) -> LossTerm:
    return weighted_sum([(lambda_c, l_cd), (lambda_e, l_fd)])


def total_loss(
    l_recon: LossTerm | None,
    l_pkd: LossTerm | None,
    l_fcst: LossTerm | None,
    lambda_r: float,
    lambda_p: float,
    lambda_f: float,
) -> LossTerm:
    return weighted_sum([(lambda_r, l_recon), (lambda_p, l_pkd), (lambda_f, l_fcst)])
