"""Minimal reverse-mode differentiation over numpy arrays."""
from . import checkpoint, ops
from .gradcheck import GradCheckReport, check_op_gradients, finite_difference_check, grad_wrt_input
from .tensor import Tensor, backward, grad, trace

__all__ = [
    "Tensor",
    "backward",
    "grad",
    "trace",
    "ops",
    "checkpoint",
    "grad_wrt_input",
    "finite_difference_check",
    "check_op_gradients",
    "GradCheckReport",
]
