"""Seven model-based attacks and six model-free image transformations."""
from .adversarial_set import AdversarialSet
from .deepfool import deepfool
from .estimator import AttackTransformer
from .gradient import bim, fgsm, fgsm_sweep, gaussian_kernel, pgd, rfgsm, smooth, tifgsm
from .registry import (
    ATTACKS,
    EPS_GRID,
    MATH_ATTACKS,
    MATHEMATICAL,
    NON_MATH_ATTACKS,
    NON_MATHEMATICAL,
    OVERSHOOT_GRID,
    OVERSHOOT_GRID_APPENDIX,
    AttackOutput,
    AttackSpec,
    ParamGrid,
    get_attack,
)
from .square import SquareResult, margin, p_schedule, square_attack
from .transforms import box_blur, gaussian_noise, grayscale, invert, random_black_box, salt_pepper

__all__ = [
    "ATTACKS",
    "EPS_GRID",
    "MATHEMATICAL",
    "MATH_ATTACKS",
    "NON_MATHEMATICAL",
    "NON_MATH_ATTACKS",
    "OVERSHOOT_GRID",
    "OVERSHOOT_GRID_APPENDIX",
    "AdversarialSet",
    "AttackOutput",
    "AttackSpec",
    "AttackTransformer",
    "ParamGrid",
    "SquareResult",
    "bim",
    "box_blur",
    "deepfool",
    "fgsm",
    "fgsm_sweep",
    "gaussian_kernel",
    "gaussian_noise",
    "get_attack",
    "grayscale",
    "invert",
    "margin",
    "p_schedule",
    "pgd",
    "random_black_box",
    "rfgsm",
    "salt_pepper",
    "smooth",
    "square_attack",
    "tifgsm",
]
