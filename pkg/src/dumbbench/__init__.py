"""dumbbench: transferability of evasion attacks under source, architecture and balance mismatch.

The package is layered bottom-up:

* :mod:`dumbbench.diffcore` reverse-mode autodiff over numpy arrays.
* :mod:`dumbbench.synthdata` procedural binary image datasets, splits, rebalancing.
* :mod:`dumbbench.models` small CNN classifiers, training and a model registry.
* :mod:`dumbbench.attacks` gradient, query and transform attacks.
* :mod:`dumbbench.perceptual` SSIM.
* :mod:`dumbbench.tuning` SSIM-constrained attack strength selection.
* :mod:`dumbbench.harness` experiment matrix, case analysis, KS tests, reports.
* :mod:`dumbbench.cli` command-line front end over :mod:`dumbbench.pipeline`.
"""

__version__ = "0.1.0"

from .config import RunConfig
from .errors import DumbError
from .harness.cases import CASES, DumbCase, classify_case
from .perceptual import mean_ssim, ssim

__all__ = ["CASES", "DumbCase", "DumbError", "RunConfig", "__version__", "classify_case", "mean_ssim", "ssim"]
