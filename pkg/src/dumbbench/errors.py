"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so that the harness can
record cell-level failures in result rows without keeping exception objects.
"""


class DumbError(Exception):
    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(f"{self.code}: {message}" if message else self.code)
        self.detail = message


class ShapeError(DumbError, ValueError):
    code = "shape-error"


class NonScalarLossError(DumbError, ValueError):
    code = "non-scalar-loss"


class IngestError(DumbError, OSError):
    code = "ingest-error"


class EmptyClassError(DumbError, ValueError):
    code = "empty-class"


class SplitError(DumbError, ValueError):
    code = "split-error"


class BalanceError(DumbError, ValueError):
    code = "balance-error"


class TrainingDivergedError(DumbError, RuntimeError):
    code = "training-diverged"


class EmptyEvalError(DumbError, ValueError):
    code = "empty-eval"


class EvalError(DumbError, ValueError):
    code = "eval-error"


class TaskMismatchError(DumbError, ValueError):
    code = "task-mismatch"


class MatrixError(DumbError, ValueError):
    code = "matrix-error"


class EvalPoolExhaustedError(DumbError, ValueError):
    code = "eval-pool-exhausted"


class CheckpointError(DumbError, ValueError):
    code = "checkpoint-error"


class RegistryError(DumbError, RuntimeError):
    code = "registry-error"


class ConfigError(DumbError, ValueError):
    code = "config-error"


class MissingPrerequisiteError(DumbError, RuntimeError):
    code = "missing-prerequisite"
