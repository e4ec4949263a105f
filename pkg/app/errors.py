# app/errors.py
from __future__ import annotations


class FrameFieldError(Exception):
    """Base class; `exit_code` is what the CLI returns for it."""

    exit_code: int = 1


class DomainError(FrameFieldError, ValueError):
    exit_code = 3


class SingularInputError(FrameFieldError, ValueError):
    exit_code = 3

    def __init__(self, scalar: str, message: str) -> None:
        super().__init__(message)
        self.scalar = scalar  # e.g. "kappa1" | "kappa2" | "tau"


class DegenerateStepError(FrameFieldError, ValueError):
    exit_code = 3


class PathOutOfGridError(FrameFieldError, ValueError):
    exit_code = 2


class NonConvergenceError(FrameFieldError, RuntimeError):
    exit_code = 1


class ToleranceNotMetError(FrameFieldError, RuntimeError):
    exit_code = 1


class InsufficientResolutionError(FrameFieldError, RuntimeError):
    exit_code = 1


class ExportError(FrameFieldError, OSError):
    """Reading or writing a curve, grid or report file failed."""

    exit_code = 4
