# app/config.py
from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Optional

import yaml
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

# Load variables from .env into environment
load_dotenv()


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError as e:
        raise ValueError(f"{name} must be a number, got {raw!r}") from e


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from e


class Settings:
    def __init__(self) -> None:
        # Series evaluation of X0
        self.x_max: float = _env_float("FRAMEFIELD_X_MAX", 100.0)
        self.x_min: float = _env_float("FRAMEFIELD_X_MIN", 1e-6)
        self.series_tol: float = _env_float("FRAMEFIELD_SERIES_TOL", 1e-12)
        self.series_max_terms: int = _env_int("FRAMEFIELD_SERIES_MAX_TERMS", 500)
        self.dd_switch: float = _env_float("FRAMEFIELD_DD_SWITCH", 12.0)
        self.far_field_switch: float = _env_float("FRAMEFIELD_FAR_FIELD_SWITCH", 30.0)

        # Connection / lattice
        self.s2_tol: float = _env_float("FRAMEFIELD_S2_TOL", 1e-9)
        self.fd_step: float = _env_float("FRAMEFIELD_FD_STEP", 1e-4)
        self.min_order_n: int = _env_int("FRAMEFIELD_MIN_ORDER_N", 16)
        self.workers: int = _env_int("FRAMEFIELD_WORKERS", 1)

        self.log_level: str = os.getenv("FRAMEFIELD_LOG_LEVEL", "INFO").upper()

        # Basic sanity checks
        if self.series_tol <= 0:
            raise ValueError("FRAMEFIELD_SERIES_TOL must be positive")
        if self.x_max <= 0 or self.x_min <= 0:
            raise ValueError("FRAMEFIELD_X_MAX and FRAMEFIELD_X_MIN must be positive")
        if not self.dd_switch <= self.far_field_switch:
            raise ValueError("FRAMEFIELD_DD_SWITCH must not exceed FRAMEFIELD_FAR_FIELD_SWITCH")
        if self.series_max_terms < 10:
            raise ValueError("FRAMEFIELD_SERIES_MAX_TERMS is too small to be useful")
        if self.workers < 1:
            raise ValueError("FRAMEFIELD_WORKERS must be at least 1")


settings = Settings()


def configure_logging(level: Optional[str] = None) -> None:
    """
    Route every app.* logger through a single RichHandler.
    Safe to call more than once; later calls only change the level.
    """
    root = logging.getLogger("app")
    root.setLevel((level or settings.log_level).upper())
    if not any(isinstance(h, RichHandler) for h in root.handlers):
        handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        root.addHandler(handler)
        root.propagate = False


def load_run_config(path: Path) -> dict[str, Any]:
    """
    Read an optional YAML run-config file.

    Expected top-level sections: domain, tolerances, output. Unknown sections
    are rejected so that typos do not silently fall back to defaults.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}

    if not isinstance(data, dict):
        raise ValueError(f"Run config {path} must be a mapping at the top level")

    unknown = set(data) - {"domain", "tolerances", "output"}
    if unknown:
        raise ValueError(f"Unknown run-config sections in {path}: {sorted(unknown)}")

    return data
