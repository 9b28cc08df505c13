"""Exact-arithmetic experiments on subsequence ergodic averages for circle rotations."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import LabError  # noqa: E402

__all__ = ["LabError", "__version__"]
