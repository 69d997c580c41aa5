"""Exact monodromy computations for Calabi-Yau operators inside Sp4(Z)."""

from .cli import main


__version__ = "0.1.0"

__all__ = ["main"]
