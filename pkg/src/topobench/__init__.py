"""Black-box topology optimization benchmark for a 2D cantilever."""

__version__ = "0.1.0"
