"""Time-aware entity alignment between temporal knowledge graphs."""
from __future__ import annotations

__version__ = "0.1.0"
