"""Static figures from aircrn result files (schema=1 CSV/JSON)."""

from .figures import FIGURE_KINDS, FigureSpec, build, render
from .io import MissingColumnError, SchemaError, read_summary, read_table

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "build",
    "render",
    "MissingColumnError",
    "SchemaError",
    "read_summary",
    "read_table",
]
