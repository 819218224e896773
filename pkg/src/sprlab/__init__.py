"""Step functions on ordinal intervals and stable phase retrieval checks."""

from __future__ import annotations

__version__ = "0.1.0"

from . import cli, embeddings, funcspace, ordinal, overlap, spr

__all__ = [
    "cli",
    "embeddings",
    "funcspace",
    "ordinal",
    "overlap",
    "spr",
    "__version__",
]
