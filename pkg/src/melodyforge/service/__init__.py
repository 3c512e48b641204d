"""HTTP service wrapping the melodyforge core."""

from .app import create_app

__all__ = ["create_app"]
