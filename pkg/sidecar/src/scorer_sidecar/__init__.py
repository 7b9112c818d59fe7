"""Scorer sidecar package."""

from .app import create_app
from .models import load_models

__all__ = ["create_app", "load_models"]
