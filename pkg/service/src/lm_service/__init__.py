"""HTTP sidecar serving parsing, LM scoring, translation, and fine-tuning."""

from .app import create_app

__all__ = ["create_app"]
