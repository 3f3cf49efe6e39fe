"""Generation sidecar: wire-protocol HTTP service and toy fine-tuning."""

from . import app, model, verbalize  # noqa: F401

__version__ = "0.1.0"
