"""SPARQL-to-question-generation pipeline toolkit."""

from . import corpus, generate, kg, metrics, pipeline, prompt, sampler, serializer, sparql

__all__ = [
    "corpus",
    "generate",
    "kg",
    "metrics",
    "pipeline",
    "prompt",
    "sampler",
    "serializer",
    "sparql",
]

__version__ = "0.1.0"
