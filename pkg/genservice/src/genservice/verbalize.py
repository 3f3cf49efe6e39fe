"""Deterministic template generation.

Reimplements the pipeline's template backends against the wire-level
input formats only: serialized atom strings with <H>/<D>/<P>/<T>
markers for the prompter template, plain text for the question
template. Parity with the pipeline side is pinned by a shared golden
file, not by a code dependency.
"""

import re

_MARKER_RE = re.compile(r"<([HDPT])>")


def _predicate_words(predicate: str) -> str:
    return predicate.split(".")[-1].replace("_", " ")


def describe_atom(text: str) -> str:
    """One deterministic sentence for a serialized atom string."""
    fields = _MARKER_RE.split(text)
    items = [
        (marker, content.strip())
        for marker, content in zip(fields[1::2], fields[2::2])
    ]
    if items and items[0][0] == "H":
        values = {}
        for marker, content in items:
            values.setdefault(marker, content)
        head = values.get("H", "")
        pred = values.get("P", "")
        tail = values.get("T", "")
        return f"{head} {_predicate_words(pred)} {tail} ."
    parts = []
    pred = None
    for marker, content in items:
        if marker == "P":
            pred = content
        elif marker == "T" and pred is not None:
            clean = pred[2:] if pred.startswith("R@") else pred
            parts.append(f"{_predicate_words(clean)} {content}")
            pred = None
    return "; ".join(parts) + " ."


def ask_question(text: str) -> str:
    """Deterministic question template over a prompt-bearing input."""
    return f"what is ?x such that: {text}".lower()
