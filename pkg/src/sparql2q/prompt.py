"""Prompt text assembly and variable annotation.

The prompt is the space-joined concatenation of per-atom descriptions,
with ``(the ?v)`` inserted after the first occurrence of each bound
entity's surface name.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from . import kg as kgmod
from .errors import MissingDescription
from .sampler import AtomicSubgraph, InstantiatedGraph, decompose

log = logging.getLogger(__name__)

_ANNOTATION_RE = re.compile(r" \(the \?[A-Za-z_0-9]+\)")


@dataclass(frozen=True)
class PromptText:
    text: str
    segments: tuple  # of (atom_id, description)
    annotations: tuple = ()  # of (variable, entity id, insertion offset)


def strip_annotations(text: str) -> str:
    """Remove every `` (the ?v)`` annotation."""
    return _ANNOTATION_RE.sub("", text)


def assemble(g_full: InstantiatedGraph, descriptions: dict) -> PromptText:
    """Join per-atom descriptions in decompose order with single spaces.

    `descriptions` maps atom key -> description string.
    """
    segments = []
    for atom in decompose(g_full):
        key = atom.key()
        if key not in descriptions:
            raise MissingDescription(key)
        segments.append((key, descriptions[key]))
    return PromptText(
        text=" ".join(d for _, d in segments),
        segments=tuple(segments),
    )


def annotate_variables(t: PromptText, g_full: InstantiatedGraph,
                       kg: kgmod.KnowledgeGraph) -> PromptText:
    """Insert `` (the ?v)`` after the first occurrence of each bound
    entity's name, in variable-name order. Variables whose entity name
    does not occur in the text are skipped with a warning; re-running is
    a no-op on already annotated names."""
    text = t.text
    inserted = {a[0]: a[1] for a in t.annotations}
    names = {}
    for var in sorted(g_full.bindings):
        bound = g_full.bindings[var]
        name = kg.record(bound).name
        if not name:
            continue
        if var in inserted:
            names[var] = name
            continue
        pos = text.find(name)
        if pos < 0:
            pos = text.lower().find(name.lower())
        if pos < 0:
            log.warning("variable %s: name %r not found in prompt text", var, name)
            continue
        end = pos + len(name)
        if text[end:].startswith(" (the "):
            continue
        text = text[:end] + f" (the {var})" + text[end:]
        inserted[var] = bound
        names[var] = name
    # offsets recomputed against the final text, left to right
    annotations = []
    for var, bound in inserted.items():
        name = names.get(var, "")
        probe = f"{name} (the {var})"
        pos = text.find(probe)
        if pos < 0:
            pos = text.lower().find(probe.lower())
        if pos >= 0:
            annotations.append((var, bound, pos + len(name)))
    annotations.sort(key=lambda a: a[2])
    return PromptText(text=text, segments=t.segments, annotations=tuple(annotations))


def _predicate_words(predicate: str) -> str:
    return predicate.split(".")[-1].replace("_", " ")


def fallback_verbalize(g: AtomicSubgraph) -> str:
    """Deterministic template description used when no trained prompter
    output is available."""
    if g.kind == kgmod.SINGLE:
        subj, predicate, obj = g.single
        return f"{subj.name} {_predicate_words(predicate)} {obj.name} ."
    parts = [
        f"{_predicate_words(p)} {rec.name}"
        for rec, p in sorted(g.cvt.inward, key=lambda ep: (ep[1], ep[0].id))
    ]
    parts.extend(
        f"{_predicate_words(p)} {rec.name}"
        for p, rec in sorted(g.cvt.outward, key=lambda pe: (pe[0], pe[1].id))
    )
    return "; ".join(parts) + " ."
