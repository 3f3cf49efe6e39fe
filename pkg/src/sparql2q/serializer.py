"""Render atomic subgraphs as generator input strings.

Two strategies: keep original entity names, or replace them with type
placeholders derived from the predicate path (``domain.subject_type.
property``: the subject gets ``[subject_type]``, the object gets
``[property]``). Marker tokens are the literal byte sequences <H>, <D>,
<P>, <T>; inward CVT predicates carry the R@ prefix.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import kg as kgmod
from .errors import UnmappedPlaceholder
from .sampler import AtomicSubgraph

ENTITY_NAME = "name"
TYPE_PLACEHOLDER = "type"

# entity descriptions are cut at this many whitespace tokens to keep
# multi-edge atoms inside the generator's input budget
DESCRIPTION_TOKEN_CAP = 60

_PLACEHOLDER_RE = re.compile(r"\[[A-Za-z0-9_]+\]")


@dataclass(frozen=True)
class SerializedGraph:
    text: str
    placeholder_map: dict = field(default_factory=dict)


def _truncate(text: str, cap: int = DESCRIPTION_TOKEN_CAP) -> str:
    tokens = text.split()
    return " ".join(tokens[:cap])


def _description(rec: kgmod.EntityRecord) -> str:
    return _truncate(rec.description) if rec.description else rec.name


def _subject_type(predicate: str) -> str:
    parts = predicate.split(".")
    return parts[-2] if len(parts) >= 2 else parts[-1]


def _property_type(predicate: str) -> str:
    return predicate.split(".")[-1]


def delexicalize(text: str, entities) -> str:
    """Replace entity surface names with their type tokens.

    Longest name first, case-insensitive, whole-word occurrences only.
    `entities` is a sequence of (surface name, type token) pairs.
    """
    for name, token in sorted(entities, key=lambda e: -len(e[0])):
        if not name:
            continue
        pattern = re.compile(r"(?<!\w)" + re.escape(name) + r"(?!\w)", re.IGNORECASE)
        text = pattern.sub(lambda m, t=token: t, text)
    return text


def relexicalize(text: str, placeholder_map: dict) -> str:
    """Replace every bracketed placeholder with its mapped entity name."""

    def sub(m):
        token = m.group()
        if token not in placeholder_map:
            raise UnmappedPlaceholder(token)
        return placeholder_map[token]

    return _PLACEHOLDER_RE.sub(sub, text)


class _TokenAllocator:
    """Assigns a unique bracketed token per distinct entity in one atom."""

    def __init__(self):
        self.by_entity = {}
        self.taken = {}

    def token(self, rec: kgmod.EntityRecord, base: str) -> str:
        if rec.id in self.by_entity:
            return self.by_entity[rec.id]
        candidate = f"[{base}]"
        n = 1
        while candidate in self.taken:
            n += 1
            candidate = f"[{base}_{n}]"
        self.taken[candidate] = rec.id
        self.by_entity[rec.id] = candidate
        return candidate


def serialize(g: AtomicSubgraph, strategy: str = ENTITY_NAME) -> SerializedGraph:
    """Serialize one atom under the given strategy.

    Single: ``<H> name <D> desc <P> predicate <T> name <D> desc``.
    CVT: per-edge ``<P> [R@]predicate <T> name <D> desc`` segments,
    inward edges first, joined by single spaces.
    """
    if strategy not in (ENTITY_NAME, TYPE_PLACEHOLDER):
        raise ValueError(f"unknown strategy {strategy!r}")

    alloc = _TokenAllocator()

    if g.kind == kgmod.SINGLE:
        subj, predicate, obj = g.single
        if strategy == ENTITY_NAME:
            text = (
                f"<H> {subj.name} <D> {_description(subj)} <P> {predicate} "
                f"<T> {obj.name} <D> {_description(obj)}"
            )
            return SerializedGraph(text=text)
        s_tok = alloc.token(subj, _subject_type(predicate))
        o_tok = alloc.token(obj, _property_type(predicate))
        pairs = [(subj.name, s_tok), (obj.name, o_tok)]
        text = (
            f"<H> {s_tok} <D> {delexicalize(_description(subj), pairs)} "
            f"<P> {predicate} "
            f"<T> {o_tok} <D> {delexicalize(_description(obj), pairs)}"
        )
        return SerializedGraph(text=text, placeholder_map=dict(alloc.taken))

    inward = sorted(g.cvt.inward, key=lambda ep: (ep[1], ep[0].id))
    outward = sorted(g.cvt.outward, key=lambda pe: (pe[0], pe[1].id))

    if strategy == TYPE_PLACEHOLDER:
        # allocate tokens for every edge entity first so descriptions can
        # be delexicalized against the whole atom
        for rec, predicate in inward:
            alloc.token(rec, _subject_type(predicate))
        for predicate, rec in outward:
            alloc.token(rec, _property_type(predicate))
        pairs = [
            (rec.name, alloc.by_entity[rec.id])
            for rec in g.entity_records()
            if rec.name
        ]

    segments = []
    for rec, predicate in inward:
        segments.append((f"R@{predicate}", rec))
    for predicate, rec in outward:
        segments.append((predicate, rec))

    parts = []
    for marker_pred, rec in segments:
        if strategy == ENTITY_NAME:
            parts.append(f"<P> {marker_pred} <T> {rec.name} <D> {_description(rec)}")
        else:
            token = alloc.by_entity[rec.id]
            desc = delexicalize(_description(rec), pairs)
            parts.append(f"<P> {marker_pred} <T> {token} <D> {desc}")
    text = " ".join(parts)
    if strategy == ENTITY_NAME:
        return SerializedGraph(text=text)
    return SerializedGraph(text=text, placeholder_map=dict(alloc.taken))
