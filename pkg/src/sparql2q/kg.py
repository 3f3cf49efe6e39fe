"""In-memory Freebase-style knowledge graph with adjacency indexes.

Triples are (subject, predicate, object) id strings. Literals live in the
same id space as entities and are distinguished by their encoding:
``"lexical"^^type``. The store is immutable after load and safe for any
number of concurrent readers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import LoadError, UnknownEntity

SINGLE = "single"
CVT = "cvt"


def is_literal(term: str) -> bool:
    """True for typed-literal ids of the form ``"lexical"^^type``."""
    return term.startswith('"')


def make_literal(lexical: str, type_: str = "string") -> str:
    return f'"{lexical}"^^{type_}'


def split_literal(term: str):
    """Return (lexical, type) for a literal id; type may be empty."""
    if not is_literal(term):
        raise ValueError(f"not a literal: {term!r}")
    body = term[1:]
    if '"^^' in body:
        lexical, type_ = body.rsplit('"^^', 1)
        return lexical, type_
    return body.rstrip('"'), ""


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        if not self.subject or not self.predicate:
            raise ValueError("subject and predicate must be non-empty")

    def as_tuple(self):
        return (self.subject, self.predicate, self.object)


@dataclass(frozen=True)
class EntityRecord:
    id: str
    name: str = ""
    description: str = ""
    types: tuple = ()

    @property
    def is_cvt(self) -> bool:
        return not self.name


@dataclass
class LoadReport:
    triple_count: int = 0
    entity_count: int = 0
    uncatalogued_predicates: list = field(default_factory=list)
    dangling_ids: list = field(default_factory=list)

    def summary(self) -> str:
        return (
            f"triples={self.triple_count} entities={self.entity_count} "
            f"uncatalogued={len(self.uncatalogued_predicates)} "
            f"dangling={len(self.dangling_ids)}"
        )


class KnowledgeGraph:
    """Triple set plus entity metadata, predicate catalog and indexes."""

    def __init__(self, triples, entities, catalog):
        self.triples = set(t.as_tuple() if isinstance(t, Triple) else tuple(t) for t in triples)
        self.entities = dict(entities)
        self.catalog = dict(catalog)
        self.by_subject = {}
        self.by_object = {}
        self.by_predicate = {}
        for t in sorted(self.triples):
            self.by_subject.setdefault(t[0], []).append(t)
            self.by_object.setdefault(t[2], []).append(t)
            self.by_predicate.setdefault(t[1], []).append(t)

    # -- lookups ---------------------------------------------------------

    def predicate_kind(self, predicate: str) -> str:
        return self.catalog.get(predicate, SINGLE)

    def has_node(self, term: str) -> bool:
        return term in self.entities or term in self.by_subject or term in self.by_object

    def record(self, term: str) -> EntityRecord:
        """Entity record for a term; literals and dangling ids get synthetic ones."""
        if term in self.entities:
            return self.entities[term]
        if is_literal(term):
            lexical, _ = split_literal(term)
            return EntityRecord(id=term, name=lexical)
        return EntityRecord(id=term, name=term)

    def match_pattern(self, pattern):
        """All bindings of the pattern's variables against the triple set.

        A term starting with '?' is a variable. Returns a sorted list of
        dicts; a ground pattern yields [] or [{}].
        """
        s, p, o = pattern
        if not s.startswith("?") and s in self.by_subject:
            candidates = self.by_subject[s]
        elif not o.startswith("?") and o in self.by_object:
            candidates = self.by_object[o]
        elif not p.startswith("?") and p in self.by_predicate:
            candidates = self.by_predicate[p]
        elif s.startswith("?") and p.startswith("?") and o.startswith("?"):
            candidates = sorted(self.triples)
        else:
            return []
        out = []
        for t in candidates:
            binding = {}
            ok = True
            for term, value in zip((s, p, o), t):
                if term.startswith("?"):
                    if term in binding and binding[term] != value:
                        ok = False
                        break
                    binding[term] = value
                elif term != value:
                    ok = False
                    break
            if ok:
                out.append(binding)
        out.sort(key=lambda b: tuple(sorted(b.items())))
        # ground pattern may match several identical empty bindings
        deduped = []
        for b in out:
            if not deduped or deduped[-1] != b:
                deduped.append(b)
        return deduped

    def one_hop_star(self, center: str):
        """All edges touching center: (inward (e1, p) list, outward (p, e2) list)."""
        if not self.has_node(center):
            raise UnknownEntity(center)
        inward = sorted((t[0], t[1]) for t in self.by_object.get(center, ()))
        outward = sorted((t[1], t[2]) for t in self.by_subject.get(center, ()))
        return inward, outward


def load(kg_triples_path, entities_path, catalog_path):
    """Load a graph from the three on-disk files.

    Returns (KnowledgeGraph, LoadReport). Uncatalogued predicates default
    to Single and are listed in the report; dangling entity ids are
    reported but do not fail the load.
    """
    catalog = {}
    with open(catalog_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or parts[1] not in (SINGLE, CVT):
                raise LoadError(f"{catalog_path}:{lineno}: malformed catalog line")
            catalog[parts[0]] = parts[1]

    entities = {}
    with open(entities_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LoadError(f"{entities_path}:{lineno}: invalid record: {exc}") from exc
            if "id" not in rec:
                raise LoadError(f"{entities_path}:{lineno}: missing id field")
            if rec["id"] in entities:
                raise LoadError(f"{entities_path}:{lineno}: duplicate entity id {rec['id']}")
            entities[rec["id"]] = EntityRecord(
                id=rec["id"],
                name=rec.get("name", ""),
                description=rec.get("description", ""),
                types=tuple(rec.get("types", ())),
            )

    triples = []
    with open(kg_triples_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 or not parts[0] or not parts[1]:
                raise LoadError(f"{kg_triples_path}:{lineno}: malformed triple line")
            triples.append(tuple(parts))

    kg = KnowledgeGraph(triples, entities, catalog)

    report = LoadReport(triple_count=len(kg.triples), entity_count=len(entities))
    uncat = set()
    dangling = set()
    for s, p, o in kg.triples:
        if p not in catalog:
            uncat.add(p)
        for term in (s, o):
            if not is_literal(term) and term not in entities:
                dangling.add(term)
    report.uncatalogued_predicates = sorted(uncat)
    report.dangling_ids = sorted(dangling)
    return kg, report
