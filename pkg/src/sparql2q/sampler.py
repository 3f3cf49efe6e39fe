"""Atomic subgraph sampling: training-stage predicate samples and
inference-stage instantiation of a query's full graph."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from . import kg as kgmod
from . import sparql as sparqlmod
from .errors import NotInstantiable

# one-hop context edges kept around a CVT center beyond the pattern edges
CVT_CONTEXT_CAP = 8

# instantiation picks uniformly over at most this many solutions
MAX_SOLUTIONS = 1000


@dataclass(frozen=True)
class CvtStar:
    center: str
    inward: tuple  # of (EntityRecord, predicate)
    outward: tuple  # of (predicate, EntityRecord)


@dataclass(frozen=True)
class AtomicSubgraph:
    kind: str  # kg.SINGLE or kg.CVT
    single: tuple | None = None  # (EntityRecord, predicate, EntityRecord)
    cvt: CvtStar | None = None
    var_roles: dict = field(default_factory=dict)  # entity id -> variable

    def __post_init__(self):
        if (self.kind == kgmod.SINGLE) != (self.single is not None):
            raise ValueError("single atoms must carry exactly the single field")
        if (self.kind == kgmod.CVT) != (self.cvt is not None):
            raise ValueError("cvt atoms must carry exactly the cvt field")

    def edge_triples(self):
        """Edges re-assembled as (s, p, o) id triples."""
        if self.kind == kgmod.SINGLE:
            s, p, o = self.single
            return [(s.id, p, o.id)]
        out = [(rec.id, p, self.cvt.center) for rec, p in self.cvt.inward]
        out.extend((self.cvt.center, p, rec.id) for p, rec in self.cvt.outward)
        return out

    def entity_records(self):
        if self.kind == kgmod.SINGLE:
            return [self.single[0], self.single[2]]
        return [rec for rec, _ in self.cvt.inward] + [rec for _, rec in self.cvt.outward]

    def key(self) -> str:
        """Stable content hash used as the atom's record id."""
        payload = json.dumps([self.kind, sorted(self.edge_triples())], sort_keys=True)
        return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class InstantiatedGraph:
    atoms: tuple
    bindings: dict  # variable -> bound id
    source: sparqlmod.SparqlQuery


def _record_dict(rec: kgmod.EntityRecord) -> dict:
    return {"id": rec.id, "name": rec.name, "description": rec.description,
            "types": list(rec.types)}


def atom_to_record(atom: AtomicSubgraph) -> dict:
    """JSON-serializable record for the atom stream (one atom per line)."""
    rec = {"kind": atom.kind, "atom_id": atom.key(),
           "var_roles": dict(atom.var_roles)}
    if atom.kind == kgmod.SINGLE:
        s, p, o = atom.single
        rec["single"] = {"subject": _record_dict(s), "predicate": p,
                         "object": _record_dict(o)}
    else:
        rec["cvt"] = {
            "center": atom.cvt.center,
            "inward": [[_record_dict(r), p] for r, p in atom.cvt.inward],
            "outward": [[p, _record_dict(r)] for p, r in atom.cvt.outward],
        }
    return rec


def atom_from_record(rec: dict) -> AtomicSubgraph:
    def unrec(d):
        return kgmod.EntityRecord(id=d["id"], name=d["name"],
                                  description=d["description"],
                                  types=tuple(d["types"]))

    if rec["kind"] == kgmod.SINGLE:
        s = rec["single"]
        single = (unrec(s["subject"]), s["predicate"], unrec(s["object"]))
        return AtomicSubgraph(kind=kgmod.SINGLE, single=single,
                              var_roles=dict(rec.get("var_roles", {})))
    c = rec["cvt"]
    star = CvtStar(
        center=c["center"],
        inward=tuple((unrec(r), p) for r, p in c["inward"]),
        outward=tuple((p, unrec(r)) for p, r in c["outward"]),
    )
    return AtomicSubgraph(kind=kgmod.CVT, cvt=star,
                          var_roles=dict(rec.get("var_roles", {})))


def _seeded_sample(items, limit, seed):
    if len(items) <= limit:
        return list(items)
    return random.Random(seed).sample(list(items), limit)


def sample_for_predicate(kg: kgmod.KnowledgeGraph, predicate: str,
                         limit: int = 100, seed: int = 0):
    """Training-stage atoms for one predicate.

    Single: up to `limit` (s, p, o) triples. CVT: up to `limit` tails of
    the predicate, each expanded to its full one-hop star. Selection is
    a seeded uniform sample over the canonical candidate order.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    kind = kg.predicate_kind(predicate)
    if kind == kgmod.SINGLE:
        matches = kg.match_pattern(("?s", predicate, "?o"))
        chosen = _seeded_sample(matches, limit, seed)
        return [
            AtomicSubgraph(
                kind=kgmod.SINGLE,
                single=(kg.record(m["?s"]), predicate, kg.record(m["?o"])),
            )
            for m in chosen
        ]
    tails = sorted({m["?x"] for m in kg.match_pattern(("?y", predicate, "?x"))})
    atoms = []
    for center in _seeded_sample(tails, limit, seed):
        inward, outward = kg.one_hop_star(center)
        atoms.append(
            AtomicSubgraph(
                kind=kgmod.CVT,
                cvt=CvtStar(
                    center=center,
                    inward=tuple((kg.record(e), p) for e, p in inward),
                    outward=tuple((p, kg.record(e)) for p, e in outward),
                ),
            )
        )
    return atoms


def _partition(ground, kg, bindings, context_cap):
    """Group ground pattern triples into atoms, CVT stars absorbing every
    edge that touches their center."""
    centers = []
    for s, p, o in ground:
        if kg.predicate_kind(p) == kgmod.CVT and o not in centers:
            centers.append(o)

    var_roles = {}
    for var in sorted(bindings):
        var_roles.setdefault(bindings[var], var)

    atoms = []
    atom_of_center = {}

    def center_entry(center):
        entry = atom_of_center.get(center)
        if entry is None:
            entry = {"inward": [], "outward": []}
            atom_of_center[center] = entry
            atoms.append(("cvt", center))
        return entry

    seen_single = set()
    for s, p, o in ground:
        if o in centers:
            center_entry(o)["inward"].append((s, p))
        elif s in centers:
            center_entry(s)["outward"].append((p, o))
        elif (s, p, o) not in seen_single:
            seen_single.add((s, p, o))
            atoms.append(("single", (s, p, o)))

    built = []
    for kind, payload in atoms:
        if kind == "single":
            s, p, o = payload
            roles = {t: var_roles[t] for t in (s, o) if t in var_roles}
            built.append(
                AtomicSubgraph(
                    kind=kgmod.SINGLE,
                    single=(kg.record(s), p, kg.record(o)),
                    var_roles=roles,
                )
            )
            continue
        center = payload
        entry = atom_of_center[center]
        pattern_in = sorted(set(entry["inward"]), key=lambda ep: (ep[1], ep[0]))
        pattern_out = sorted(set(entry["outward"]))
        pattern_edges = {(e, p, center) for e, p in pattern_in}
        pattern_edges |= {(center, p, e) for p, e in pattern_out}
        star_in, star_out = kg.one_hop_star(center)
        context = []
        for e, p in star_in:
            if (e, p, center) not in pattern_edges:
                context.append(("in", e, p))
        for p, e in star_out:
            if (center, p, e) not in pattern_edges:
                context.append(("out", e, p))
        context.sort(key=lambda c: (c[2], c[1], c[0]))
        context = context[:context_cap]
        inward = list(pattern_in) + [(e, p) for d, e, p in context if d == "in"]
        outward = list(pattern_out) + [(p, e) for d, e, p in context if d == "out"]
        ids = [center] + [e for e, _ in inward] + [e for _, e in outward]
        roles = {t: var_roles[t] for t in ids if t in var_roles}
        built.append(
            AtomicSubgraph(
                kind=kgmod.CVT,
                cvt=CvtStar(
                    center=center,
                    inward=tuple((kg.record(e), p) for e, p in inward),
                    outward=tuple((p, kg.record(e)) for p, e in outward),
                ),
                var_roles=roles,
            )
        )
    return built


def instantiate(q: sparqlmod.SparqlQuery, kg: kgmod.KnowledgeGraph,
                seed: int = 0, context_cap: int = CVT_CONTEXT_CAP) -> InstantiatedGraph:
    """Bind all query variables from one seeded solution and partition the
    ground pattern into atomic subgraphs."""
    expanded = sparqlmod.expand_projection(q)
    rows = sparqlmod.evaluate(expanded, kg)
    if not rows:
        raise NotInstantiable(sparqlmod.print_query(q))
    rows = rows[:MAX_SOLUTIONS]
    row = rows[random.Random(seed).randrange(len(rows))]
    bindings = dict(zip(expanded.projection, row))
    ground = [
        tuple(bindings.get(t, t) for t in p.terms()) for p in q.patterns
    ]
    atoms = _partition(ground, kg, bindings, context_cap)
    return InstantiatedGraph(atoms=tuple(atoms), bindings=bindings, source=q)


def decompose(g_full: InstantiatedGraph):
    """Atoms in pattern order; together they cover every pattern edge."""
    return list(g_full.atoms)
