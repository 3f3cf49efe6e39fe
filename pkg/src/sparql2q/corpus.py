"""Document corpus indexing and distant-supervision description matching.

Single-relation atoms are matched against sentences containing both the
subject and object names; CVT atoms against paragraphs containing every
entity name of the atom. Matched paragraphs are cleaned by dropping
sentences that mention no entity of the atom.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

from . import kg as kgmod
from .errors import LoadError
from .sampler import AtomicSubgraph
from .serializer import TYPE_PLACEHOLDER, delexicalize, serialize

SENTENCE_UNIT = "sentence"
PARAGRAPH_UNIT = "paragraph"

# at most this many descriptions are kept per atom, shortest first
MATCH_CAP = 3

_WORD_RE = re.compile(r"\w+", re.UNICODE)
_SENT_SPLIT_RE = re.compile(r"(?<=[.!?])\s+(?=[\"'(\[]?[A-Z0-9])")


def word_tokens(text: str):
    """Lowercased word tokens, Unicode-aware."""
    return [m.group().lower() for m in _WORD_RE.finditer(text)]


def split_sentences(paragraph: str):
    """Split on terminal punctuation followed by whitespace and a capital."""
    parts = [s for s in _SENT_SPLIT_RE.split(paragraph) if s.strip()]
    return parts or ([paragraph] if paragraph.strip() else [])


@dataclass(frozen=True)
class Sentence:
    text: str
    tokens: tuple


@dataclass(frozen=True)
class Paragraph:
    sentences: tuple


@dataclass(frozen=True)
class Document:
    title: str
    paragraphs: tuple


@dataclass(frozen=True)
class DescriptionMatch:
    atom_id: str
    matched_text: str
    unit: str
    entity_hits: dict  # entity name -> list of (doc, para, sent, token) positions


class CorpusIndex:
    """Token-level inverted index over sentence-segmented documents."""

    def __init__(self, documents):
        self.documents = list(documents)
        self.postings = {}
        for d, doc in enumerate(self.documents):
            for p, para in enumerate(doc.paragraphs):
                for s, sent in enumerate(para.sentences):
                    for t, token in enumerate(sent.tokens):
                        self.postings.setdefault(token, []).append((d, p, s, t))

    def find_name(self, name: str):
        """All whole-token occurrences of a (possibly multi-token) name."""
        tokens = word_tokens(name)
        if not tokens:
            return []
        hits = []
        for d, p, s, t in self.postings.get(tokens[0], ()):
            sent = self.documents[d].paragraphs[p].sentences[s]
            if tuple(sent.tokens[t : t + len(tokens)]) == tuple(tokens):
                hits.append((d, p, s, t))
        return hits

    def sentence(self, d, p, s) -> Sentence:
        return self.documents[d].paragraphs[p].sentences[s]


def _build_document(rec: dict) -> Document:
    paragraphs = []
    for text in rec.get("paragraphs", ()):
        sentences = tuple(
            Sentence(text=s, tokens=tuple(word_tokens(s)))
            for s in split_sentences(text)
        )
        paragraphs.append(Paragraph(sentences=sentences))
    return Document(title=rec["title"], paragraphs=tuple(paragraphs))


def index(documents_path) -> CorpusIndex:
    """Index a JSONL corpus: one document per line with title, paragraphs."""
    docs = []
    with open(documents_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LoadError(f"{documents_path}:{lineno}: invalid record: {exc}") from exc
            if not rec.get("title"):
                raise LoadError(f"{documents_path}:{lineno}: missing title")
            docs.append(_build_document(rec))
    return CorpusIndex(docs)


def match_single(idx: CorpusIndex, subject_name: str, object_name: str,
                 atom_id: str = "") -> list:
    """One match per sentence where both names co-occur."""
    subj_hits = idx.find_name(subject_name)
    obj_hits = idx.find_name(object_name)
    obj_sentences = {(d, p, s) for d, p, s, _ in obj_hits}
    matches = []
    seen = set()
    for d, p, s, t in subj_hits:
        if (d, p, s) in obj_sentences and (d, p, s) not in seen:
            seen.add((d, p, s))
            hits = {
                subject_name: [h for h in subj_hits if h[:3] == (d, p, s)],
                object_name: [h for h in obj_hits if h[:3] == (d, p, s)],
            }
            matches.append(
                DescriptionMatch(
                    atom_id=atom_id,
                    matched_text=idx.sentence(d, p, s).text,
                    unit=SENTENCE_UNIT,
                    entity_hits=hits,
                )
            )
    return matches


def match_cvt(idx: CorpusIndex, entity_names, atom_id: str = "") -> list:
    """One match per paragraph containing all names, cleaned of
    entity-free sentences."""
    names = [n for n in entity_names if n]
    if len(names) < 2:
        return []
    per_name = {n: idx.find_name(n) for n in names}
    para_sets = [{h[:2] for h in hits} for hits in per_name.values()]
    common = set.intersection(*para_sets) if para_sets else set()
    matches = []
    for d, p in sorted(common):
        para = idx.documents[d].paragraphs[p]
        sentences_with_entity = set()
        hits = {}
        for name, occurrences in per_name.items():
            local = [h for h in occurrences if h[:2] == (d, p)]
            hits[name] = local
            sentences_with_entity.update(h[2] for h in local)
        kept = [
            para.sentences[s].text
            for s in range(len(para.sentences))
            if s in sentences_with_entity
        ]
        matches.append(
            DescriptionMatch(
                atom_id=atom_id,
                matched_text=" ".join(kept),
                unit=PARAGRAPH_UNIT,
                entity_hits=hits,
            )
        )
    return matches


def match_atom(idx: CorpusIndex, atom: AtomicSubgraph) -> list:
    """Dispatch on atom kind; capped at MATCH_CAP shortest matches."""
    if atom.kind == kgmod.SINGLE:
        subj, _, obj = atom.single
        matches = match_single(idx, subj.name, obj.name, atom_id=atom.key())
    else:
        names = {rec.name for rec in atom.entity_records() if rec.name}
        matches = match_cvt(idx, sorted(names), atom_id=atom.key())
    matches.sort(key=lambda m: (len(m.matched_text), m.matched_text))
    return matches[:MATCH_CAP]


def build_training_pairs(atoms, idx: CorpusIndex, strategy: str,
                         seed: int = 0, window: int = 64) -> list:
    """(input, target, kind, atom_id) records for auto-prompter training.

    Unmatched atoms are dropped. Under the type-placeholder strategy the
    target description is delexicalized with the atom's type tokens.
    Output order is a seeded shuffle that interleaves Single and CVT
    pairs evenly inside each window of `window` records.
    """
    by_kind = {kgmod.SINGLE: [], kgmod.CVT: []}
    for atom in atoms:
        matches = match_atom(idx, atom)
        if not matches:
            continue
        serialized = serialize(atom, strategy)
        for m in matches:
            target = m.matched_text
            if strategy == TYPE_PLACEHOLDER:
                records = {r.id: r for r in atom.entity_records()}
                pairs = [
                    (records[eid].name, token)
                    for token, eid in serialized.placeholder_map.items()
                    if eid in records and records[eid].name
                ]
                target = delexicalize(target, pairs)
            by_kind[atom.kind].append(
                {
                    "input": serialized.text,
                    "target": target,
                    "kind": atom.kind,
                    "atom_id": atom.key(),
                }
            )

    rng = random.Random(seed)
    rng.shuffle(by_kind[kgmod.SINGLE])
    rng.shuffle(by_kind[kgmod.CVT])

    # fill each window round-robin across kinds while both remain
    queues = [by_kind[kgmod.SINGLE], by_kind[kgmod.CVT]]
    out = []
    turn = 0
    while any(queues):
        for _ in range(window):
            if not any(queues):
                break
            for offset in range(2):
                q = queues[(turn + offset) % 2]
                if q:
                    out.append(q.pop(0))
                    break
            turn += 1
    return out
