"""End-to-end flows: prompt building, QG sample construction, split
subsampling and topic-entity data augmentation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import generate as genmod
from . import kg as kgmod
from . import sparql as sparqlmod
from .errors import NotInstantiable, ProtocolError, Sparql2qError, TransportError
from .prompt import PromptText, annotate_variables, assemble, fallback_verbalize
from .sampler import decompose, instantiate
from .serializer import TYPE_PLACEHOLDER, relexicalize, serialize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetItem:
    id: str
    sparql: str
    question: str = ""
    split: str = "train"


@dataclass(frozen=True)
class TrainingSample:
    input: str
    target: str
    provenance: dict = field(default_factory=dict)


@dataclass
class RunReport:
    produced: int = 0
    skipped: int = 0
    notes: list = field(default_factory=list)

    def summary(self) -> str:
        text = f"produced={self.produced} skipped={self.skipped}"
        if self.notes:
            text += " " + "; ".join(self.notes)
        return text


def stable_seed(seed: int, *parts) -> int:
    """Deterministic sub-seed from a root seed and string parts."""
    digest = hashlib.sha256(
        ":".join([str(seed), *map(str, parts)]).encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:8], "big")


def read_items(path):
    items = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            items.append(
                DatasetItem(
                    id=rec["id"],
                    sparql=rec["sparql"],
                    question=rec.get("question", ""),
                    split=rec.get("split", "train"),
                )
            )
    return items


def write_records(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def build_prompt(item: DatasetItem, kg: kgmod.KnowledgeGraph, prompter,
                 strategy: str, seed: int,
                 config: genmod.GenerationConfig = genmod.PROMPTER_CONFIG) -> PromptText:
    """Instantiate the item's query, describe each atom with the prompter
    backend (template fallback per atom on failure), assemble and
    annotate the prompt text."""
    q = sparqlmod.parse(item.sparql)
    g_full = instantiate(q, kg, seed=seed)
    atoms = decompose(g_full)
    serialized = [serialize(a, strategy) for a in atoms]

    descriptions = {}
    outputs = [None] * len(atoms)
    try:
        result = genmod.generate(
            prompter,
            genmod.GenerationRequest(
                inputs=tuple(s.text for s in serialized),
                config=config,
            ),
        )
        outputs = list(result.outputs)
    except (TransportError, ProtocolError):
        # backend-level failure, not a per-atom one; the caller decides
        raise
    except Sparql2qError as exc:
        log.warning("prompter backend failed (%s); using fallback for all atoms", exc)

    for atom, ser, out in zip(atoms, serialized, outputs):
        desc = out
        if desc is not None and strategy == TYPE_PLACEHOLDER:
            name_map = {
                token: kg.record(eid).name
                for token, eid in ser.placeholder_map.items()
            }
            try:
                desc = relexicalize(desc, name_map)
            except Sparql2qError as exc:
                log.warning("relexicalization failed for atom %s: %s", atom.key(), exc)
                desc = None
        if not desc:
            desc = fallback_verbalize(atom)
        descriptions[atom.key()] = desc

    t = assemble(g_full, descriptions)
    return annotate_variables(t, g_full, kg)


def _qg_input(item: DatasetItem, kg, prompter, strategy, seed,
              config=genmod.PROMPTER_CONFIG) -> str:
    q = sparqlmod.parse(item.sparql)
    named = sparqlmod.substitute_names(q, kg)
    prompt = build_prompt(item, kg, prompter, strategy, seed, config=config)
    return f"{sparqlmod.print_query(named)} {prompt.text}".lower()


def build_qg_samples(items, kg: kgmod.KnowledgeGraph, prompter,
                     strategy: str, seed: int, jobs: int = 1,
                     config=genmod.PROMPTER_CONFIG):
    """(TrainingSample list, RunReport). Items that cannot be
    instantiated are skipped and counted."""

    def one(item):
        item_seed = stable_seed(seed, "qg", item.id)
        try:
            input_text = _qg_input(item, kg, prompter, strategy, item_seed,
                                   config=config)
        except NotInstantiable:
            return None
        return TrainingSample(
            input=input_text,
            target=item.question.lower(),
            provenance={"item_id": item.id, "seed": seed, "strategy": strategy,
                        "separator": "space"},
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(item) for item in items]

    samples = [r for r in results if r is not None]
    report = RunReport(produced=len(samples), skipped=len(results) - len(samples))
    return samples, report


def subsample_split(items, proportion: float, seed: int):
    """ceil(len * proportion) items, seeded uniform without replacement,
    kept in original order."""
    if not 0 < proportion <= 1:
        raise ValueError("proportion must be in (0, 1]")
    if proportion == 1.0:
        return list(items)
    count = math.ceil(len(items) * proportion)
    chosen = sorted(random.Random(seed).sample(range(len(items)), count))
    return [items[i] for i in chosen]


def augment(item: DatasetItem, kg: kgmod.KnowledgeGraph, qg, k: int,
            seed: int, strategy: str = "name", prompter=None,
            qg_config=genmod.QG_CONFIG):
    """Alternative-topic-entity items for one source item.

    Abstract the topic entities, query the graph for alternative entity
    tuples, pick up to k seeded, re-substitute, keep only rewrites that
    still evaluate non-empty, and generate a question for each with the
    QG backend.
    """
    if prompter is None:
        prompter = genmod.template_backend(genmod.PROMPTER_ROLE)
    q = sparqlmod.parse(item.sparql)
    abstracted, mapping = sparqlmod.abstract_topic_entities(q)
    fresh_vars = [mapping[e] for e in mapping]
    probe = dataclasses.replace(
        abstracted,
        projection=tuple(fresh_vars),
        distinct=True,
        count_var=None,
        order_by=None,
        limit=None,
    )
    rows = sparqlmod.evaluate(probe, kg)
    original = tuple(mapping.keys())
    candidates = []
    for row in rows:
        if row == original:
            continue
        if all(term in kg.entities and kg.entities[term].name for term in row):
            candidates.append(row)

    rng = random.Random(stable_seed(seed, "augment", item.id))
    if len(candidates) > k:
        candidates = rng.sample(candidates, k)

    new_items = []
    for i, row in enumerate(candidates):
        substitution = dict(zip(original, row))
        new_q = sparqlmod.replace_terms(q, substitution)
        if not sparqlmod.evaluate(sparqlmod.expand_projection(new_q), kg):
            continue
        new_items.append(
            DatasetItem(
                id=f"{item.id}#aug{i}",
                sparql=sparqlmod.print_query(new_q),
                question="",
                split=item.split,
            )
        )

    if not new_items:
        return []

    inputs = []
    for new_item in new_items:
        item_seed = stable_seed(seed, "augment-prompt", new_item.id)
        inputs.append(_qg_input(new_item, kg, prompter, strategy, item_seed))
    result = genmod.generate(
        qg, genmod.GenerationRequest(inputs=tuple(inputs), config=qg_config)
    )
    return [
        dataclasses.replace(new_item, question=question)
        for new_item, question in zip(new_items, result.outputs)
    ]
