"""Command-line entry point exposing each pipeline stage.

Exit codes: 0 success, 2 missing input or config conflict, 3 backend
transport failure, 4 internal invariant violation. Defaults may come
from a flat key-value config file (``stage.key = value`` lines) named by
``--config`` or the SPARQL2Q_CONFIG environment variable; explicit flags
always win.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import corpus as corpusmod
from . import generate as genmod
from . import kg as kgmod
from . import metrics as metricsmod
from . import pipeline as pipemod
from . import sampler as samplermod
from .errors import LoadError, ProtocolError, Sparql2qError, TransportError
from .sampler import atom_from_record, atom_to_record
from .serializer import ENTITY_NAME, TYPE_PLACEHOLDER

CONFIG_ENV = "SPARQL2Q_CONFIG"

_STRATEGIES = {"name": ENTITY_NAME, "type": TYPE_PLACEHOLDER}


def load_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise LoadError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def apply_config(args, stage):
    path = args.config or os.environ.get(CONFIG_ENV)
    if not path:
        return args
    values = load_config_file(path)
    for key, value in values.items():
        if "." in key:
            key_stage, name = key.split(".", 1)
            if key_stage != stage:
                continue
        else:
            name = key
        name = name.replace("-", "_")
        if not hasattr(args, name) or name in args._explicit:
            continue
        current = getattr(args, name)
        if isinstance(current, bool):
            value = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            value = int(value)
        elif isinstance(current, float):
            value = float(value)
        setattr(args, name, value)
    return args


class _TrackingNamespace(argparse.Namespace):
    def __init__(self):
        super().__init__()
        object.__setattr__(self, "_explicit", set())


def _require(args, *names):
    for name in names:
        value = getattr(args, name, None)
        if not value:
            raise SystemExit2(f"missing required option --{name.replace('_', '-')}")
        if name in ("kg", "entities", "catalog", "corpus", "dataset",
                    "predictions", "references", "atoms") and not os.path.exists(value):
            raise SystemExit2(f"input file not found: {value}")


class SystemExit2(Exception):
    """Missing input or config conflict; mapped to exit code 2."""


def _load_kg(args):
    _require(args, "kg", "entities", "catalog")
    return kgmod.load(args.kg, args.entities, args.catalog)


def _gen_config(args, role):
    base = genmod.PROMPTER_CONFIG if role == genmod.PROMPTER_ROLE else genmod.QG_CONFIG
    return dataclasses.replace(base, beam_size=args.beam_size,
                               length_penalty=args.length_penalty)


def _backend(args, role):
    if args.backend == "template":
        return genmod.template_backend(role)
    if args.backend == "remote":
        if not args.endpoint:
            raise SystemExit2("--backend remote requires --endpoint")
        return genmod.remote_backend(args.endpoint)
    raise SystemExit2(f"unknown backend {args.backend!r}")


def _write_report(args, stage, text):
    print(f"[{stage}] {text}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{stage}.report.txt"), "w",
                  encoding="utf-8") as f:
            f.write(text + "\n")


def _out_path(args, name):
    if not args.out:
        raise SystemExit2("missing required option --out")
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


# -- subcommands -------------------------------------------------------------


def cmd_load_check(args):
    _, report = _load_kg(args)
    _write_report(args, "load-check", report.summary())
    if report.uncatalogued_predicates:
        print("uncatalogued:", ", ".join(report.uncatalogued_predicates))
    if report.dangling_ids:
        print("dangling:", ", ".join(report.dangling_ids))
    return 0


def cmd_sample_predicates(args):
    kg, _ = _load_kg(args)
    predicates = [args.predicate] if args.predicate else sorted(kg.catalog)
    out_path = _out_path(args, "atoms.jsonl")
    count = 0
    with open(out_path, "w", encoding="utf-8") as f:
        for predicate in predicates:
            seed = pipemod.stable_seed(args.seed, "sample", predicate)
            for atom in samplermod.sample_for_predicate(kg, predicate,
                                                        limit=args.limit, seed=seed):
                f.write(json.dumps(atom_to_record(atom), sort_keys=True) + "\n")
                count += 1
    _write_report(args, "sample-predicates",
                  f"predicates={len(predicates)} atoms={count}")
    return 0


def _read_atoms(path):
    atoms = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                atoms.append(atom_from_record(json.loads(line)))
    return atoms


def cmd_collect_descriptions(args):
    _require(args, "corpus", "atoms")
    idx = corpusmod.index(args.corpus)
    atoms = _read_atoms(args.atoms)
    out_path = _out_path(args, "descriptions.jsonl")
    matched = 0
    with open(out_path, "w", encoding="utf-8") as f:
        for atom in atoms:
            for m in corpusmod.match_atom(idx, atom):
                f.write(json.dumps(
                    {"atom_id": m.atom_id, "text": m.matched_text, "unit": m.unit},
                    sort_keys=True) + "\n")
                matched += 1
    _write_report(args, "collect-descriptions",
                  f"atoms={len(atoms)} matches={matched}")
    return 0


def cmd_build_prompter_data(args):
    _require(args, "corpus", "atoms")
    idx = corpusmod.index(args.corpus)
    atoms = _read_atoms(args.atoms)
    pairs = corpusmod.build_training_pairs(
        atoms, idx, _STRATEGIES[args.strategy],
        seed=pipemod.stable_seed(args.seed, "prompter-data"),
        window=args.window,
    )
    pipemod.write_records(_out_path(args, "prompter_pairs.jsonl"), pairs)
    _write_report(args, "build-prompter-data",
                  f"atoms={len(atoms)} pairs={len(pairs)}")
    return 0


def cmd_build_prompts(args):
    kg, _ = _load_kg(args)
    _require(args, "dataset")
    items = pipemod.read_items(args.dataset)
    backend = _backend(args, genmod.PROMPTER_ROLE)
    records = []
    skipped = 0
    for item in items:
        seed = pipemod.stable_seed(args.seed, "prompt", item.id)
        try:
            t = pipemod.build_prompt(item, kg, backend,
                                     _STRATEGIES[args.strategy], seed,
                                     config=_gen_config(args, genmod.PROMPTER_ROLE))
        except Sparql2qError as exc:
            if isinstance(exc, (TransportError, ProtocolError)):
                raise
            skipped += 1
            continue
        records.append({
            "id": item.id,
            "text": t.text,
            "segments": list(t.segments),
            "annotations": [list(a) for a in t.annotations],
        })
    pipemod.write_records(_out_path(args, "prompts.jsonl"), records)
    _write_report(args, "build-prompts",
                  f"produced={len(records)} skipped={skipped}")
    return 0


def cmd_build_qg_data(args):
    kg, _ = _load_kg(args)
    _require(args, "dataset")
    items = pipemod.read_items(args.dataset)
    backend = _backend(args, genmod.PROMPTER_ROLE)
    samples, report = pipemod.build_qg_samples(
        items, kg, backend, _STRATEGIES[args.strategy], args.seed, jobs=args.jobs,
        config=_gen_config(args, genmod.PROMPTER_ROLE),
    )
    pipemod.write_records(
        _out_path(args, "qg_samples.jsonl"),
        [{"input": s.input, "target": s.target, "provenance": s.provenance}
         for s in samples],
    )
    _write_report(args, "build-qg-data",
                  f"{report.summary()} ({report.produced} samples)")
    return 0


def cmd_subsample(args):
    _require(args, "dataset")
    items = pipemod.read_items(args.dataset)
    subset = pipemod.subsample_split(items, args.proportion, args.seed)
    pipemod.write_records(
        _out_path(args, "subsample.jsonl"),
        [{"id": i.id, "sparql": i.sparql, "question": i.question, "split": i.split}
         for i in subset],
    )
    _write_report(args, "subsample", f"selected={len(subset)} of {len(items)}")
    return 0


def cmd_augment(args):
    kg, _ = _load_kg(args)
    _require(args, "dataset")
    items = pipemod.read_items(args.dataset)
    qg = _backend(args, genmod.QG_ROLE)
    prompter = _backend(args, genmod.PROMPTER_ROLE)
    out = []
    skipped = 0
    for item in items:
        try:
            out.extend(pipemod.augment(item, kg, qg, args.k, args.seed,
                                       strategy=_STRATEGIES[args.strategy],
                                       prompter=prompter,
                                       qg_config=_gen_config(args, genmod.QG_ROLE)))
        except Sparql2qError as exc:
            if isinstance(exc, (TransportError, ProtocolError)):
                raise
            skipped += 1
    pipemod.write_records(
        _out_path(args, "augmented.jsonl"),
        [{"id": i.id, "sparql": i.sparql, "question": i.question, "split": i.split}
         for i in out],
    )
    _write_report(args, "augment",
                  f"sources={len(items)} augmented={len(out)} skipped={skipped}")
    return 0


def cmd_evaluate(args):
    _require(args, "predictions", "references")

    def read_keyed(path):
        rows = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    rec = json.loads(line)
                    rows[rec["id"]] = rec["text"]
        return rows

    preds = read_keyed(args.predictions)
    refs = read_keyed(args.references)
    shared = sorted(set(preds) & set(refs))
    if not shared:
        raise SystemExit2("no shared item ids between predictions and references")
    cands = [metricsmod.tokenize(preds[i]) for i in shared]
    targets = [metricsmod.tokenize(refs[i]) for i in shared]
    report = metricsmod.score_corpus(cands, targets, ids=shared)
    if args.out:
        pipemod.write_records(_out_path(args, "per_item_scores.jsonl"),
                              report.per_item)
    _write_report(args, "evaluate", report.summary())
    return 0


# -- argument wiring -----------------------------------------------------------


class _StoreTracked(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        # subparsers parse into a fresh plain Namespace, so the tracking
        # set may not exist yet; argparse copies it back to the parent
        if not hasattr(namespace, "_explicit"):
            object.__setattr__(namespace, "_explicit", set())
        namespace._explicit.add(self.dest)


def _add_common(p):
    p.add_argument("--config", action=_StoreTracked, default=None,
                   help="flat key-value config file (or set SPARQL2Q_CONFIG)")
    p.add_argument("--out", action=_StoreTracked, default=None,
                   help="output directory")
    p.add_argument("--seed", action=_StoreTracked, type=int, default=0,
                   help="root seed; per-stage sub-seeds are derived from it")
    p.add_argument("--jobs", action=_StoreTracked, type=int, default=1,
                   help="worker parallelism; outputs are independent of N")


def _add_kg(p):
    p.add_argument("--kg", action=_StoreTracked, default=None, help="triples TSV file")
    p.add_argument("--entities", action=_StoreTracked, default=None,
                   help="entity records JSONL file")
    p.add_argument("--catalog", action=_StoreTracked, default=None,
                   help="predicate kind TSV file")


def _add_backend(p):
    p.add_argument("--backend", action=_StoreTracked, default="template",
                   choices=("template", "remote"), help="generator backend")
    p.add_argument("--endpoint", action=_StoreTracked, default=None,
                   help="remote backend base URL")
    p.add_argument("--beam-size", action=_StoreTracked, type=int, default=10,
                   help="beam size forwarded to the backend")
    p.add_argument("--length-penalty", action=_StoreTracked, type=float,
                   default=1.0, help="length penalty forwarded to the backend")


def _add_strategy(p):
    p.add_argument("--strategy", action=_StoreTracked, default="name",
                   choices=("name", "type"), help="serialization strategy")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparql2q",
        description="SPARQL-to-question-generation pipeline stages",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load-check", help="load the KG and print the load report")
    _add_common(p)
    _add_kg(p)
    p.set_defaults(func=cmd_load_check)

    p = sub.add_parser("sample-predicates", help="sample atoms per predicate")
    _add_common(p)
    _add_kg(p)
    p.add_argument("--predicate", action=_StoreTracked, default=None,
                   help="sample one predicate only (default: all catalogued)")
    p.add_argument("--limit", action=_StoreTracked, type=int, default=100,
                   help="max atoms per predicate")
    p.set_defaults(func=cmd_sample_predicates)

    p = sub.add_parser("collect-descriptions",
                       help="match atoms against the document corpus")
    _add_common(p)
    p.add_argument("--corpus", action=_StoreTracked, default=None,
                   help="documents JSONL file")
    p.add_argument("--atoms", action=_StoreTracked, default=None,
                   help="atom stream from sample-predicates")
    p.set_defaults(func=cmd_collect_descriptions)

    p = sub.add_parser("build-prompter-data",
                       help="serialize matched atoms into training pairs")
    _add_common(p)
    _add_strategy(p)
    p.add_argument("--corpus", action=_StoreTracked, default=None,
                   help="documents JSONL file")
    p.add_argument("--atoms", action=_StoreTracked, default=None,
                   help="atom stream from sample-predicates")
    p.add_argument("--window", action=_StoreTracked, type=int, default=64,
                   help="interleave window for kind balancing")
    p.set_defaults(func=cmd_build_prompter_data)

    p = sub.add_parser("build-prompts", help="prompt text for dataset items")
    _add_common(p)
    _add_kg(p)
    _add_strategy(p)
    _add_backend(p)
    p.add_argument("--dataset", action=_StoreTracked, default=None,
                   help="dataset items JSONL file")
    p.set_defaults(func=cmd_build_prompts)

    p = sub.add_parser("build-qg-data", help="QG training samples for dataset items")
    _add_common(p)
    _add_kg(p)
    _add_strategy(p)
    _add_backend(p)
    p.add_argument("--dataset", action=_StoreTracked, default=None,
                   help="dataset items JSONL file")
    p.set_defaults(func=cmd_build_qg_data)

    p = sub.add_parser("subsample", help="seeded proportional subsample of a split")
    _add_common(p)
    p.add_argument("--dataset", action=_StoreTracked, default=None,
                   help="dataset items JSONL file")
    p.add_argument("--proportion", action=_StoreTracked, type=float, default=1.0,
                   help="fraction of items to keep, (0, 1]")
    p.set_defaults(func=cmd_subsample)

    p = sub.add_parser("augment", help="topic-entity data augmentation")
    _add_common(p)
    _add_kg(p)
    _add_strategy(p)
    _add_backend(p)
    p.add_argument("--dataset", action=_StoreTracked, default=None,
                   help="dataset items JSONL file")
    p.add_argument("--k", action=_StoreTracked, type=int, default=10,
                   help="max augmented items per source item")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("evaluate", help="BLEU-4 / METEOR / ROUGE-L report")
    _add_common(p)
    p.add_argument("--predictions", action=_StoreTracked, default=None,
                   help="predictions JSONL keyed by id")
    p.add_argument("--references", action=_StoreTracked, default=None,
                   help="references JSONL keyed by id")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv, namespace=_TrackingNamespace())
    try:
        apply_config(args, args.command)
        return args.func(args)
    except SystemExit2 as exc:
        print(f"error=config {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error=config {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, LoadError) as exc:
        print(f"error=input {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"error=transport {exc}", file=sys.stderr)
        return 3
    except Sparql2qError as exc:
        print(f"error=invariant {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
