import itertools
import random

import pytest

from sparql2q import sparql
from sparql2q.errors import (
    EvaluationError,
    NothingToAbstract,
    SparqlSyntaxError,
    UnknownEntity,
    UnsupportedFeature,
)

from conftest import build_kg

TWO_HOP_QUERY = (
    "SELECT DISTINCT ?x WHERE "
    "{ m.01d1st film.actor.film ?y . ?y film.performance.film ?x . }"
)


# -- independent nested-loop evaluation oracle ------------------------------


def oracle_literal(term):
    if term.startswith('"'):
        body = term[1:]
        if '"^^' in body:
            lexical, type_ = body.rsplit('"^^', 1)
        else:
            lexical, type_ = body.rstrip('"'), ""
        base = type_.split(":")[-1]
        if base in ("integer", "int", "long", "float", "double", "decimal"):
            return ("number", float(lexical))
        if base in ("date", "datetime", "gYear", "gYearMonth"):
            return ("date", lexical)
        return ("string", lexical)
    try:
        return ("number", float(term))
    except ValueError:
        return ("id", term)


def oracle_compare(left, op, right):
    lk, lv = oracle_literal(left)
    rk, rv = oracle_literal(right)
    if "id" in (lk, rk):
        if op == "=":
            return left == right
        if op == "!=":
            return left != right
        raise EvaluationError("ordered comparison on id")
    if lk != rk:
        raise EvaluationError("incompatible kinds")
    return {
        "=": lv == rv, "!=": lv != rv, "<": lv < rv,
        ">": lv > rv, "<=": lv <= rv, ">=": lv >= rv,
    }[op]


def oracle_evaluate(q, triples):
    """Naive cross-product join over the raw triple list."""
    pattern_vars = []
    for p in q.patterns:
        for t in p.terms():
            if t.startswith("?") and t not in pattern_vars:
                pattern_vars.append(t)
    solutions = []
    for combo in itertools.product(sorted(set(triples)), repeat=len(q.patterns)):
        binding = {}
        ok = True
        for p, t in zip(q.patterns, combo):
            for term, value in zip(p.terms(), t):
                if term.startswith("?"):
                    if term in binding and binding[term] != value:
                        ok = False
                        break
                    binding[term] = value
                elif term != value:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        keep = True
        for f in q.filters:
            if isinstance(f, sparql.LangFilter):
                value = binding[f.var]
                if not value.startswith('"') or not value.endswith("^^" + f.code):
                    keep = False
                    break
            elif not oracle_compare(binding[f.var], f.op, f.literal):
                keep = False
                break
        if keep and binding not in solutions:
            solutions.append(binding)

    proj = q.projection if q.count_var is None else (q.count_var,)
    paired = sorted(
        ((tuple(b[v] for v in proj), b.get(q.order_by.var) if q.order_by else None)
         for b in solutions),
    )
    if q.distinct:
        seen = set()
        deduped = []
        for row, key in paired:
            if row not in seen:
                seen.add(row)
                deduped.append((row, key))
        paired = deduped

    if q.order_by is not None:
        def sort_key(pair):
            kind, v = oracle_literal(pair[1])
            return (0, v, pair[1]) if kind == "number" else (1, str(v), pair[1])

        paired.sort(key=sort_key, reverse=q.order_by.descending)
    rows = [row for row, _ in paired]
    if q.limit is not None:
        rows = rows[: q.limit]
    if q.count_var is not None:
        return [(len(rows),)]
    return rows


# -- parsing ----------------------------------------------------------------


class TestParse:
    def test_two_hop_query(self):
        q = sparql.parse(TWO_HOP_QUERY)
        assert len(q.patterns) == 2
        assert q.distinct
        assert q.projection == ("?x",)
        assert q.patterns[0].subject == "m.01d1st"

    def test_predicate_probe_query(self):
        q = sparql.parse("SELECT ?s ?o WHERE { ?s dom.type.p1 ?o . }")
        assert len(q.patterns) == 1
        assert q.projection == ("?s", "?o")

    def test_empty_pattern_is_error(self):
        with pytest.raises(SparqlSyntaxError):
            sparql.parse("SELECT ?x WHERE { }")

    def test_prefix_stripped(self):
        text = (
            "PREFIX ns: <http://rdf.freebase.com/ns/> "
            "SELECT ?x WHERE { ns:m.01d1st ns:film.actor.film ?x . }"
        )
        q = sparql.parse(text)
        assert q.patterns[0].subject == "m.01d1st"
        assert q.patterns[0].predicate == "film.actor.film"

    def test_unsupported_constructs(self):
        with pytest.raises(UnsupportedFeature, match="OPTIONAL"):
            sparql.parse("SELECT ?x WHERE { ?x a.b.c ?y . OPTIONAL { ?x a.b.d ?z . } }")
        with pytest.raises(UnsupportedFeature, match="UNION"):
            sparql.parse("SELECT ?x WHERE { ?x a.b.c ?y . } UNION { ?x a.b.d ?y . }")

    def test_syntax_error_has_position(self):
        with pytest.raises(SparqlSyntaxError):
            sparql.parse("SELECT ?x FROM { ?x a.b.c ?y . }")

    def test_filters_and_modifiers(self):
        q = sparql.parse(
            'SELECT ?x WHERE { ?x a.b.num ?n . FILTER ( ?n < "5"^^integer ) } '
            "ORDER BY ?n LIMIT 1"
        )
        assert q.filters[0].op == "<"
        assert q.order_by == sparql.OrderBy("?n", descending=False)
        assert q.limit == 1

    def test_count(self):
        q = sparql.parse("SELECT COUNT(?x) WHERE { ?x a.b.c ?y . }")
        assert q.count_var == "?x"

    def test_unbound_projection_rejected(self):
        with pytest.raises(SparqlSyntaxError):
            sparql.parse("SELECT ?z WHERE { ?x a.b.c ?y . }")


class TestPrint:
    def test_round_trip_two_hop(self):
        q = sparql.parse(TWO_HOP_QUERY)
        assert sparql.parse(sparql.print_query(q)) == q

    def test_order_by_limit_printed(self):
        q = sparql.parse(
            "SELECT ?x WHERE { ?x a.b.num ?num . } ORDER BY ?num LIMIT 1"
        )
        assert "ORDER BY ?num LIMIT 1" in sparql.print_query(q)

    def test_canonical_text_is_identical(self):
        q1 = sparql.parse("SELECT ?x  WHERE  {  ?x a.b.c ?y  . }")
        q2 = sparql.parse("SELECT ?x WHERE { ?x a.b.c ?y . }")
        assert sparql.print_query(q1) == sparql.print_query(q2)

    def test_print_parse_fixed_point(self):
        q = sparql.parse(TWO_HOP_QUERY)
        text = sparql.print_query(q)
        assert sparql.print_query(sparql.parse(text)) == text


# -- evaluation ---------------------------------------------------------------


class TestEvaluate:
    def test_empty_graph(self):
        kg = build_kg([], [], {})
        q = sparql.parse("SELECT ?x WHERE { ?x a.b.c ?y . }")
        assert sparql.evaluate(q, kg) == []
        qc = sparql.parse("SELECT COUNT(?x) WHERE { ?x a.b.c ?y . }")
        assert sparql.evaluate(qc, kg) == [(0,)]

    def test_two_hop_chain(self, film_kg):
        # oracle: nested-loop join by hand over the 6-triple fixture gives
        # exactly m.0abc01
        q = sparql.parse(TWO_HOP_QUERY)
        assert sparql.evaluate(q, film_kg) == [("m.0abc01",)]

    def test_comparative_filter(self):
        triples = [
            ("m.a", "d.t.num", '"3"^^integer'),
            ("m.b", "d.t.num", '"7"^^integer'),
        ]
        kg = build_kg(triples, [], {})
        q = sparql.parse(
            'SELECT ?x WHERE { ?x d.t.num ?n . FILTER ( ?n < "5"^^integer ) }'
        )
        assert sparql.evaluate(q, kg) == oracle_evaluate(q, triples) == [("m.a",)]

    def test_incompatible_literals_raise(self):
        triples = [("m.a", "d.t.num", '"hello"^^string')]
        kg = build_kg(triples, [], {})
        q = sparql.parse(
            'SELECT ?x WHERE { ?x d.t.num ?n . FILTER ( ?n < "5"^^integer ) }'
        )
        with pytest.raises(EvaluationError):
            sparql.evaluate(q, kg)

    def test_superlative(self):
        triples = [
            ("m.a", "d.t.num", '"3"^^integer'),
            ("m.b", "d.t.num", '"7"^^integer'),
            ("m.c", "d.t.num", '"5"^^integer'),
        ]
        kg = build_kg(triples, [], {})
        q = sparql.parse(
            "SELECT ?x WHERE { ?x d.t.num ?n . } ORDER BY DESC(?n) LIMIT 1"
        )
        assert sparql.evaluate(q, kg) == [("m.b",)]

    def test_count_matches_cardinality(self):
        triples = [("m.a", "d.t.p", "m.b"), ("m.a", "d.t.p", "m.c")]
        kg = build_kg(triples, [], {})
        q = sparql.parse("SELECT ?y WHERE { m.a d.t.p ?y . }")
        qc = sparql.parse("SELECT COUNT(?y) WHERE { m.a d.t.p ?y . }")
        assert sparql.evaluate(qc, kg) == [(len(sparql.evaluate(q, kg)),)]


def random_query(rng, predicates, with_filter=True):
    n = rng.randint(1, 3)
    vars_pool = ["?a", "?b", "?c", "?d"]
    patterns = []
    for i in range(n):
        s = rng.choice(vars_pool[: i + 2])
        o = rng.choice(vars_pool[: i + 2])
        patterns.append(sparql.TriplePattern(s, rng.choice(predicates), o))
    used = []
    for p in patterns:
        for t in p.terms():
            if t.startswith("?") and t not in used:
                used.append(t)
    projection = tuple(rng.sample(used, rng.randint(1, len(used))))
    filters = ()
    order_by = None
    limit = None
    if with_filter and rng.random() < 0.3:
        filters = (sparql.Comparison(rng.choice(used), rng.choice(["=", "!="]),
                                     f"m.e{rng.randint(0, 9)}"),)
    if rng.random() < 0.3:
        limit = rng.randint(1, 5)
    return sparql.SparqlQuery(
        projection=projection,
        patterns=tuple(patterns),
        distinct=rng.random() < 0.5,
        filters=filters,
        order_by=order_by,
        limit=limit,
    )


class TestEvaluateProperty:
    def test_matches_oracle_on_random_cases(self):
        rng = random.Random(1234)
        predicates = [f"d.t.p{i}" for i in range(3)]
        for _ in range(120):
            triples = list(
                {
                    (f"m.e{rng.randint(0, 9)}", rng.choice(predicates),
                     f"m.e{rng.randint(0, 9)}")
                    for _ in range(rng.randint(0, 25))
                }
            )
            kg = build_kg(triples, [], {})
            q = random_query(rng, predicates)
            assert sparql.evaluate(q, kg) == oracle_evaluate(q, triples)

    def test_distinct_and_limit_invariants(self):
        rng = random.Random(99)
        predicates = [f"d.t.p{i}" for i in range(3)]
        for _ in range(50):
            triples = list(
                {
                    (f"m.e{rng.randint(0, 5)}", rng.choice(predicates),
                     f"m.e{rng.randint(0, 5)}")
                    for _ in range(15)
                }
            )
            kg = build_kg(triples, [], {})
            q = random_query(rng, predicates, with_filter=False)
            rows = sparql.evaluate(q, kg)
            if q.distinct:
                assert len(rows) == len(set(rows))
            if q.limit is not None:
                assert len(rows) <= q.limit


# -- rewriters ----------------------------------------------------------------


class TestSubstituteNames:
    def test_replaces_id_with_quoted_name(self, film_kg):
        q = sparql.parse(TWO_HOP_QUERY)
        named = sparql.substitute_names(q, film_kg)
        assert named.patterns[0].subject == '"Nick Cannon"'

    def test_no_ids_unchanged(self, film_kg):
        q = sparql.parse("SELECT ?x WHERE { ?x a.b.c ?y . }")
        assert sparql.substitute_names(q, film_kg) == q

    def test_two_ids_replaced(self, film_kg):
        q = sparql.parse(
            "SELECT ?x WHERE { m.0chile location.country.form_of_government ?x . "
            "?x government.form_of_government.countries m.0brazil . }"
        )
        named = sparql.substitute_names(q, film_kg)
        assert named.patterns[0].subject == '"Chile"'
        assert named.patterns[1].object == '"Brazil"'
        assert named.projection == q.projection

    def test_unknown_id_raises(self, film_kg):
        q = sparql.parse("SELECT ?x WHERE { m.nosuch a.b.c ?x . }")
        with pytest.raises(UnknownEntity):
            sparql.substitute_names(q, film_kg)


class TestExpandProjection:
    def test_two_hop_expansion(self):
        q = sparql.parse(TWO_HOP_QUERY)
        expanded = sparql.expand_projection(q)
        assert expanded.projection == ("?y", "?x")
        assert expanded.distinct

    def test_already_full_projection(self):
        q = sparql.parse("SELECT ?x ?y WHERE { ?x a.b.c ?y . }")
        assert set(sparql.expand_projection(q).projection) == {"?x", "?y"}

    def test_superlative_modifiers_dropped(self, film_kg):
        triples = [("m.a", "d.t.num", '"3"^^integer')]
        kg = build_kg(triples, [], {})
        q = sparql.parse(
            "SELECT ?x WHERE { ?x d.t.num ?num . } ORDER BY ?num LIMIT 1"
        )
        expanded = sparql.expand_projection(q)
        assert expanded.order_by is None and expanded.limit is None
        assert "?num" in expanded.projection
        assert sparql.evaluate(expanded, kg) == [("m.a", '"3"^^integer')]


class TestAbstractTopicEntities:
    def test_single_entity(self):
        q = sparql.parse("SELECT ?x WHERE { m.a d.t.p ?x . }")
        q2, mapping = sparql.abstract_topic_entities(q)
        assert mapping == {"m.a": "?te0"}
        assert q2.patterns[0].subject == "?te0"
        assert "?te0" in q2.projection

    def test_two_entities_distinct_vars(self):
        q = sparql.parse("SELECT ?x WHERE { m.a d.t.p ?x . ?x d.t.q m.b . }")
        _, mapping = sparql.abstract_topic_entities(q)
        assert len(set(mapping.values())) == 2

    def test_round_trip_identity(self):
        for text in (
            TWO_HOP_QUERY,
            "SELECT ?x WHERE { m.a d.t.p ?x . ?x d.t.q m.b . }",
            'SELECT ?x WHERE { m.a d.t.p ?x . FILTER ( ?x != "z" ) }',
        ):
            q = sparql.parse(text)
            q2, mapping = sparql.abstract_topic_entities(q)
            restored = sparql.restore_topic_entities(q2, mapping)
            assert sparql.print_query(restored) == sparql.print_query(q)

    def test_nothing_to_abstract(self):
        q = sparql.parse("SELECT ?x WHERE { ?x a.b.c ?y . }")
        with pytest.raises(NothingToAbstract):
            sparql.abstract_topic_entities(q)
