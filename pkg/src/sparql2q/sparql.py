"""Parser, printer, evaluator and rewriters for the dataset SPARQL subset.

Supported grammar: PREFIX declarations (stripped on print), SELECT
[DISTINCT] with a variable list or COUNT(?v), a WHERE block of triple
patterns and FILTER comparisons, and an optional ORDER BY ?v [DESC]
LIMIT n tail. Anything else raises UnsupportedFeature instead of
misparsing silently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from . import kg as kgmod
from .errors import (
    EvaluationError,
    NothingToAbstract,
    SparqlSyntaxError,
    UnknownEntity,
    UnsupportedFeature,
)

_UNSUPPORTED = {
    "OPTIONAL", "UNION", "ASK", "CONSTRUCT", "DESCRIBE", "INSERT", "DELETE",
    "GROUP", "HAVING", "MINUS", "EXISTS", "SERVICE", "VALUES", "BIND", "SUM",
    "AVG", "MIN", "MAX", "OFFSET",
}

_COMPARISON_OPS = ("<=", ">=", "!=", "<", ">", "=")


@dataclass(frozen=True)
class TriplePattern:
    subject: str
    predicate: str
    object: str

    def terms(self):
        return (self.subject, self.predicate, self.object)


@dataclass(frozen=True)
class Comparison:
    var: str
    op: str
    literal: str


@dataclass(frozen=True)
class LangFilter:
    var: str
    code: str


@dataclass(frozen=True)
class OrderBy:
    var: str
    descending: bool = False


@dataclass(frozen=True)
class SparqlQuery:
    projection: tuple
    patterns: tuple
    distinct: bool = False
    count_var: str | None = None
    filters: tuple = ()
    order_by: OrderBy | None = None
    limit: int | None = None

    def variables(self):
        """Pattern variables in first-occurrence order."""
        seen = []
        for p in self.patterns:
            for term in p.terms():
                if term.startswith("?") and term not in seen:
                    seen.append(term)
        return tuple(seen)

    def ground_entity_terms(self):
        """Ground subject/object terms that name entities (not literals)."""
        seen = []
        for p in self.patterns:
            for term in (p.subject, p.object):
                if (
                    not term.startswith("?")
                    and not kgmod.is_literal(term)
                    and not _is_number(term)
                    and term not in seen
                ):
                    seen.append(term)
        return tuple(seen)


def _is_number(term: str) -> bool:
    return bool(re.fullmatch(r"[+-]?\d+(\.\d+)?", term))


def _validate(q: SparqlQuery) -> SparqlQuery:
    if not q.patterns:
        raise SparqlSyntaxError("empty WHERE pattern")
    pattern_vars = set(q.variables())
    for p in q.patterns:
        if p.predicate.startswith("?"):
            raise UnsupportedFeature("variable predicate in parsed query")
    for v in q.projection:
        if v not in pattern_vars:
            raise SparqlSyntaxError(f"projected variable {v} not bound in pattern")
    if q.count_var is not None and q.count_var not in pattern_vars:
        raise SparqlSyntaxError(f"COUNT variable {q.count_var} not bound in pattern")
    for f in q.filters:
        if f.var not in pattern_vars:
            raise SparqlSyntaxError(f"filtered variable {f.var} not bound in pattern")
    if q.order_by is not None and q.order_by.var not in pattern_vars:
        raise SparqlSyntaxError(f"ORDER BY variable {q.order_by.var} not bound in pattern")
    if q.limit is not None and q.limit < 1:
        raise SparqlSyntaxError("LIMIT must be >= 1")
    return q


# -- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"[^"\n]*"(?:\^\^[\w:.\-]+)?)
  | (?P<iri><[^>\s]*>)
  | (?P<var>\?[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|!=|<|>|=)
  | (?P<punct>[{}().,;])
  | (?P<word>[A-Za-z_][\w.\-:]*|[+-]?\d+(?:\.\d+)?)
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SparqlSyntaxError(f"unexpected character {text[pos]!r}", position=pos)
        if m.lastgroup != "ws":
            tokens.append((m.group(), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.prefixes = set()

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def next(self, expected=None):
        if self.i >= len(self.tokens):
            raise SparqlSyntaxError(
                f"unexpected end of input, expected {expected or 'more tokens'}",
                position=None,
            )
        tok, pos = self.tokens[self.i]
        self.i += 1
        if expected is not None and tok.upper() != expected.upper():
            raise SparqlSyntaxError(f"expected {expected!r}, got {tok!r}", position=pos)
        return tok

    def keyword_is(self, word):
        tok = self.peek()
        return tok is not None and tok.upper() == word

    def check_unsupported(self, tok, pos):
        if tok.upper() in _UNSUPPORTED:
            raise UnsupportedFeature(tok.upper())

    def strip_prefix(self, term: str) -> str:
        for pre in self.prefixes:
            if term.startswith(pre):
                return term[len(pre):]
        return term

    def parse(self) -> SparqlQuery:
        while self.keyword_is("PREFIX"):
            self.next()
            name = self.next()
            if not name.endswith(":"):
                name = name + self.next(":")
            self.next()  # the IRI
            self.prefixes.add(name)

        tok = self.peek()
        if tok is not None:
            self.check_unsupported(tok, self.tokens[self.i][1])
        self.next("SELECT")

        distinct = False
        if self.keyword_is("DISTINCT"):
            self.next()
            distinct = True

        projection = []
        count_var = None
        if self.keyword_is("COUNT"):
            self.next()
            self.next("(")
            count_var = self.next()
            if not count_var.startswith("?"):
                raise SparqlSyntaxError(f"expected variable in COUNT, got {count_var!r}")
            self.next(")")
        else:
            while self.peek() is not None and self.peek().startswith("?"):
                projection.append(self.next())
            if not projection:
                tok, pos = self.tokens[self.i] if self.i < len(self.tokens) else (None, None)
                if tok:
                    self.check_unsupported(tok, pos)
                raise SparqlSyntaxError("expected projection variables after SELECT")

        self.next("WHERE")
        self.next("{")
        patterns = []
        filters = []
        while not self.keyword_is("}"):
            if self.peek() is None:
                raise SparqlSyntaxError("unterminated WHERE block, expected '}'")
            if self.keyword_is("FILTER"):
                self.next()
                filters.append(self.parse_filter())
                continue
            tok, pos = self.tokens[self.i]
            self.check_unsupported(tok, pos)
            s = self.strip_prefix(self.next())
            p = self.strip_prefix(self.next())
            o = self.strip_prefix(self.next())
            patterns.append(TriplePattern(s, p, o))
            if self.keyword_is("."):
                self.next()
        self.next("}")

        order_by = None
        limit = None
        if self.keyword_is("ORDER"):
            self.next()
            self.next("BY")
            if self.keyword_is("DESC") or self.keyword_is("ASC"):
                direction = self.next().upper()
                self.next("(")
                var = self.next()
                self.next(")")
                order_by = OrderBy(var, descending=direction == "DESC")
            else:
                order_by = OrderBy(self.next(), descending=False)
            if not order_by.var.startswith("?"):
                raise SparqlSyntaxError(f"expected variable in ORDER BY, got {order_by.var!r}")
        if self.keyword_is("LIMIT"):
            self.next()
            tok = self.next()
            if not tok.isdigit():
                raise SparqlSyntaxError(f"expected integer after LIMIT, got {tok!r}")
            limit = int(tok)
        if self.peek() is not None:
            tok, pos = self.tokens[self.i]
            self.check_unsupported(tok, pos)
            raise SparqlSyntaxError(f"unexpected trailing token {tok!r}", position=pos)

        return _validate(
            SparqlQuery(
                projection=tuple(projection),
                patterns=tuple(patterns),
                distinct=distinct,
                count_var=count_var,
                filters=tuple(filters),
                order_by=order_by,
                limit=limit,
            )
        )

    def parse_filter(self):
        self.next("(")
        if self.keyword_is("LANG"):
            self.next()
            self.next("(")
            var = self.next()
            self.next(")")
            self.next("=")
            code = self.next()
            self.next(")")
            return LangFilter(var, code.strip('"'))
        var = self.next()
        if not var.startswith("?"):
            raise SparqlSyntaxError(f"expected variable in FILTER, got {var!r}")
        op = self.next()
        if op not in _COMPARISON_OPS:
            raise SparqlSyntaxError(f"unsupported FILTER operator {op!r}")
        literal = self.next()
        self.next(")")
        return Comparison(var, op, literal)


def parse(text: str) -> SparqlQuery:
    """Parse query text into a SparqlQuery tree."""
    return _Parser(text).parse()


# -- printing --------------------------------------------------------------


def print_query(q: SparqlQuery) -> str:
    """Canonical single-spaced text; parse(print_query(q)) equals q."""
    parts = ["SELECT"]
    if q.distinct:
        parts.append("DISTINCT")
    if q.count_var is not None:
        parts.append(f"COUNT({q.count_var})")
    else:
        parts.extend(q.projection)
    parts.append("WHERE {")
    for p in q.patterns:
        parts.append(f"{p.subject} {p.predicate} {p.object} .")
    for f in q.filters:
        if isinstance(f, LangFilter):
            parts.append(f'FILTER ( LANG({f.var}) = "{f.code}" )')
        else:
            parts.append(f"FILTER ( {f.var} {f.op} {f.literal} )")
    parts.append("}")
    if q.order_by is not None:
        if q.order_by.descending:
            parts.append(f"ORDER BY DESC({q.order_by.var})")
        else:
            parts.append(f"ORDER BY {q.order_by.var}")
    if q.limit is not None:
        parts.append(f"LIMIT {q.limit}")
    return " ".join(parts)


# -- literal semantics -------------------------------------------------------

_NUMERIC_TYPES = {"integer", "int", "long", "float", "double", "decimal"}
_DATE_TYPES = {"date", "datetime", "gYear", "gyear", "gYearMonth"}


def literal_value(term: str):
    """(kind, comparable value) for a query/kg term used in comparisons."""
    if kgmod.is_literal(term):
        lexical, type_ = kgmod.split_literal(term)
        base = type_.split(":")[-1] if type_ else ""
        if base in _NUMERIC_TYPES:
            try:
                return ("number", float(lexical))
            except ValueError as exc:
                raise EvaluationError(f"bad numeric literal {term!r}") from exc
        if base in _DATE_TYPES:
            return ("date", lexical)
        return ("string", lexical)
    if _is_number(term):
        return ("number", float(term))
    return ("id", term)


def _compare(left: str, op: str, right: str) -> bool:
    lk, lv = literal_value(left)
    rk, rv = literal_value(right)
    if "id" in (lk, rk):
        if op in ("=", "!="):
            return (left == right) if op == "=" else (left != right)
        raise EvaluationError(f"ordered comparison on non-literal term {left!r}")
    if lk != rk:
        raise EvaluationError(f"incompatible literal comparison: {left!r} {op} {right!r}")
    if op == "=":
        return lv == rv
    if op == "!=":
        return lv != rv
    if op == "<":
        return lv < rv
    if op == ">":
        return lv > rv
    if op == "<=":
        return lv <= rv
    if op == ">=":
        return lv >= rv
    raise EvaluationError(f"unknown operator {op!r}")


def _sort_key(value: str):
    kind, v = literal_value(value)
    if kind == "number":
        return (0, v, value)
    return (1, str(v), value)


# -- evaluation --------------------------------------------------------------


def evaluate(q: SparqlQuery, kg: kgmod.KnowledgeGraph):
    """Evaluate over a graph; rows are tuples of projected-variable values.

    COUNT queries yield a single one-element row with the count as int.
    Row order is deterministic: lexicographic on the bound tuple, then
    ORDER BY / LIMIT applied on top.
    """
    bindings = [{}]
    for p in q.patterns:
        new = []
        for b in bindings:
            pat = tuple(b.get(t, t) for t in p.terms())
            for m in kg.match_pattern(pat):
                merged = dict(b)
                merged.update(m)
                new.append(merged)
        bindings = new
        if not bindings:
            break

    kept = []
    for b in bindings:
        ok = True
        for f in q.filters:
            value = b[f.var]
            if isinstance(f, LangFilter):
                if not kgmod.is_literal(value) or kgmod.split_literal(value)[1] != f.code:
                    ok = False
                    break
            elif not _compare(value, f.op, f.literal):
                ok = False
                break
        if ok:
            kept.append(b)

    proj = q.projection if q.count_var is None else (q.count_var,)
    rows = [tuple(b[v] for v in proj) for b in kept]
    order_keys = [b.get(q.order_by.var) if q.order_by else None for b in kept]
    paired = sorted(zip(rows, order_keys), key=lambda rk: rk[0])

    if q.distinct:
        seen = set()
        deduped = []
        for row, okey in paired:
            if row not in seen:
                seen.add(row)
                deduped.append((row, okey))
        paired = deduped

    if q.order_by is not None:
        paired.sort(key=lambda rk: _sort_key(rk[1]), reverse=q.order_by.descending)
    rows = [row for row, _ in paired]
    if q.limit is not None:
        rows = rows[: q.limit]
    if q.count_var is not None:
        return [(len(rows),)]
    return rows


# -- rewriters ----------------------------------------------------------------


def substitute_names(q: SparqlQuery, kg: kgmod.KnowledgeGraph) -> SparqlQuery:
    """Replace ground entity ids with their quoted surface names."""
    mapping = {}
    for term in q.ground_entity_terms():
        if term not in kg.entities:
            raise UnknownEntity(term)
        mapping[term] = f'"{kg.entities[term].name}"'
    return replace_terms(q, mapping)


def replace_terms(q: SparqlQuery, mapping: dict) -> SparqlQuery:
    """Copy of q with subject/object terms substituted per mapping."""
    patterns = tuple(
        TriplePattern(
            mapping.get(p.subject, p.subject),
            p.predicate,
            mapping.get(p.object, p.object),
        )
        for p in q.patterns
    )
    return replace(q, patterns=patterns)


def expand_projection(q: SparqlQuery) -> SparqlQuery:
    """Project every pattern variable; drop aggregate and order/limit."""
    return replace(
        q,
        projection=q.variables(),
        count_var=None,
        order_by=None,
        limit=None,
    )


def abstract_topic_entities(q: SparqlQuery):
    """Replace each ground entity term with a fresh ?teN variable.

    Returns (rewritten query, mapping original entity id -> variable).
    The fresh variables are appended to the projection.
    """
    entities = q.ground_entity_terms()
    if not entities:
        raise NothingToAbstract(print_query(q))
    mapping = {e: f"?te{i}" for i, e in enumerate(entities)}
    q2 = replace_terms(q, mapping)
    q2 = replace(q2, projection=tuple(q.projection) + tuple(mapping.values()))
    return q2, mapping


def restore_topic_entities(q: SparqlQuery, mapping: dict) -> SparqlQuery:
    """Inverse of abstract_topic_entities given its mapping."""
    inverse = {var: ent for ent, var in mapping.items()}
    q2 = replace_terms(q, inverse)
    projection = tuple(v for v in q2.projection if v not in inverse)
    return replace(q2, projection=projection)
