"""Exception classes shared across the toolkit."""


class Sparql2qError(Exception):
    """Base class for all toolkit errors."""


class LoadError(Sparql2qError):
    """Malformed or inconsistent input file."""


class UnknownEntity(Sparql2qError):
    """An entity id could not be resolved in the knowledge graph."""


class SparqlSyntaxError(Sparql2qError):
    """Query text does not conform to the supported grammar."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class UnsupportedFeature(Sparql2qError):
    """Query uses a SPARQL construct outside the supported subset."""


class EvaluationError(Sparql2qError):
    """Query evaluation failed, e.g. comparing incompatible literals."""


class NotInstantiable(Sparql2qError):
    """Query has no solution over the graph, so no subgraph can be built."""


class NothingToAbstract(Sparql2qError):
    """Query contains no ground entity term to replace with a variable."""


class MissingDescription(Sparql2qError):
    """An atom reached prompt assembly without a description."""


class UnmappedPlaceholder(Sparql2qError):
    """A bracketed type placeholder has no entry in the placeholder map."""


class TransportError(Sparql2qError):
    """Remote generation backend unreachable after retries."""

    def __init__(self, message, attempts=0):
        super().__init__(message)
        self.attempts = attempts


class ProtocolError(Sparql2qError):
    """Remote generation backend violated the wire protocol."""
