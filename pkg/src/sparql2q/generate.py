"""Generation contract shared by the auto-prompter and question generator.

A backend is any object with ``run(inputs, config) -> list[str]``. The
template backend is a deterministic CI substitute for the trained models;
the remote backend speaks the HTTP wire protocol (POST /generate) of the
sidecar generation service.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

import requests

from .errors import ProtocolError, TransportError

log = logging.getLogger(__name__)

PROMPTER_ROLE = "prompter"
QG_ROLE = "qg"

_MARKER_SPLIT_RE = re.compile(r"<([HDPT])>")


@dataclass(frozen=True)
class GenerationConfig:
    beam_size: int = 10
    length_penalty: float = 1.0
    max_input_length: int = 512
    max_output_length: int = 128
    lowercase_inputs: bool = False

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.max_input_length < 1 or self.max_output_length < 1:
            raise ValueError("length budgets must be >= 1")


# decoding defaults for the two roles
PROMPTER_CONFIG = GenerationConfig(beam_size=10, max_input_length=512,
                                   max_output_length=512)
QG_CONFIG = GenerationConfig(beam_size=10, max_input_length=512,
                             max_output_length=128, lowercase_inputs=True)


@dataclass(frozen=True)
class GenerationRequest:
    inputs: tuple
    config: GenerationConfig = field(default_factory=GenerationConfig)


@dataclass(frozen=True)
class GenerationResult:
    outputs: tuple
    scores: tuple | None = None


def truncate_tokens(text: str, max_tokens: int) -> str:
    """Cut to a whitespace-token budget; marker tokens are whole tokens,
    so they are never split."""
    tokens = text.split()
    if len(tokens) <= max_tokens:
        return text
    return " ".join(tokens[:max_tokens])


def generate(backend, req: GenerationRequest) -> GenerationResult:
    """Run the backend over the request inputs, order-preserving."""
    cfg = req.config
    inputs = []
    for text in req.inputs:
        if len(text.split()) > cfg.max_input_length:
            log.warning("input truncated to %d tokens", cfg.max_input_length)
            text = truncate_tokens(text, cfg.max_input_length)
        if cfg.lowercase_inputs:
            text = text.lower()
        inputs.append(text)
    if not inputs:
        return GenerationResult(outputs=())
    outputs = backend.run(inputs, cfg)
    if len(outputs) != len(inputs):
        raise ProtocolError(
            f"backend returned {len(outputs)} outputs for {len(inputs)} inputs"
        )
    return GenerationResult(outputs=tuple(outputs))


def _predicate_words(predicate: str) -> str:
    return predicate.split(".")[-1].replace("_", " ")


def verbalize_serialized(text: str) -> str:
    """Deterministic sentence for a serialized atom, mirroring the
    fallback verbalizer's templates."""
    fields = _MARKER_SPLIT_RE.split(text)
    # fields = [prefix, marker, content, marker, content, ...]
    items = []
    for marker, content in zip(fields[1::2], fields[2::2]):
        items.append((marker, content.strip()))
    if items and items[0][0] == "H":
        # single atom: <H> name <D> desc <P> pred <T> name <D> desc
        values = dict()
        order = []
        for marker, content in items:
            if marker not in values:
                values[marker] = content
                order.append(marker)
            elif marker == "D":
                values["D2"] = content
        head = values.get("H", "")
        pred = values.get("P", "")
        tail = values.get("T", "")
        return f"{head} {_predicate_words(pred)} {tail} ."
    # CVT atom: repeated <P> pred <T> name <D> desc segments
    parts = []
    pred = None
    for marker, content in items:
        if marker == "P":
            pred = content
        elif marker == "T" and pred is not None:
            clean = pred[2:] if pred.startswith("R@") else pred
            parts.append(f"{_predicate_words(clean)} {content}")
            pred = None
    return "; ".join(parts) + " ."


class TemplateBackend:
    """Deterministic local stand-in for the trained generators."""

    def __init__(self, role: str):
        if role not in (PROMPTER_ROLE, QG_ROLE):
            raise ValueError(f"unknown role {role!r}")
        self.role = role

    def run(self, inputs, config):
        if self.role == PROMPTER_ROLE:
            return [verbalize_serialized(text) for text in inputs]
        return [f"what is ?x such that: {text}".lower() for text in inputs]


def template_backend(role: str = PROMPTER_ROLE) -> TemplateBackend:
    return TemplateBackend(role)


class RemoteBackend:
    """HTTP client for the generation service wire protocol."""

    def __init__(self, endpoint: str, timeout: float = 30.0, retries: int = 3,
                 batch_size: int = 32, session=None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.batch_size = batch_size
        self.session = session or requests.Session()

    def _post(self, payload):
        last = None
        for attempt in range(1, self.retries + 1):
            try:
                resp = self.session.post(
                    f"{self.endpoint}/generate", json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last = exc
                continue
            if resp.status_code != 200:
                raise ProtocolError(
                    f"status {resp.status_code}: {resp.text[:500]}"
                )
            return resp.json()
        raise TransportError(f"backend unreachable: {last}", attempts=self.retries)

    def run(self, inputs, config):
        outputs = []
        for start in range(0, len(inputs), self.batch_size):
            batch = inputs[start : start + self.batch_size]
            payload = {
                "inputs": list(batch),
                "beam_size": config.beam_size,
                "length_penalty": config.length_penalty,
                "max_length": config.max_output_length,
            }
            body = self._post(payload)
            if "outputs" not in body or len(body["outputs"]) != len(batch):
                raise ProtocolError(f"malformed response body: {str(body)[:200]}")
            outputs.extend(body["outputs"])
        return outputs


def remote_backend(endpoint: str, timeout: float = 30.0, retries: int = 3,
                   batch_size: int = 32) -> RemoteBackend:
    return RemoteBackend(endpoint, timeout=timeout, retries=retries,
                         batch_size=batch_size)
