"""Wire-protocol HTTP service.

POST /generate takes {"inputs": [str], "beam_size": int,
"length_penalty": float, "max_length": int} and returns
{"outputs": [str]}, order-preserving, one output per input.
GET /health reports the active mode and version.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import verbalize

_MARKERS = ("<H>", "<P>", "<T>", "<D>")


@dataclass
class ServiceConfig:
    mode: str = "template"  # echo | template | model
    checkpoint: str | None = None
    port: int = 8300
    max_batch: int = 64
    # per-input whitespace-token cap; longer inputs are rejected
    max_input_tokens: int = 512
    beam_size: int = 10
    length_penalty: float = 1.0
    max_length: int = 128

    def __post_init__(self):
        if self.mode not in ("echo", "template", "model"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "model":
            if not self.checkpoint or not os.path.exists(self.checkpoint):
                raise ValueError("model mode requires an existing checkpoint")


def _truncate(text: str, max_tokens: int) -> str:
    tokens = text.split()
    if len(tokens) <= max_tokens:
        return text
    return " ".join(tokens[:max_tokens])


def _template(text: str) -> str:
    # serialized atoms carry marker tokens; everything else is treated
    # as a question-generation input
    if any(m in text for m in _MARKERS):
        return verbalize.describe_atom(text)
    return verbalize.ask_question(text)


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="genservice")
    backend = None
    if config.mode == "model":
        from .model import ModelBackend

        backend = ModelBackend(config.checkpoint)

    from . import __version__

    @app.get("/health")
    def health():
        return {"status": "ok", "mode": config.mode, "version": __version__}

    @app.post("/generate")
    async def generate(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body is not valid JSON"},
                                status_code=400)
        if not isinstance(body, dict) or not isinstance(body.get("inputs"), list):
            return JSONResponse(
                {"error": "body must be an object with an 'inputs' list"},
                status_code=400,
            )
        inputs = body["inputs"]
        if not all(isinstance(t, str) for t in inputs):
            return JSONResponse({"error": "inputs must be strings"},
                                status_code=400)
        beam_size = body.get("beam_size", config.beam_size)
        length_penalty = body.get("length_penalty", config.length_penalty)
        max_length = body.get("max_length", config.max_length)
        if (not isinstance(beam_size, int) or beam_size < 1
                or not isinstance(max_length, int) or max_length < 1
                or not isinstance(length_penalty, (int, float))):
            return JSONResponse({"error": "invalid decoding parameters"},
                                status_code=400)
        if len(inputs) > config.max_batch:
            return JSONResponse(
                {"error": f"batch exceeds max of {config.max_batch}"},
                status_code=413,
            )
        for text in inputs:
            if len(text.split()) > config.max_input_tokens:
                return JSONResponse(
                    {"error": f"input exceeds {config.max_input_tokens} tokens"},
                    status_code=413,
                )

        if config.mode == "echo":
            outputs = [_truncate(t, max_length) for t in inputs]
        elif config.mode == "template":
            outputs = [_template(t) for t in inputs]
        else:
            outputs = backend.generate(
                inputs, beam_size=beam_size, length_penalty=length_penalty,
                max_length=max_length,
            )
        return {"outputs": outputs}

    return app


def serve(config: ServiceConfig):
    """Blocking server loop."""
    import uvicorn

    uvicorn.run(create_app(config), host="0.0.0.0", port=config.port)
