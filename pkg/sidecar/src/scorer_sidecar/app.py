"""FastAPI app exposing the scorer wire protocol.

    POST /v1/coherence  {"pairs":[{"first","second"},...]} -> {"probabilities":[...]}
    POST /v1/perplexity {"texts":[...]}                    -> {"perplexities":[...]}
    POST /v1/nli        {"items":[{"premise","hypothesis"},...]} -> {"labels":[...]}
    GET  /healthz

Schema violations and oversized batches return 400; inference failures 500.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .models import ScorerModels

MAX_BATCH = 128


class SentencePairIn(BaseModel):
    first: str
    second: str


class CoherenceRequest(BaseModel):
    pairs: list[SentencePairIn] = Field(max_length=MAX_BATCH)


class PerplexityRequest(BaseModel):
    texts: list[str] = Field(max_length=MAX_BATCH)


class NliItemIn(BaseModel):
    premise: str
    hypothesis: str


class NliRequest(BaseModel):
    items: list[NliItemIn] = Field(max_length=MAX_BATCH)


def create_app(models: ScorerModels) -> FastAPI:
    app = FastAPI(title="ehr-scorer-sidecar")
    app.state.models = models

    @app.exception_handler(RequestValidationError)
    async def validation_error(_: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    @app.exception_handler(Exception)
    async def inference_error(_: Request, exc: Exception):
        return JSONResponse(status_code=500,
                            content={"error": f"inference failure: {exc}"})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "models": models.mode}

    @app.post("/v1/coherence")
    def coherence(request: CoherenceRequest):
        pairs = [(p.first, p.second) for p in request.pairs]
        return {"probabilities": models.nsp.score_pairs(pairs)}

    @app.post("/v1/perplexity")
    def perplexity(request: PerplexityRequest):
        return {"perplexities": models.lm.score_texts(request.texts)}

    @app.post("/v1/nli")
    def nli(request: NliRequest):
        items = [(i.premise, i.hypothesis) for i in request.items]
        return {"labels": models.nli.classify(items)}

    return app
