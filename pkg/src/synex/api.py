"""HTTP API: confusion sets, suggestions, readmore pagination, event logging.

Suggestion responses are pure functions of the trained artifacts, the
config digest, and the request, so they are cached per request shape.
Readmore pagination is capped at five sentences per word.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .config import EngineConfig, MODEL_CHOICES, READMORE_CAP
from .engine import Engine, ModelMissing, UnknownSet
from .events import EventLog, ReadmoreEvent, now_ms


class SuggestRequest(BaseModel):
    set: str
    model: str = "gmm"
    k: Optional[int] = None
    l1_grouped: Optional[bool] = None


class ReadmoreRequest(BaseModel):
    session: str
    set: str
    word: str
    revealed_count: int


class AnswerRequest(BaseModel):
    session: str
    set: str
    text: str


def create_app(cfg: EngineConfig) -> FastAPI:
    app = FastAPI(title="synex", version="0.1.0")
    engine = Engine(cfg)
    events = EventLog(cfg.event_log)
    answers = EventLog(cfg.event_log.parent / "answers.jsonl")
    suggestion_cache: dict = {}

    app.state.engine = engine
    app.state.events = events
    app.state.answers = answers

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def _suggest(set_id: str, model: str, k: Optional[int], l1: Optional[bool]):
        key = (set_id, model, k, l1)
        if key not in suggestion_cache:
            suggestion_cache[key] = engine.suggest(
                set_id, model_kind=model, k=k, l1_grouped=l1
            )
        return suggestion_cache[key]

    @app.get("/sets")
    def list_sets():
        return {
            "sets": [
                {
                    "id": cs.id,
                    "words": [
                        {"lemma": w.lemma, "forms": list(w.forms)} for w in cs.words
                    ],
                }
                for cs in engine.sets.values()
            ]
        }

    @app.post("/suggest")
    def suggest(req: SuggestRequest):
        if req.model not in MODEL_CHOICES:
            return JSONResponse(
                status_code=400,
                content={"detail": f"model must be one of {list(MODEL_CHOICES)}"},
            )
        if req.k is not None and req.k < 1:
            return JSONResponse(status_code=400, content={"detail": "k must be >= 1"})
        try:
            result = _suggest(req.set, req.model, req.k, req.l1_grouped)
        except UnknownSet as exc:
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        except ModelMissing as exc:
            return JSONResponse(status_code=503, content={"detail": str(exc)})
        return result.to_json()

    @app.get("/examples/{set_id}/{word}")
    def examples(
        set_id: str,
        word: str,
        offset: int = 0,
        limit: int = 1,
        model: str = "gmm",
        l1_grouped: Optional[bool] = None,
    ):
        if offset < 0 or offset >= READMORE_CAP:
            return JSONResponse(
                status_code=400,
                content={"detail": f"offset must be in 0..{READMORE_CAP - 1}"},
            )
        if limit < 1:
            return JSONResponse(status_code=400, content={"detail": "limit must be >= 1"})
        if model not in MODEL_CHOICES:
            return JSONResponse(
                status_code=400,
                content={"detail": f"model must be one of {list(MODEL_CHOICES)}"},
            )
        try:
            result = _suggest(set_id, model, None, l1_grouped)
        except UnknownSet as exc:
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        except ModelMissing as exc:
            return JSONResponse(status_code=503, content={"detail": str(exc)})
        if word not in result.per_word:
            return JSONResponse(
                status_code=404, content={"detail": f"unknown word {word!r} in set {set_id!r}"}
            )
        examples = result.per_word[word][:READMORE_CAP]
        stop = min(offset + limit, READMORE_CAP)
        items = [
            {
                "id": ex.sentence.id,
                "text": ex.sentence.text,
                "score": ex.clarification_score,
                "fitness": ex.fitness,
                "closeness": ex.relative_closeness,
            }
            for ex in examples[offset:stop]
        ]
        return {
            "set": set_id,
            "word": word,
            "offset": offset,
            "items": items,
            "total": min(len(examples), READMORE_CAP),
        }

    @app.post("/events/readmore", status_code=204)
    def readmore_event(req: ReadmoreRequest):
        try:
            event = ReadmoreEvent(
                session=req.session,
                set_id=req.set,
                word=req.word,
                revealed_count=req.revealed_count,
                timestamp_ms=now_ms(),
            )
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        try:
            events.append_readmore(event)
        except OSError as exc:
            return JSONResponse(status_code=500, content={"detail": f"event log: {exc}"})
        return Response(status_code=204)

    @app.post("/answers", status_code=204)
    def submit_answer(req: AnswerRequest):
        if not req.text.strip():
            return JSONResponse(status_code=400, content={"detail": "text must be non-empty"})
        try:
            answers.append(
                {
                    "type": "answer",
                    "session": req.session,
                    "set": req.set,
                    "text": req.text,
                    "timestamp_ms": now_ms(),
                }
            )
        except OSError as exc:
            return JSONResponse(status_code=500, content={"detail": f"answer log: {exc}"})
        return Response(status_code=204)

    return app
