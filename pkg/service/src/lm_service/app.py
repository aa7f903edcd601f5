"""HTTP sidecar exposing parsing, scoring, translation, and fine-tuning.

All endpoints live under /v1 and speak UTF-8 JSON.  /parse, /score, and
/translate are stateless; /train mutates model weights and therefore runs
behind a single writer lock, with idempotence per batch id so a retried
batch never trains twice.
"""

from __future__ import annotations

import threading
from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, model_validator

from .model import MASK_TOKEN, EngineError, ScoringEngine, TrainingExample, default_engine
from .parsing import UnparseableError, parse_question
from .translate import METHODS, TranslationError, translate

PARSER_MODEL_ID = "question-pattern-parser"
TRANSLATOR_MODEL_ID = "rule-seq2seq"


class ParseRequest(BaseModel):
    text: str = Field(min_length=1)


class ParseResponse(BaseModel):
    ptb: str


class ScoreRequest(BaseModel):
    tokens: list[str] = Field(min_length=1)
    mode: Literal["logprob", "logit"] = "logprob"
    direction_hint: str | None = None


class ScoreResponse(BaseModel):
    per_token_scores: list[float]


class TranslateRequest(BaseModel):
    natural: str = Field(min_length=1)
    method: Literal["sup_seq2seq", "unsup_seq2seq"]


class TranslateResponse(BaseModel):
    cloze: str
    rewritten: bool


class PseudoLabelRecord(BaseModel):
    id: str
    cloze_tokens: list[str] = Field(min_length=1)
    mask_index: int
    candidates: list[str] = Field(min_length=1)
    pseudo_label: int
    translator: str

    @model_validator(mode="after")
    def _check_shape(self) -> "PseudoLabelRecord":
        masks = [i for i, t in enumerate(self.cloze_tokens) if MASK_TOKEN in t]
        if len(masks) != 1:
            raise ValueError(f"cloze must contain exactly one mask, found {len(masks)}")
        if self.mask_index != masks[0]:
            raise ValueError(f"mask_index {self.mask_index} does not point at the mask")
        if not 0 <= self.pseudo_label < len(self.candidates):
            raise ValueError(
                f"pseudo_label {self.pseudo_label} is outside the candidate range"
            )
        return self


class Hyperparameters(BaseModel):
    learning_rate: float = Field(gt=0.0)
    steps: int = Field(gt=0)


class TrainRequest(BaseModel):
    batch_id: str = Field(min_length=1)
    records: list[PseudoLabelRecord] = Field(min_length=1)
    hyperparameters: Hyperparameters


class TrainResponse(BaseModel):
    accepted: int
    step: int


class HealthResponse(BaseModel):
    status: str
    model_ids: list[str]


def create_app(engine: ScoringEngine | None = None) -> FastAPI:
    """Build the service around one scoring engine."""
    if engine is None:
        engine = default_engine()
    app = FastAPI(title="cloze LM sidecar")

    # /train state: one writer at a time; replayed batch ids are skipped.
    writer_lock = threading.Lock()
    trained_batches: dict[str, TrainResponse] = {}
    step_counter = 0

    @app.post("/v1/parse", response_model=ParseResponse)
    def parse(request: ParseRequest) -> ParseResponse:
        try:
            return ParseResponse(ptb=parse_question(request.text))
        except UnparseableError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/v1/score", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        try:
            scores = engine.score_tokens(request.tokens, request.mode)
        except EngineError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return ScoreResponse(per_token_scores=scores)

    @app.post("/v1/translate", response_model=TranslateResponse)
    def translate_question(request: TranslateRequest) -> TranslateResponse:
        try:
            result = translate(request.natural, request.method)
        except TranslationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return TranslateResponse(cloze=result.cloze, rewritten=result.rewritten)

    @app.post("/v1/train", response_model=TrainResponse)
    def train(request: TrainRequest) -> TrainResponse:
        nonlocal step_counter
        examples = [
            TrainingExample(
                cloze_tokens=tuple(record.cloze_tokens),
                answer=record.candidates[record.pseudo_label],
            )
            for record in request.records
        ]
        with writer_lock:
            replay = trained_batches.get(request.batch_id)
            if replay is not None:
                return replay
            try:
                engine.fine_tune(examples, request.hyperparameters.learning_rate)
            except EngineError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            step_counter += 1
            response = TrainResponse(accepted=len(request.records), step=step_counter)
            trained_batches[request.batch_id] = response
            return response

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok",
            model_ids=[engine.model_id, TRANSLATOR_MODEL_ID, PARSER_MODEL_ID],
        )

    return app


def serve() -> None:
    """Run the service on localhost for manual use."""
    import uvicorn

    uvicorn.run(create_app(), host="127.0.0.1", port=8400)
