"""FastAPI app: POST /embed returns unit-normalized sentence embeddings.

Providers are pluggable: test mode serves the deterministic hashed
bag-of-words vectors with no model dependency; model mode lazily loads a
sentence-transformers checkpoint. Vectors are L2-normalized server-side, so
the unit-norm invariant holds regardless of provider.
"""

from __future__ import annotations

import logging
import math

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from embedder_service.hashing import DEFAULT_DIM, hashed_vector

MAX_BATCH = 256


class EmbedRequest(BaseModel):
    texts: list[str]


class HashedProvider:
    """Deterministic hashed bag-of-words vectors; always ready."""

    def __init__(self, dim: int = DEFAULT_DIM):
        self.model_name = "hashed-bow-test"
        self.dim = dim
        self.ready = True

    def embed(self, texts: list[str]) -> list[list[float]]:
        return [hashed_vector(text, self.dim) for text in texts]


class SentenceTransformerProvider:
    """Lazy wrapper around a sentence-transformers checkpoint."""

    def __init__(self, model_name: str):
        self.model_name = model_name
        self.dim = 0
        self.ready = False
        self._model = None

    def load(self) -> None:
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(self.model_name)
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self.ready = True

    def embed(self, texts: list[str]) -> list[list[float]]:
        vectors = self._model.encode(texts, convert_to_numpy=True)
        normalized = []
        for row in vectors:
            values = [float(v) for v in row]
            norm = math.sqrt(sum(v * v for v in values))
            if norm > 0.0:
                values = [v / norm for v in values]
            normalized.append(values)
        return normalized


def create_app(provider) -> FastAPI:
    app = FastAPI(title="embedder-service")

    @app.get("/health")
    def health():
        if not provider.ready:
            return JSONResponse(
                status_code=503,
                content={"status": "loading", "model_name": provider.model_name, "dim": provider.dim},
            )
        return {"status": "ok", "model_name": provider.model_name, "dim": provider.dim}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        if not provider.ready:
            return JSONResponse(status_code=503, content={"error": "model not loaded"})
        texts = request.texts
        if not 1 <= len(texts) <= MAX_BATCH:
            return JSONResponse(
                status_code=400,
                content={"error": f"batch size must be in [1, {MAX_BATCH}], got {len(texts)}"},
            )
        empties = [i for i, text in enumerate(texts) if not text.strip()]
        if empties:
            return JSONResponse(
                status_code=400,
                content={"error": f"texts at positions {empties[:5]} are empty after trimming"},
            )
        vectors = provider.embed(texts)
        return {"vectors": vectors, "model_name": provider.model_name, "dim": provider.dim}

    return app


def build(test_mode: bool = True, model_name: str | None = None, dim: int = DEFAULT_DIM) -> FastAPI:
    if test_mode:
        return create_app(HashedProvider(dim))
    provider = SentenceTransformerProvider(model_name or "all-MiniLM-L6-v2")
    app = create_app(provider)

    @app.on_event("startup")
    def _load_model():
        # a failed load leaves the service answering 503 instead of dying
        try:
            provider.load()
        except Exception as exc:
            logging.getLogger(__name__).error("model load failed: %s", exc)

    return app
