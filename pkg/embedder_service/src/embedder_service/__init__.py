"""Sentence-embedding microservice."""

from embedder_service.app import build, create_app
from embedder_service.hashing import DEFAULT_DIM, hashed_vector

__all__ = ["DEFAULT_DIM", "build", "create_app", "hashed_vector"]
