"""Deterministic test-mode embeddings: hashed bag-of-words projection.

The formula is part of the service contract so clients can recompute vectors
offline: for each whitespace token of the lowercased text, take
h = sha256(utf-8 bytes of the token); add sign at index, where
index = first four digest bytes (big-endian) mod dim and sign = +1 when the
fifth digest byte is even, else -1. The accumulated vector is L2-normalized.
"""

from __future__ import annotations

import hashlib
import math

DEFAULT_DIM = 256


def hashed_vector(text: str, dim: int = DEFAULT_DIM) -> list[float]:
    vector = [0.0] * dim
    for token in text.lower().split():
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        index = int.from_bytes(digest[:4], "big") % dim
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        vector[index] += sign
    norm = math.sqrt(sum(v * v for v in vector))
    if norm > 0.0:
        vector = [v / norm for v in vector]
    return vector
