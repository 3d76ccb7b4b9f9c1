"""End-to-end checks over a real HTTP boundary: uvicorn subprocess + client."""

import math
import random
import socket
import subprocess
import sys
import time

import pytest
import requests

revagent_metrics = pytest.importorskip(
    "revagent.evalmetrics", reason="primary package not installed"
)


def free_port():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def service_url():
    port = free_port()
    process = subprocess.Popen(
        [sys.executable, "-m", "embedder_service", "--test-mode", "--port", str(port)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    url = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if requests.get(f"{url}/health", timeout=1).status_code == 200:
                    break
            except requests.RequestException:
                pass
            time.sleep(0.1)
        else:
            raise RuntimeError("service did not become healthy")
        yield url
    finally:
        process.terminate()
        process.wait(timeout=10)


WORDS = ["fix", "loop", "bound", "null", "check", "guard", "log", "test", "doc", "merge"]


def test_self_similarity_through_primary_client(service_url):
    embedder = revagent_metrics.HttpEmbedder(service_url)
    for text in ("fix the loop bound", "a", "Merge the nested conditionals."):
        assert abs(revagent_metrics.sbert_sim(text, text, embedder) - 100.0) <= 0.01


def test_sbert_matches_offline_cosine_of_served_vectors(service_url):
    rng = random.Random(20)
    pairs = [
        (
            " ".join(rng.choices(WORDS, k=rng.randint(1, 10))),
            " ".join(rng.choices(WORDS, k=rng.randint(1, 10))),
        )
        for _ in range(20)
    ]
    embedder = revagent_metrics.HttpEmbedder(service_url)
    for candidate, reference in pairs:
        response = requests.post(
            f"{service_url}/embed", json={"texts": [candidate, reference]}, timeout=10
        )
        vec_c, vec_r = response.json()["vectors"]
        dot = sum(x * y for x, y in zip(vec_c, vec_r))
        norm_c = math.sqrt(sum(x * x for x in vec_c))
        norm_r = math.sqrt(sum(y * y for y in vec_r))
        expected = max(-1.0, min(1.0, dot / (norm_c * norm_r))) * 100.0
        got = revagent_metrics.sbert_sim(candidate, reference, embedder)
        assert abs(got - expected) <= 1e-9


def test_unit_norm_over_http(service_url):
    rng = random.Random(21)
    texts = [" ".join(rng.choices(WORDS, k=rng.randint(1, 12))) for _ in range(100)]
    vectors = requests.post(f"{service_url}/embed", json={"texts": texts}, timeout=10).json()[
        "vectors"
    ]
    for vector in vectors:
        norm = math.sqrt(sum(v * v for v in vector))
        assert abs(norm - 1.0) <= 1e-4


def test_health_consistency(service_url):
    health = requests.get(f"{service_url}/health", timeout=10).json()
    embed = requests.post(f"{service_url}/embed", json={"texts": ["probe"]}, timeout=10).json()
    assert health["model_name"] == embed["model_name"]
    assert health["dim"] == len(embed["vectors"][0]) == embed["dim"]
