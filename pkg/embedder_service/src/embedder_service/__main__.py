"""Run the service: python -m embedder_service [--port N] [--test-mode] [--model NAME]."""

import argparse

import uvicorn

from embedder_service.app import build
from embedder_service.hashing import DEFAULT_DIM


def main():
    parser = argparse.ArgumentParser(prog="embedder-service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8891)
    parser.add_argument("--test-mode", action="store_true",
                        help="serve deterministic hashed vectors, no model needed")
    parser.add_argument("--model", default="all-MiniLM-L6-v2",
                        help="sentence-transformers checkpoint for model mode")
    parser.add_argument("--dim", type=int, default=DEFAULT_DIM,
                        help="vector dimension in test mode")
    args = parser.parse_args()
    app = build(test_mode=args.test_mode, model_name=args.model, dim=args.dim)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
