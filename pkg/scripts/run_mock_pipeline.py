#!/usr/bin/env python3
"""End-to-end demo on the bundled fixtures, fully offline.

Walks the whole surface with scripted mock agents: corpus stats, BM25 index
build, training-corpus export, batch review, and metric evaluation of the
reviews against the fixture's reference comments. Every step shells through
the same entry points as the `revagent` console command.
"""

import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))
sys.path.insert(0, str(REPO / "tests"))

from conftest import make_mock_config_ini  # noqa: E402
from revagent.cli import main  # noqa: E402


def run(argv):
    print(f"\n$ revagent {' '.join(argv)}")
    code = main(argv)
    if code != 0:
        raise SystemExit(f"step failed with exit code {code}")


def main_demo():
    corpus = REPO / "tests" / "data" / "corpus_50.jsonl"
    with tempfile.TemporaryDirectory(prefix="revagent-demo-") as tmp:
        tmp = Path(tmp)
        config = make_mock_config_ini(tmp / "config.ini")

        run(["stats", str(corpus)])
        run(["index", "build", str(corpus), str(tmp / "indices")])
        run(["build-train", str(corpus), str(tmp / "train"), "--no-split"])

        batch = tmp / "batch.jsonl"
        with corpus.open(encoding="utf-8") as src, batch.open("w", encoding="utf-8") as dst:
            for line in src:
                record = json.loads(line)
                dst.write(json.dumps({"id": record["id"], "diff": record["diff"]}) + "\n")
        predictions = tmp / "predictions.jsonl"
        run(["review", "--batch", str(batch), "--config", str(config), "--out", str(predictions)])
        run(["eval", "--pred", str(predictions), "--ref", str(corpus), "--embedder", "mock",
             "--json", str(tmp / "report.json")])

        report = json.loads((tmp / "report.json").read_text(encoding="utf-8"))
        print("\naggregate:", json.dumps(report["aggregate"], indent=2))


if __name__ == "__main__":
    main_demo()
