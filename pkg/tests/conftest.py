import sys
from pathlib import Path

import hypothesis
import pytest

TESTS_DIR = Path(__file__).resolve().parent
DATA_DIR = TESTS_DIR / "data"

sys.path.insert(0, str(TESTS_DIR))

hypothesis.settings.register_profile("ci", deadline=None, max_examples=60)
hypothesis.settings.load_profile("ci")


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def golden_dir() -> Path:
    return DATA_DIR / "golden"


def make_mock_config_ini(path: Path, critic_script: str = "critic.jsonl", mode: str = "standard") -> Path:
    """Write an INI config wiring every agent role to the bundled mock scripts."""
    scripts = DATA_DIR / "mock_scripts"
    lines = [
        "[pipeline]",
        f"mode = {mode}",
        "verdict_fallback = false",
        "max_workers = 4",
        "",
        "[retrieval]",
        "k1 = 1.2",
        "b = 0.75",
        "",
        "[embedder]",
        "mode = mock",
        "",
    ]
    for category in ("refactoring", "bugfix", "testing", "logging", "documentation"):
        lines += [
            f"[backend.commentator.{category}]",
            "kind = mock",
            f"model = mock-{category}",
            f"script = {scripts / (category + '.jsonl')}",
            "",
        ]
    lines += [
        "[backend.critic]",
        "kind = mock",
        "model = mock-critic",
        f"script = {scripts / critic_script}",
        "",
        "[backend.fusion]",
        "kind = mock",
        "model = mock-fusion",
        f"script = {scripts / 'fusion.jsonl'}",
        "",
    ]
    path.write_text("\n".join(lines), encoding="utf-8")
    return path


@pytest.fixture
def mock_config_ini(tmp_path):
    return make_mock_config_ini(tmp_path / "config.ini")
