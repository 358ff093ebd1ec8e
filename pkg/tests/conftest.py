import pathlib
import sys

import pytest

TESTS_DIR = pathlib.Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parent
FIXTURES = REPO_ROOT / "fixtures"

sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def fixtures_dir() -> pathlib.Path:
    return FIXTURES


@pytest.fixture(scope="session")
def fixture_paths() -> list[pathlib.Path]:
    return sorted(p for p in FIXTURES.glob("*.json") if ".expected" not in p.name)


@pytest.fixture(scope="session")
def game_fixture_paths(fixture_paths) -> list[pathlib.Path]:
    """The n >= 2 corpus used by game-level criteria (Z.json is n = 1)."""
    import json

    return [p for p in fixture_paths if json.loads(p.read_text())["n"] >= 2]
