import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
SYSTEMS = REPO / "systems"

sys.path.insert(0, str(Path(__file__).resolve().parent))

from lcstrs.syntax import parse_system, parse_term  # noqa: E402


@pytest.fixture(scope="session")
def fact_source() -> str:
    return (SYSTEMS / "fact.lcstrs").read_text()


@pytest.fixture(scope="session")
def fact_system(fact_source):
    return parse_system(fact_source)


class TermBox:
    """Parses terms against one system with a shared variable context, so
    the same name denotes the same variable across a test."""

    def __init__(self, system):
        self.system = system
        self.ctx = {}

    def __call__(self, text: str, expected=None):
        return parse_term(text, self.system, self.ctx, expected)

    def var(self, name: str):
        return self.ctx[name]


@pytest.fixture
def terms(fact_system) -> TermBox:
    return TermBox(fact_system)
