from __future__ import annotations

import pytest

from ehrsynth.generation import GrammarBackend, default_templates, generate_cohort
from ehrsynth.mockserver import start_mock_server
from ehrsynth.schema import build_default_schema


@pytest.fixture(scope="session")
def schema():
    return build_default_schema()


@pytest.fixture(scope="session")
def templates():
    return default_templates()


@pytest.fixture(scope="session")
def small_cohort(schema, templates):
    return generate_cohort(schema, templates, GrammarBackend(), n=6, base_seed=11)


@pytest.fixture(scope="session")
def mock_server():
    server = start_mock_server()
    yield server
    server.shutdown()
