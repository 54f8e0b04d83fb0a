from pathlib import Path

import pytest

from aorta_mc.checker import explore_full
from aorta_mc.psl import PslContext, parse_properties
from aorta_mc.runtime import load_config

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "writing-paper"
MAS_CONFIG = FIXTURE_DIR / "mas.json"


@pytest.fixture(scope="session")
def fixture_config():
    return load_config(MAS_CONFIG)


@pytest.fixture(scope="session")
def initial(fixture_config):
    return fixture_config.initial


@pytest.fixture(scope="session")
def psl_context(initial):
    return PslContext.from_org(initial.names, initial.program.org.facts)


@pytest.fixture(scope="session")
def properties(fixture_config, psl_context):
    return parse_properties(fixture_config.properties.read_text(encoding="utf-8"), psl_context)


@pytest.fixture(scope="session")
def model(initial):
    return explore_full(initial)
