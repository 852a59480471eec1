from collections.abc import AsyncGenerator

import numpy as np
import pytest
from httpx import ASGITransport, AsyncClient

from app.geometry import build_layout
from app.models import Layout, Scenario
from app.scenario import apply_overrides, baseline_config, to_scenario
from app.schemas import ScenarioConfig

# Small enough for Monte-Carlo tests to run in well under a second.
SMALL_OVERRIDES = {"num_antennas": 8, "num_repeaters": 4, "spacing_m": 8.0}


@pytest.fixture
def baseline() -> ScenarioConfig:
    return baseline_config()


@pytest.fixture
def scenario(baseline: ScenarioConfig) -> Scenario:
    return to_scenario(baseline)


@pytest.fixture
def layout(scenario: Scenario) -> Layout:
    return build_layout(scenario)


@pytest.fixture
def small_config(baseline: ScenarioConfig) -> ScenarioConfig:
    return apply_overrides(baseline, SMALL_OVERRIDES)


@pytest.fixture
def small_scenario(small_config: ScenarioConfig) -> Scenario:
    return to_scenario(small_config)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
async def client() -> AsyncGenerator[AsyncClient]:
    from app.main import app

    async with AsyncClient(
        transport=ASGITransport(app=app),
        base_url="http://test",
    ) as ac:
        yield ac
