"""Shared pytest fixtures for the relative localization toolkit tests."""
from __future__ import annotations

from collections.abc import Generator

import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.core.scenario import parse_scenario
from app.main import create_app
from app.schemas.scenario import PathLossParams, ScenarioConfig


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240521)


@pytest.fixture()
def path_loss() -> PathLossParams:
    return PathLossParams(ref_rssi_dbm=-40.0, exponent=2.0, shadowing_sigma_db=2.0)


@pytest.fixture()
def small_scenario() -> ScenarioConfig:
    return parse_scenario(
        {
            "n_robots": 3,
            "iterations": 6,
            "trials": 2,
            "seed": 11,
            "k": 2,
            "cap": 8,
            "area": {"width": 30.0, "height": 30.0},
        }
    )


@pytest.fixture()
def noise_free_scenario() -> ScenarioConfig:
    return parse_scenario(
        {
            "n_robots": 3,
            "iterations": 5,
            "trials": 1,
            "seed": 3,
            "k": 1,
            "cap": 8,
            "area": {"width": 30.0, "height": 30.0},
            "path_loss": {"shadowing_sigma_db": 0.0},
            "motion_noise": {"sigma_x": 0.0, "sigma_y": 0.0, "sigma_phi_deg": 0.0},
        }
    )


@pytest.fixture()
def client() -> Generator[TestClient, None, None]:
    application = create_app()
    with TestClient(application) as test_client:
        yield test_client
