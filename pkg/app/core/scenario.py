"""Scenario file loading."""
from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from app.schemas.scenario import ScenarioConfig
from app.services.exceptions import ConfigurationError


def parse_scenario(data: Any) -> ScenarioConfig:
    """Validate an already-parsed mapping into a scenario."""

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("Scenario file must contain a mapping at the top level")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid scenario: {exc}") from exc


def load_scenario(path: Path | str) -> ScenarioConfig:
    """Read and validate a YAML scenario file."""

    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"Cannot read scenario file {source}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Scenario file {source} is not valid YAML: {exc}") from exc
    return parse_scenario(data)


def dump_scenario(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
