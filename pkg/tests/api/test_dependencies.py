"""Unit tests for API dependency providers."""
from __future__ import annotations

from app.api import dependencies
from app.schemas.scenario import LMConfig
from app.services.network_service import NetworkService
from app.services.optimization_service import OptimizationService


def test_get_optimization_service_uses_default_solver_settings() -> None:
    service = dependencies.get_optimization_service()

    assert isinstance(service, OptimizationService)
    assert service.default_lm == LMConfig()


def test_get_network_service_returns_fresh_instance() -> None:
    first = dependencies.get_network_service()
    second = dependencies.get_network_service()

    assert isinstance(first, NetworkService)
    assert first is not second
