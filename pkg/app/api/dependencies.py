"""FastAPI dependency providers."""
from __future__ import annotations

from app.services.network_service import NetworkService
from app.services.optimization_service import OptimizationService


def get_optimization_service() -> OptimizationService:
    """Provide the optimization service."""

    return OptimizationService()


def get_network_service() -> NetworkService:
    """Provide the network validation service."""

    return NetworkService()
