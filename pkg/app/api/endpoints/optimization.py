"""Pose-graph optimization endpoint."""
from __future__ import annotations

from fastapi import APIRouter, Depends

from app.api.dependencies import get_optimization_service
from app.api.errors import map_service_error
from app.schemas.problem import OptimizedDocument, OptimizeRequest
from app.services.exceptions import ServiceError
from app.services.optimization_service import OptimizationService

router = APIRouter(tags=["optimization"])


@router.post("/optimize", response_model=OptimizedDocument)
def optimize(
    payload: OptimizeRequest,
    service: OptimizationService = Depends(get_optimization_service),
) -> OptimizedDocument:
    """Solve one pose-graph problem."""

    try:
        return service.optimize(payload.problem, payload.lm)
    except ServiceError as exc:
        raise map_service_error(exc) from exc
