"""Graph observability endpoint."""
from __future__ import annotations

from fastapi import APIRouter, Depends

from app.api.dependencies import get_optimization_service
from app.api.errors import map_service_error
from app.schemas.graph import ObservabilityReportRead, ObservabilityRequest
from app.services.exceptions import ServiceError
from app.services.optimization_service import OptimizationService

router = APIRouter(prefix="/graphs", tags=["graphs"])


@router.post("/observability", response_model=ObservabilityReportRead)
def check_observability(
    payload: ObservabilityRequest,
    service: OptimizationService = Depends(get_optimization_service),
) -> ObservabilityReportRead:
    try:
        return service.observability(payload.graph, payload.state_dim)
    except ServiceError as exc:
        raise map_service_error(exc) from exc
