"""Network assumption validation endpoint."""
from __future__ import annotations

from fastapi import APIRouter, Depends

from app.api.dependencies import get_network_service
from app.api.errors import map_service_error
from app.schemas.network import AssumptionReportRead, NetworkValidationRequest
from app.services.exceptions import ServiceError
from app.services.network_service import NetworkService

router = APIRouter(prefix="/network", tags=["network"])


@router.post("/validate", response_model=AssumptionReportRead)
def validate_network(
    payload: NetworkValidationRequest,
    service: NetworkService = Depends(get_network_service),
) -> AssumptionReportRead:
    """Check a recorded network trace against the weight and connectivity assumptions."""

    try:
        return service.validate(payload.records, payload.xi, payload.T, payload.horizon)
    except ServiceError as exc:
        raise map_service_error(exc) from exc
