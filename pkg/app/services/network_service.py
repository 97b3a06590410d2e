"""Service validating recorded network traces against the weight-matrix assumptions."""
from __future__ import annotations

import logging
from collections.abc import Iterable

from pydantic import ValidationError

from app.schemas.network import AssumptionReportRead, NetworkTraceRecord

from .exceptions import ConfigurationError
from .netsim import network_from_records, report_document, validate_assumptions

logger = logging.getLogger(__name__)


class NetworkService:
    def parse_trace(self, lines: Iterable[str]) -> list[NetworkTraceRecord]:
        """Parse JSON-lines trace text, skipping blank lines."""

        records = []
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                records.append(NetworkTraceRecord.model_validate_json(line))
            except ValidationError as exc:
                raise ConfigurationError(f"Invalid trace record on line {number}: {exc}") from exc
        return records

    def validate(
        self,
        records: list[NetworkTraceRecord],
        xi: float,
        T: int,
        horizon: int | None = None,
    ) -> AssumptionReportRead:
        network = network_from_records(records)
        report = validate_assumptions(network, xi, T, horizon)
        logger.info("Validated %s iterations of a %s-robot trace: passed=%s", len(network), network.n, report.passed)
        return report_document(report)
