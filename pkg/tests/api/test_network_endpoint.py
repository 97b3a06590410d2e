"""Tests for the network validation endpoint."""
from __future__ import annotations

from fastapi import status


def _record(t: int, connected: bool) -> dict[str, object]:
    if connected:
        return {"t": t, "edges": [[0, 1]], "weights": [[0.5, 0.5], [0.5, 0.5]]}
    return {"t": t, "edges": [], "weights": [[1.0, 0.0], [0.0, 1.0]]}


def test_validate_network_passes(client) -> None:
    payload = {"records": [_record(0, True), _record(1, True)], "xi": 0.5, "T": 1}

    response = client.post("/api/network/validate", json=payload)

    assert response.status_code == status.HTTP_200_OK
    assert response.json()["passed"] is True


def test_validate_network_reports_failures(client) -> None:
    payload = {"records": [_record(0, True), _record(1, False)], "xi": 0.5, "T": 1}

    response = client.post("/api/network/validate", json=payload)

    body = response.json()
    assert body["passed"] is False
    assert body["t_connected"] is False
    assert body["failing_windows"] == [[1, 1]]


def test_validate_network_rejects_gaps(client) -> None:
    payload = {"records": [_record(0, True), _record(2, True)], "xi": 0.5, "T": 1}

    response = client.post("/api/network/validate", json=payload)

    assert response.status_code == status.HTTP_400_BAD_REQUEST


def test_validate_network_requires_positive_xi(client) -> None:
    payload = {"records": [_record(0, True)], "xi": 0.0, "T": 1}

    response = client.post("/api/network/validate", json=payload)

    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
