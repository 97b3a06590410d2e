"""Graph and observability documents."""
from __future__ import annotations

from pydantic import BaseModel, Field

from app.services.relgraph import ObservabilityReport, RelGraph


class GraphEdge(BaseModel):
    i: int = Field(ge=0)
    j: int = Field(ge=0)
    w: float = Field(gt=0)


class GraphDocument(BaseModel):
    """JSON form of a range graph: {n, edges: [{i, j, w}]}."""

    n: int = Field(ge=0)
    edges: list[GraphEdge] = Field(default_factory=list)

    def to_domain(self) -> RelGraph:
        return RelGraph(self.n, tuple((edge.i, edge.j, edge.w) for edge in self.edges))

    @classmethod
    def from_domain(cls, graph: RelGraph) -> GraphDocument:
        return cls(n=graph.n, edges=[GraphEdge(i=i, j=j, w=w) for i, j, w in graph.edges])


class ObservabilityReportRead(BaseModel):
    spectral_rank: int
    threshold: int
    observable: bool
    component_count: int

    @classmethod
    def from_domain(cls, report: ObservabilityReport) -> ObservabilityReportRead:
        return cls(
            spectral_rank=report.spectral_rank,
            threshold=report.threshold,
            observable=report.observable,
            component_count=report.component_count,
        )


class ObservabilityRequest(BaseModel):
    graph: GraphDocument
    state_dim: int = Field(default=3, ge=1)
