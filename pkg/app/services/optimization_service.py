"""Service wrapping single-problem optimization and observability checks for the API and CLI."""
from __future__ import annotations

import logging

from pydantic import ValidationError

from app.schemas.graph import GraphDocument, ObservabilityReportRead
from app.schemas.problem import OptimizedDocument, ProblemDocument
from app.schemas.scenario import LMConfig

from .exceptions import ConfigurationError
from .optimizer import solve_lm
from .relgraph import observability_check

logger = logging.getLogger(__name__)


class OptimizationService:
    """Solves pose-graph documents and reports graph observability."""

    def __init__(self, default_lm: LMConfig | None = None) -> None:
        self.default_lm = default_lm or LMConfig()

    def load_problem(self, raw: str) -> ProblemDocument:
        try:
            return ProblemDocument.model_validate_json(raw)
        except ValidationError as exc:
            raise ConfigurationError(f"Invalid problem document: {exc}") from exc

    def optimize(self, document: ProblemDocument, lm: LMConfig | None = None) -> OptimizedDocument:
        """Solve a problem document and return the optimized vertices with the solver trace."""

        problem = document.to_domain()
        result = solve_lm(problem, lm or self.default_lm)
        logger.info(
            "Optimized %s vertices in %s iterations (chi2 %.3g, converged=%s)",
            len(problem.vertices),
            result.iterations,
            result.final_chi2,
            result.converged,
        )
        return OptimizedDocument.from_domain(result)

    def observability(self, graph: GraphDocument, state_dim: int) -> ObservabilityReportRead:
        return ObservabilityReportRead.from_domain(observability_check(graph.to_domain(), state_dim))
