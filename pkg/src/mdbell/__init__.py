"""Measurement-dependent local models for tripartite Bell inequalities."""

__version__ = "0.1.0"

from .scenario import (  # noqa: E402
    Behavior, Context, FULL_CONTEXTS, MDLModel, ModelError, Pairing, PartialModelError, ResponseTable,
    behavior, build_model, check_context_consistency, check_hidden_variable_no_signaling,
    check_no_signaling, correlator,
)
from .dependence import (  # noqa: E402
    DependenceReport, complete_contexts, dependence_report, freedom, measure, measure_bipartite,
    measure_one_sided, measure_overall,
)
from .inequalities import (  # noqa: E402
    MERMIN, NS2_99, SVETLICHNY, InequalitySpec, Kind, RelaxationScenario, Shape,
    check_model_against_bound, evaluate, relaxed_bound,
)
from .paper_models import PaperModelId, build_paper_model, expected_claims, paper_model  # noqa: E402
from .bound_search import (  # noqa: E402
    BoundCertificate, BoundViolation, enumerate_strategies, lp_max_S, verify_bound_soundness,
)
