"""Multipartite nonlocality from Mermin-Svetlichny inequalities.

Exact MS polynomials and their maxima under grouping, broadcasting and
restrained-subset communication models; GHZ and W state violations; and
certificates bounding the number of groups / broadcasting parties.
"""
from .algebra import (
    Coefficient,
    CorrelationTable,
    MSPolynomial,
    Sqrt2Number,
    algebraic_bound,
    build_M,
    build_M_pm,
    build_M_prime,
    build_S,
    evaluate,
    evaluate_exact,
    local_bound,
    model_bound,
    ms_polynomial,
    prime,
    relabel_party,
    restrict,
)
from .classify import NonlocalityCertificate, classify, theta_critical
from .optimize import OptimizationResult, maximize, sweep_ghz, sweep_w, w_asymptote
from .quantum import (
    MeasurementSettings,
    StateSpec,
    correlation_ghz_closed,
    correlation_table_statevector,
    correlation_w_closed,
    ms_value,
)
from .strategies import (
    BroadcastSet,
    GroupStrategy,
    Partition,
    RestrainedConfig,
    broadcast_max_naive,
    conditional_max,
    grouping_max,
    local_max,
    restrained_max_naive,
    tight_strategy,
)

__version__ = "0.1.0"
