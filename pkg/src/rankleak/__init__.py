"""Rank-based inference attack laboratory for top-k query interfaces."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .adversary import (
    AttackOutcome,
    ExclusionLedger,
    QueryHistory,
    VictimKnowledge,
    find_q,
    infer_all,
    q_in,
    q_point,
    qi_in,
    qi_point,
    verify_differential_pair,
)
from .engine import (
    InterfaceConfig,
    QueryEngine,
    RateLimitExceeded,
    UnsupportedPredicate,
    answer_payload,
    returns_victim,
)
from .model import (
    AttributeDescriptor,
    Database,
    DuplicateTuple,
    Query,
    RankedAnswer,
    Row,
    Schema,
    build_schema,
    insert_tuple,
    point_query,
    project_public,
)
from .oracle import FeasibleSet, exhaustive_topk, feasible_values
from .ranking import (
    LinearRanking,
    RankingWeights,
    TiePolicy,
    certify_additivity,
    certify_monotonicity,
    discrete_distance,
    linear_score,
    total_order,
)

__version__ = "0.1.0"
