"""Policies, value models, scales and the transports that back them."""

from .gate import ensure_concurrent_policy, ensure_concurrent_value_model
from .policies import ExhaustivePolicy, Policy, RemotePolicy
from .rationales import (
    ACTION_LABEL,
    LOOKAHEAD_HEADER,
    OBSERVATION_LABEL,
    REFLECTION_LABEL,
    format_lookahead_block,
    parse_simulated_lookahead,
)
from .scales import (
    ATTRIBUTE4,
    GAME24,
    LIKERT10,
    LIKERT10_ODD,
    NUMERIC10,
    SCALES,
    MalformedRationale,
    ValueScale,
    aggregate_estimate,
    attribute_adjust,
    format_score_sentence,
    get_scale,
    parse_bounded_value,
    parse_value,
    strip_score_sentence,
)
from .transport import (
    ChatMessage,
    ChatRequest,
    ChatResponse,
    HttpTransport,
    ScriptedTransport,
    Transport,
    TransportError,
    approx_tokens,
)
from .values import (
    AttributeAdjustedValueModel,
    ConstantValueModel,
    DepthRouter,
    OracleValueModel,
    RemoteValueModel,
    RoutedValueModel,
    ScriptedValueModel,
    ValueModel,
)

__all__ = [
    "ACTION_LABEL",
    "ATTRIBUTE4",
    "AttributeAdjustedValueModel",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "ConstantValueModel",
    "DepthRouter",
    "ExhaustivePolicy",
    "GAME24",
    "HttpTransport",
    "LIKERT10",
    "LIKERT10_ODD",
    "LOOKAHEAD_HEADER",
    "MalformedRationale",
    "NUMERIC10",
    "OBSERVATION_LABEL",
    "OracleValueModel",
    "Policy",
    "REFLECTION_LABEL",
    "RemotePolicy",
    "RemoteValueModel",
    "RoutedValueModel",
    "SCALES",
    "ScriptedTransport",
    "ScriptedValueModel",
    "Transport",
    "TransportError",
    "ValueModel",
    "ValueScale",
    "aggregate_estimate",
    "approx_tokens",
    "attribute_adjust",
    "ensure_concurrent_policy",
    "ensure_concurrent_value_model",
    "format_lookahead_block",
    "format_score_sentence",
    "get_scale",
    "parse_bounded_value",
    "parse_simulated_lookahead",
    "parse_value",
    "strip_score_sentence",
]
