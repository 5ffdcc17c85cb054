from .client import (
    EndpointConfig,
    EndpointNetworkError,
    EndpointStatusError,
    EndpointTimeout,
    ModelQueryError,
    RequestLog,
    prompt_hash,
    query_many,
    query_model,
)
from .parsing import ParsedResponse, parse_response
from .templates import (
    ABLATION_NAMES,
    ALL_RULES,
    RULE_HEADINGS,
    Demonstration,
    PromptSpec,
    PromptSpecError,
    ablation_family,
    bundled_examples,
    parse_demonstrations,
    render_blocks,
    render_prompt,
)

__all__ = [
    "ABLATION_NAMES",
    "ALL_RULES",
    "Demonstration",
    "EndpointConfig",
    "EndpointNetworkError",
    "EndpointStatusError",
    "EndpointTimeout",
    "ModelQueryError",
    "ParsedResponse",
    "PromptSpec",
    "PromptSpecError",
    "RULE_HEADINGS",
    "RequestLog",
    "ablation_family",
    "bundled_examples",
    "parse_demonstrations",
    "parse_response",
    "prompt_hash",
    "query_many",
    "query_model",
    "render_blocks",
    "render_prompt",
]
