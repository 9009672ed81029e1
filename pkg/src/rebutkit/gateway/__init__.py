"""Model access: prompt templates, completion client, offline provider."""

from .client import (
    Completion,
    HttpTransport,
    LlmGateway,
    ModelProfile,
    ProviderReply,
    TokenUsage,
    cache_key_for,
)
from .templates import PromptTemplate, list_templates, load_template, render_prompt

__all__ = [
    "Completion",
    "HttpTransport",
    "LlmGateway",
    "ModelProfile",
    "PromptTemplate",
    "ProviderReply",
    "TokenUsage",
    "cache_key_for",
    "list_templates",
    "load_template",
    "render_prompt",
]
