"""Pluggable chat-completion backends: deterministic oracle and remote HTTP."""
from .core import (
    BackendError,
    BudgetLedger,
    ChatBackend,
    ChatExchange,
    PromptTemplate,
    ResponseCache,
    TemplateRegistry,
    cache_key,
    registry,
)
from .oracle import FOREIGN_OBJECTS, OracleBackend, corrupt_value, verify_action_evidence
from .parsing import StructuredParseError, extract_json, parse_structured
from .remote import RemoteBackend

__all__ = [
    "BackendError", "BudgetLedger", "ChatBackend", "ChatExchange",
    "FOREIGN_OBJECTS", "OracleBackend", "PromptTemplate", "RemoteBackend",
    "ResponseCache", "StructuredParseError", "TemplateRegistry", "cache_key",
    "corrupt_value", "extract_json", "parse_structured", "registry",
    "verify_action_evidence",
]
