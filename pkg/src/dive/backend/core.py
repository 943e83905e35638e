"""Template registry, exchange record, caching, and the backend base class."""
from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .parsing import StructuredParseError, parse_structured

_TEMPLATE_DIR = Path(__file__).parent / "templates"
_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")

# placeholders the registry auto-binds from the template's own schema
_FORMAT_KEYS = frozenset({
    "output_format", "object_relationship_format", "subtask_plan_format",
    "subtask_verification_format", "action_format",
})


class BackendError(RuntimeError):
    pass


@dataclass
class PromptTemplate:
    id: str
    text: str
    schema: dict
    placeholders: tuple[str, ...]

    def render(self, bindings: dict) -> str:
        provided = {k for k in bindings if not k.startswith("_")}
        needed = set(self.placeholders) - _FORMAT_KEYS
        missing = needed - provided
        if missing:
            raise ValueError(f"template {self.id}: missing bindings {sorted(missing)}")

        def sub(match: re.Match) -> str:
            key = match.group(1)
            if key in _FORMAT_KEYS:
                return json.dumps(self.schema)
            value = bindings[key]
            return value if isinstance(value, str) else json.dumps(value, default=str)

        return _PLACEHOLDER_RE.sub(sub, self.text)


class TemplateRegistry:
    def __init__(self, directory: Path = _TEMPLATE_DIR):
        manifest = json.loads((directory / "manifest.json").read_text())
        self.templates: dict[str, PromptTemplate] = {}
        for tid, entry in manifest.items():
            text = (directory / entry["text"]).read_text()
            schema = json.loads((directory / entry["schema"]).read_text())
            found = tuple(sorted(set(_PLACEHOLDER_RE.findall(text))))
            declared = tuple(sorted(entry["placeholders"]))
            if found != declared:
                raise ValueError(f"template {tid}: manifest placeholders {declared} != text {found}")
            self.templates[tid] = PromptTemplate(tid, text, schema, found)

    def get(self, template_id: str) -> PromptTemplate:
        if template_id not in self.templates:
            raise KeyError(f"unknown template id {template_id!r}")
        return self.templates[template_id]


_REGISTRY: TemplateRegistry | None = None


def registry() -> TemplateRegistry:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = TemplateRegistry()
    return _REGISTRY


@dataclass
class ChatExchange:
    template_id: str
    prompt: str
    raw_response: str
    parsed: object | None
    parse_error: str | None
    latency: float
    token_estimate: int
    cache_hit: bool = False

    @property
    def ok(self) -> bool:
        return self.parse_error is None


def _estimate_tokens(*texts: str) -> int:
    return sum(max(1, len(t) // 4) for t in texts)


def cache_key(kind: str, template_id: str, bindings: dict) -> str:
    payload = {k: v for k, v in bindings.items() if not k.startswith("_")}
    for extra in ("_noise_salt", "_corrective"):
        if extra in bindings:
            payload[extra] = bindings[extra]
    blob = json.dumps({"kind": kind, "template": template_id, "bindings": payload},
                      sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


class ResponseCache:
    """Memory cache with optional disk persistence under the run directory."""

    def __init__(self, directory: str | Path | None = None):
        self._memory: dict[str, str] = {}
        self._lock = threading.Lock()
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)

    def get(self, key: str) -> str | None:
        with self._lock:
            if key in self._memory:
                return self._memory[key]
        if self.directory:
            path = self.directory / f"{key}.json"
            if path.exists():
                raw = json.loads(path.read_text())["response"]
                with self._lock:
                    self._memory[key] = raw
                return raw
        return None

    def put(self, key: str, response: str) -> None:
        with self._lock:
            self._memory[key] = response
        if self.directory:
            (self.directory / f"{key}.json").write_text(json.dumps({"response": response}))


@dataclass
class BudgetLedger:
    tokens: int = 0
    calls: int = 0
    cache_hits: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record(self, tokens: int, cache_hit: bool) -> None:
        with self._lock:
            self.tokens += tokens
            self.calls += 1
            if cache_hit:
                self.cache_hits += 1

    def as_dict(self) -> dict:
        return {"tokens": self.tokens, "calls": self.calls, "cache_hits": self.cache_hits}


class ChatBackend:
    """complete() renders a template, obtains a response, parses and validates."""

    kind = "base"

    def __init__(self, cache: ResponseCache | None = None, use_cache: bool = True):
        self.cache = cache if cache is not None else ResponseCache()
        self.use_cache = use_cache
        self.ledger = BudgetLedger()

    def _respond(self, template: PromptTemplate, prompt: str, bindings: dict) -> str:
        raise NotImplementedError

    def complete(self, template_id: str, bindings: dict) -> ChatExchange:
        template = registry().get(template_id)
        prompt = template.render(bindings)
        key = cache_key(self.kind, template_id, bindings)
        started = time.perf_counter()
        cached = self.cache.get(key) if self.use_cache else None
        if cached is not None:
            raw, hit = cached, True
        else:
            raw, hit = self._respond(template, prompt, bindings), False
            if self.use_cache:
                self.cache.put(key, raw)
        latency = time.perf_counter() - started
        try:
            parsed, parse_error = parse_structured(raw, template.schema), None
        except StructuredParseError as exc:
            parsed, parse_error = None, str(exc)
        tokens = _estimate_tokens(prompt, raw)
        self.ledger.record(tokens, hit)
        return ChatExchange(
            template_id=template_id, prompt=prompt, raw_response=raw,
            parsed=parsed, parse_error=parse_error, latency=latency,
            token_estimate=tokens, cache_hit=hit,
        )
