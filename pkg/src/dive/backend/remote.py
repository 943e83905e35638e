"""Chat-completion HTTP backend for any OpenAI-compatible endpoint."""
from __future__ import annotations

import os
import time

import httpx

from .core import BackendError, ChatBackend, PromptTemplate

ENV_API_KEY = "DIVE_API_KEY"
ENV_API_BASE = "DIVE_API_BASE"
ENV_MODEL = "DIVE_MODEL"

DEFAULT_TEMPERATURE = 0.0
MAX_RETRIES = 3


class RemoteBackend(ChatBackend):
    kind = "remote"

    def __init__(self, api_base: str | None = None, api_key: str | None = None,
                 model: str | None = None, temperature: float = DEFAULT_TEMPERATURE,
                 timeout: float = 60.0, transport: httpx.BaseTransport | None = None, **kw):
        super().__init__(**kw)
        self.api_base = (api_base or os.environ.get(ENV_API_BASE, "")).rstrip("/")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        self.model = model or os.environ.get(ENV_MODEL, "")
        self.temperature = temperature
        if not self.api_base:
            raise BackendError(f"remote backend needs an endpoint ({ENV_API_BASE})")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _respond(self, template: PromptTemplate, prompt: str, bindings: dict) -> str:
        url = f"{self.api_base}/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        delay = 1.0
        last_error: Exception | None = None
        for _ in range(MAX_RETRIES):
            try:
                response = self._client.post(url, json=payload, headers=headers)
                response.raise_for_status()
                data = response.json()
                return data["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                time.sleep(delay)
                delay *= 2
        raise BackendError(f"remote backend failed after {MAX_RETRIES} retries: {last_error}")
