"""Minimal chat-completion client with retries, request logging and replay."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import httpx

log = logging.getLogger(__name__)


class ModelQueryError(RuntimeError):
    def __init__(self, message: str, retries_exhausted: bool = False, attempts: int = 1):
        super().__init__(message)
        self.retries_exhausted = retries_exhausted
        self.attempts = attempts


class EndpointNetworkError(ModelQueryError):
    pass


class EndpointTimeout(ModelQueryError):
    pass


class EndpointStatusError(ModelQueryError):
    def __init__(self, message: str, status_code: int, **kw):
        super().__init__(message, **kw)
        self.status_code = status_code


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str = "ANVAYA_API_KEY"
    timeout: float = 60.0
    max_retries: int = 2
    temperature: float = 0.0
    retry_backoff: float = 0.5

    @classmethod
    def from_dict(cls, d: dict) -> "EndpointConfig":
        return cls(**d)


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class RequestLog:
    """Append-only jsonl of {timestamp, prompt_hash, model, raw_response}.

    A log doubles as a replay cassette: ``lookup`` returns the last recorded
    response for a (prompt, model) pair.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, prompt: str, model: str, raw: str) -> None:
        rec = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "prompt_hash": prompt_hash(prompt),
            "model": model,
            "raw_response": raw,
        }
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    def lookup(self, prompt: str, model: str) -> str | None:
        if not self.path.exists():
            return None
        h = prompt_hash(prompt)
        found = None
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                if rec["prompt_hash"] == h and rec["model"] == model:
                    found = rec["raw_response"]
        return found


def _post_once(client: httpx.Client, endpoint: EndpointConfig, prompt: str) -> str:
    headers = {}
    key = os.environ.get(endpoint.api_key_env)
    if key:
        headers["Authorization"] = f"Bearer {key}"
    payload = {
        "model": endpoint.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": endpoint.temperature,
    }
    resp = client.post(endpoint.base_url.rstrip("/") + "/chat/completions", json=payload, headers=headers)
    if resp.status_code != 200:
        raise EndpointStatusError(f"endpoint returned HTTP {resp.status_code}", resp.status_code)
    try:
        return resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ModelQueryError(f"unexpected response shape: {exc}") from exc


def _retryable(exc: ModelQueryError) -> bool:
    if isinstance(exc, EndpointStatusError):
        return exc.status_code == 429 or exc.status_code >= 500
    return isinstance(exc, (EndpointNetworkError, EndpointTimeout))


def query_model(
    prompt: str,
    endpoint: EndpointConfig,
    *,
    log_path: str | Path | None = None,
    cassette: str | Path | None = None,
    transport: httpx.BaseTransport | None = None,
) -> str:
    """Send ``prompt`` as one user message and return the completion text verbatim.

    With ``cassette`` set, a recorded response for the same prompt and model
    is replayed without touching the network; misses are fetched and
    recorded.
    """
    tape = RequestLog(cassette) if cassette else None
    if tape is not None:
        hit = tape.lookup(prompt, endpoint.model)
        if hit is not None:
            return hit

    attempts = endpoint.max_retries + 1
    with httpx.Client(timeout=endpoint.timeout, transport=transport) as client:
        for attempt in range(1, attempts + 1):
            try:
                try:
                    raw = _post_once(client, endpoint, prompt)
                except httpx.TimeoutException as exc:
                    raise EndpointTimeout(f"timed out after {endpoint.timeout}s: {exc}") from exc
                except httpx.TransportError as exc:
                    raise EndpointNetworkError(f"network error: {exc}") from exc
                break
            except ModelQueryError as exc:
                exc.attempts = attempt
                if not _retryable(exc):
                    raise
                if attempt == attempts:
                    exc.retries_exhausted = True
                    raise
                log.warning("attempt %d/%d failed: %s", attempt, attempts, exc)
                time.sleep(endpoint.retry_backoff * 2 ** (attempt - 1))

    if log_path is not None:
        RequestLog(log_path).append(prompt, endpoint.model, raw)
    if tape is not None:
        tape.append(prompt, endpoint.model, raw)
    return raw


def query_many(
    prompts: Iterable[str], endpoint: EndpointConfig, max_concurrency: int = 4, **kw
) -> dict[str, str]:
    """Query several prompts concurrently; results keyed by prompt hash."""
    unique = list(dict.fromkeys(prompts))
    with ThreadPoolExecutor(max(1, max_concurrency)) as pool:
        raws = list(pool.map(lambda p: query_model(p, endpoint, **kw), unique))
    return {prompt_hash(p): r for p, r in zip(unique, raws)}
