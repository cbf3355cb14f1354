"""The single seam between the deterministic engine and any language
model: scorer, ranker, generator, and embedder.

Two implementations share one interface: a fully deterministic seeded
mock, and a generic HTTP chat-completions client. Swapping them changes
no engine code path.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fields import TWO_PI, FieldRow, PhenomenalField, Position

ENDPOINT_ENV = "IROLLAN_ENDPOINT"
API_KEY_ENV = "IROLLAN_API_KEY"

_TOKEN = re.compile(r"[a-z0-9']+")
_RANKER_ENTRY = re.compile(r"- id: (\S+) \| balance: (-?\d+)")
_CANDIDATES_LINE = re.compile(r"Actions you may take: (.*)")


class BackendError(RuntimeError):
    """Transport or protocol failure, tagged with the role."""

    def __init__(self, role: str, message: str, prompt: str = ""):
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12] if prompt else "-"
        super().__init__(f"[{role}] {message} (prompt {digest})")
        self.role = role


@dataclass
class BackendConfig:
    mode: str = "mock"  # mock | http
    endpoint: str = ""
    model_scorer: str = "scorer"
    model_ranker: str = "ranker"
    model_generator: str = "generator"
    model_embedder: str = "embedder"
    timeout: float = 30.0
    max_retries: int = 2
    seed: int = 0
    embed_dim: int = 16

    def __post_init__(self) -> None:
        if self.mode not in ("mock", "http"):
            raise ValueError(f"backend mode must be mock or http: {self.mode}")
        if self.mode == "http" and not (self.endpoint or os.environ.get(ENDPOINT_ENV)):
            raise ValueError("http mode requires an endpoint")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "endpoint": self.endpoint,
            "model_scorer": self.model_scorer,
            "model_ranker": self.model_ranker,
            "model_generator": self.model_generator,
            "model_embedder": self.model_embedder,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
            "seed": self.seed,
            "embed_dim": self.embed_dim,
        }


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _hash01(text: str, salt: str) -> float:
    digest = hashlib.sha256(f"{salt}|{text}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / float(1 << 64)


def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}|tok|{token}".encode("utf-8")).digest()
    need = dim * 4
    buf = digest
    while len(buf) < need:
        buf += hashlib.sha256(buf).digest()
    raw = np.frombuffer(buf[:need], dtype=">u4").astype(np.float64)
    return raw / float(1 << 32) - 0.5


class MockBackend:
    """Seeded, deterministic stand-in for every language-model role.

    Embeddings are normalized bags of per-token hash vectors, so texts
    sharing tokens land measurably closer than unrelated texts. Scores,
    rankings, and generations follow fixed laws over the prompt text.
    """

    def __init__(self, config: BackendConfig):
        self.config = config
        self.seed = config.seed
        self.dim = config.embed_dim
        self._embed_cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise BackendError("embedder", "cannot embed empty text")
        cached = self._embed_cache.get(text)
        if cached is not None:
            return cached
        tokens = tokenize(text) or ["<blank>"]
        total = np.zeros(self.dim)
        for token in tokens:
            total += _token_vector(token, self.dim, self.seed)
        norm = float(np.linalg.norm(total))
        if norm == 0.0:
            total[0] = 1.0
            norm = 1.0
        vector = total / norm
        vector.setflags(write=False)
        self._embed_cache[text] = vector
        return vector

    def score(self, prompt: str) -> str:
        value = 1 + int(_hash01(prompt, f"{self.seed}|score") * 5.0) % 5
        return str(value)

    def rank(self, prompt: str, agent_ids: Sequence[str]) -> str:
        balances = {m.group(1): int(m.group(2)) for m in _RANKER_ENTRY.finditer(prompt)}
        order = sorted(agent_ids, key=lambda a: (-balances.get(a, 0), a))
        return ", ".join(order)

    def generate(self, prompt: str) -> str:
        match = _CANDIDATES_LINE.search(prompt)
        candidates = [c.strip() for c in match.group(1).split(", ")] if match else []
        action = candidates[0] if candidates and candidates[0] else "leave"
        if action.startswith("chat with "):
            target = action[len("chat with "):]
            action = f'{action}: "Hello {target}, how are things going?"'
        return f"Thought: I will {action}.\nAction: {action}"


class HttpBackend:
    """Generic chat-completions client: {model, messages} in, {content} out."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self.endpoint = os.environ.get(ENDPOINT_ENV, "") or config.endpoint
        self.api_key = os.environ.get(API_KEY_ENV, "")

    def _request(self, role: str, model: str, prompt: str) -> str:
        body = json.dumps({"model": model, "messages": [{"role": "user", "content": prompt}]}).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for _ in range(self.config.max_retries + 1):
            request = urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")
            try:
                with urllib.request.urlopen(request, timeout=self.config.timeout) as response:
                    payload = json.loads(response.read().decode("utf-8"))
                return str(payload["content"])
            except (urllib.error.URLError, OSError, KeyError, json.JSONDecodeError) as exc:
                last_error = exc
        raise BackendError(role, f"request failed after retries: {last_error}", prompt)

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise BackendError("embedder", "cannot embed empty text")
        reply = self._request("embedder", self.config.model_embedder, text)
        try:
            vector = np.asarray(json.loads(reply), dtype=np.float64)
        except (json.JSONDecodeError, ValueError) as exc:
            raise BackendError("embedder", f"reply is not a vector: {exc}", text) from exc
        if vector.ndim != 1 or vector.size != self.config.embed_dim:
            raise BackendError("embedder", f"vector has wrong shape {vector.shape}", text)
        norm = float(np.linalg.norm(vector))
        return vector / norm if norm else vector

    def score(self, prompt: str) -> str:
        return self._request("scorer", self.config.model_scorer, prompt)

    def rank(self, prompt: str, agent_ids: Sequence[str]) -> str:
        return self._request("ranker", self.config.model_ranker, prompt)

    def generate(self, prompt: str) -> str:
        return self._request("generator", self.config.model_generator, prompt)


def make_backend(config: BackendConfig):
    return MockBackend(config) if config.mode == "mock" else HttpBackend(config)


def embed_row(backend, text: str, context_tokens: set[str]) -> FieldRow:
    """Build a full field row from text.

    The embedding comes from the backend; the position is a deterministic
    heuristic: hash angles for theta/phi, token novelty against the
    agent's recent context for gamma (salience proxy).
    """
    embedding = backend.embed(text)
    tokens = tokenize(text)
    if tokens:
        novel = sum(1 for t in tokens if t not in context_tokens)
        gamma = novel / len(tokens)
    else:
        gamma = 0.0
    theta = _hash01(text, "theta") * math.pi
    phi = _hash01(text, "phi") * TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return FieldRow(embedding, Position(theta=theta, phi=phi, gamma=gamma))


def field_from_clauses(backend, clauses: Sequence[str], context_tokens: set[str]) -> PhenomenalField:
    """One field row per perceived clause; blank clauses are skipped."""
    rows = [embed_row(backend, clause, context_tokens) for clause in clauses if clause.strip()]
    return PhenomenalField(rows)


def observation_clauses(observation: str) -> list[str]:
    """Split an observation into perceptual clauses: the place sentence,
    each visible element, the holding clause, the activity, chats."""
    clauses: list[str] = []
    rest = observation
    for sentence in _split_sentences(rest):
        if sentence.startswith("Looking around you, you see "):
            body = sentence[len("Looking around you, you see "):]
            for element in body.split(", "):
                if element.startswith("and ") and clauses:
                    element = element[4:]
                clauses.append(element)
        else:
            clauses.append(sentence)
    return clauses


def _split_sentences(text: str) -> list[str]:
    # Periods inside quoted chat content do not end a sentence.
    out: list[str] = []
    current: list[str] = []
    in_quote = False
    for ch in text:
        current.append(ch)
        if ch == '"':
            in_quote = not in_quote
        elif ch == "." and not in_quote:
            out.append("".join(current).strip().rstrip("."))
            current = []
    tail = "".join(current).strip().rstrip(".")
    if tail:
        out.append(tail)
    return [s for s in out if s]
