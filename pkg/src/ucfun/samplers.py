"""Candidate-program samplers: an LLM chat-completion client and an offline mutator."""

from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import httpx
import numpy as np

from .kernels.opcodes import FEATURES
from .lang import (
    MAX_NODES,
    BinOp,
    Call,
    HeuristicProgram,
    Neg,
    Node,
    Num,
    ProgramParseError,
    Var,
    children,
    node_count,
    parse,
    to_source,
)

API_KEY_ENV = "UC_LLM_API_KEY"
SYSTEM_PROMPT = (
    "You design priority rules for power-plant unit commitment. "
    "Reply with exactly one expression in the requested language, wrapped in <program></program>."
)
_DELIMITED = re.compile(r"<program>(.*?)</program>", re.DOTALL)


class SamplerError(RuntimeError):
    """A sampler backend failed after exhausting its retries."""


class LlmConfigError(ValueError):
    """LLM sampler configuration is incomplete (for example a missing API key)."""


@dataclass(frozen=True)
class Prompt:
    text: str
    programs: tuple[str, ...]
    island: int = 0

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Sample:
    source: str
    sampling_time: float
    attempts: int = 1


class Sampler(Protocol):
    name: str

    def sample(self, prompt: Prompt, rng: np.random.Generator) -> Sample: ...


def extract_program(text: str) -> str:
    m = _DELIMITED.search(text)
    return (m.group(1) if m else text).strip()


# --- offline mutation sampler -------------------------------------------------

MUTATIONS = ("scale_literal", "swap_feature", "wrap", "graft")


def _paths(node: Node, prefix: tuple[int, ...] = ()):
    yield prefix, node
    for k, child in enumerate(children(node)):
        yield from _paths(child, prefix + (k,))


def _rebuild(node: Node, kids: list[Node]) -> Node:
    if isinstance(node, Neg):
        return Neg(kids[0])
    if isinstance(node, BinOp):
        return BinOp(node.op, kids[0], kids[1])
    if isinstance(node, Call):
        return Call(node.func, tuple(kids))
    return node


def _replace(node: Node, path: tuple[int, ...], new: Node) -> Node:
    if not path:
        return new
    kids = list(children(node))
    kids[path[0]] = _replace(kids[path[0]], path[1:], new)
    return _rebuild(node, kids)


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


def _new_literal(rng: np.random.Generator) -> float:
    return float(f"{10 ** rng.uniform(-1.0, 3.0):.3g}")


def mutate(
    ast: Node,
    rng: np.random.Generator,
    op: str,
    donor: Node | None = None,
    feature: str | None = None,
) -> Node:
    """Apply one named mutation to ``ast``; raises ValueError if it does not apply."""
    nodes = list(_paths(ast))
    if op == "scale_literal":
        literals = [(p, n) for p, n in nodes if isinstance(n, Num)]
        if not literals:
            raise ValueError("no literal to scale")
        path, lit = _pick(rng, literals)
        value = float(f"{lit.value * rng.uniform(0.5, 2.0):.6g}")
        return _replace(ast, path, Num(value))
    if op == "swap_feature":
        idents = [(p, n) for p, n in nodes if isinstance(n, Var)]
        if not idents:
            raise ValueError("no feature identifier to swap")
        path, var = _pick(rng, idents)
        if feature is None:
            feature = _pick(rng, [f for f in FEATURES if f != var.name])
        return _replace(ast, path, Var(feature))
    if op == "wrap":
        path, sub = _pick(rng, nodes)
        func = _pick(rng, ("min", "max"))
        return _replace(ast, path, Call(func, (sub, Num(_new_literal(rng)))))
    if op == "graft":
        if donor is None:
            raise ValueError("crossover needs a second parent")
        path, _ = _pick(rng, nodes)
        _, piece = _pick(rng, list(_paths(donor)))
        return _replace(ast, path, piece)
    raise ValueError(f"unknown mutation {op!r}")


def mutation_sample(rng: np.random.Generator, parents: Sequence[str], attempts: int = 10) -> str:
    """One mutated child of a uniformly chosen parent, or that parent verbatim."""
    parsed: list[HeuristicProgram] = []
    for src in parents:
        try:
            parsed.append(parse(src))
        except ProgramParseError:
            continue
    if not parsed:
        raise SamplerError("mutation sampler needs at least one parseable parent")
    k = int(rng.integers(len(parsed)))
    parent = parsed[k]
    others = parsed[:k] + parsed[k + 1 :]
    for _ in range(attempts):
        ops = ["wrap"]
        if any(isinstance(n, Num) for _, n in _paths(parent.ast)):
            ops.append("scale_literal")
        if any(isinstance(n, Var) for _, n in _paths(parent.ast)):
            ops.append("swap_feature")
        if others:
            ops.append("graft")
        op = _pick(rng, ops)
        donor = _pick(rng, others).ast if op == "graft" else None
        child = mutate(parent.ast, rng, op, donor=donor)
        if node_count(child) > MAX_NODES:
            continue
        try:
            text = to_source(child)
            parse(text)
        except (ProgramParseError, ValueError):
            continue
        return text
    return parent.source


class MutationSampler:
    """Deterministic stand-in for the LLM: mutates the programs shown in the prompt."""

    name = "mutate"

    def sample(self, prompt: Prompt, rng: np.random.Generator) -> Sample:
        start = time.perf_counter()
        source = mutation_sample(rng, prompt.programs)
        return Sample(source, time.perf_counter() - start)


# --- LLM chat-completion sampler -----------------------------------------------


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str
    model: str
    temperature: float = 0.8
    max_tokens: int = 256
    timeout: float = 30.0
    retries: int = 2
    max_in_flight: int = 4
    api_key_env: str = API_KEY_ENV
    system_prompt: str = field(default=SYSTEM_PROMPT, repr=False)

    def __post_init__(self) -> None:
        if not self.timeout > 0:
            raise LlmConfigError("timeout must be > 0")
        if self.retries < 0:
            raise LlmConfigError("retries must be >= 0")
        if self.max_in_flight < 1:
            raise LlmConfigError("max_in_flight must be >= 1")
        if not self.endpoint:
            raise LlmConfigError("endpoint is required")

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise LlmConfigError(f"environment variable {self.api_key_env} is not set")
        return key


def llm_sample(config: LlmConfig, prompt: str, client: httpx.Client | None = None) -> Sample:
    """Send one chat-completion request, retrying transport, status and body errors."""
    key = config.api_key()
    url = config.endpoint.rstrip("/") + "/chat/completions"
    body = {
        "model": config.model,
        "messages": [
            {"role": "system", "content": config.system_prompt},
            {"role": "user", "content": prompt},
        ],
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }
    headers = {"Authorization": f"Bearer {key}"}
    own = client is None
    http = client or httpx.Client(timeout=config.timeout)
    start = time.perf_counter()
    last: Exception | None = None
    try:
        for attempt in range(1, config.retries + 2):
            try:
                resp = http.post(url, json=body, headers=headers, timeout=config.timeout)
                resp.raise_for_status()
                content = resp.json()["choices"][0]["message"]["content"]
                if not isinstance(content, str):
                    raise TypeError("message content is not text")
                return Sample(extract_program(content), time.perf_counter() - start, attempt)
            except httpx.HTTPStatusError as exc:
                last = exc
            except httpx.TransportError as exc:
                last = exc
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                last = exc
    finally:
        if own:
            http.close()
    raise SamplerError(f"LLM request failed after {config.retries + 1} attempt(s): {last!r}") from last


class LlmSampler:
    name = "llm"

    def __init__(self, config: LlmConfig):
        config.api_key()  # fail fast on a missing key
        self.config = config
        self._client = httpx.Client(timeout=config.timeout)
        self._slots = threading.BoundedSemaphore(config.max_in_flight)

    def sample(self, prompt: Prompt, rng: np.random.Generator) -> Sample:
        with self._slots:
            return llm_sample(self.config, prompt.text, self._client)

    def close(self) -> None:
        self._client.close()
