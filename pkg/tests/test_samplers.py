import time

import numpy as np
import pytest
from stub_llm import StubLlm

from ucfun.lang import MAX_NODES, parse
from ucfun.samplers import (
    API_KEY_ENV,
    LlmConfig,
    LlmConfigError,
    LlmSampler,
    MutationSampler,
    Prompt,
    SamplerError,
    extract_program,
    llm_sample,
    mutate,
    mutation_sample,
)


def test_forced_feature_swap():
    child = mutate(parse("-cost_rate").ast, np.random.default_rng(0), "swap_feature", feature="p_max")
    assert parse("-p_max").ast == child


def test_mutation_deterministic():
    parents = ["-cost_rate + 0.1 * (p_max - p_min)", "is_on * 50 - cost_rate"]
    a = [mutation_sample(np.random.default_rng(s), parents) for s in range(30)]
    b = [mutation_sample(np.random.default_rng(s), parents) for s in range(30)]
    assert a == b
    assert len(set(a)) > 5
    for src in a:
        parse(src)


def test_mutation_respects_size_cap():
    big = "-" + " + ".join(["p_max"] * ((MAX_NODES + 1) // 2))
    other = " + ".join(["t"] * ((MAX_NODES + 1) // 2))
    assert parse(big).size == MAX_NODES
    for s in range(40):
        assert parse(mutation_sample(np.random.default_rng(s), [big, other])).size <= MAX_NODES


def test_mutation_ops_and_errors():
    rng = np.random.default_rng(1)
    ast = parse("2 * p_max").ast
    scaled = mutate(ast, rng, "scale_literal")
    assert scaled.left.value != 2 and scaled.right == ast.right
    assert mutate(ast, rng, "wrap") != ast
    assert mutate(ast, rng, "graft", donor=parse("t").ast) is not None
    with pytest.raises(ValueError):
        mutate(parse("p_max").ast, rng, "scale_literal")
    with pytest.raises(ValueError):
        mutate(ast, rng, "graft")
    with pytest.raises(SamplerError):
        mutation_sample(rng, ["min("])


def test_mutation_sampler_contract():
    s = MutationSampler()
    out = s.sample(Prompt("x", ("-cost_rate",)), np.random.default_rng(3))
    assert out.sampling_time >= 0 and parse(out.source)


def test_extract_program():
    assert extract_program("blah <program> -cost_rate </program> tail") == "-cost_rate"
    assert extract_program("  p_max \n") == "p_max"


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv(API_KEY_ENV, "test-key")


def test_stub_delimiter_extraction(api_key):
    with StubLlm([(200, "Sure!\n<program>-cost_rate</program>")]) as stub:
        out = llm_sample(LlmConfig(stub.url, "m", retries=0), "prompt")
    assert out.source == "-cost_rate" and out.attempts == 1
    req = stub.requests[0]
    assert req["path"] == "/v1/chat/completions" and req["auth"] == "Bearer test-key"
    assert req["body"]["model"] == "m" and req["body"]["messages"][-1] == {"role": "user", "content": "prompt"}


def test_stub_retry_then_success(api_key):
    with StubLlm([(500, "boom"), (500, "boom"), (200, "<program>p_max</program>")]) as stub:
        out = llm_sample(LlmConfig(stub.url, "m", retries=2), "prompt")
    assert out.source == "p_max" and out.attempts == 3  # two retries
    assert len(stub.requests) == 3


def test_stub_retry_then_fail(api_key):
    with StubLlm([(500, "a"), (503, "b")]) as stub:
        with pytest.raises(SamplerError, match="2 attempt"):
            llm_sample(LlmConfig(stub.url, "m", retries=1), "prompt")
    assert len(stub.requests) == 2


def test_stub_timeout(api_key):
    with StubLlm([("sleep", 1.0, "x")] * 3) as stub:
        start = time.perf_counter()
        with pytest.raises(SamplerError, match="Timeout"):
            llm_sample(LlmConfig(stub.url, "m", timeout=0.2, retries=1), "prompt")
        assert time.perf_counter() - start < 2.0
    assert len(stub.requests) == 2


def test_malformed_body_is_retried(api_key):
    with StubLlm([(200, None), (200, "<program>t</program>")]) as stub:
        assert llm_sample(LlmConfig(stub.url, "m", retries=1), "p").source == "t"


def test_missing_key(monkeypatch):
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    with pytest.raises(LlmConfigError, match=API_KEY_ENV):
        LlmSampler(LlmConfig("http://127.0.0.1:9", "m"))


def test_bad_config():
    with pytest.raises(LlmConfigError):
        LlmConfig("http://x", "m", timeout=0)
    with pytest.raises(LlmConfigError):
        LlmConfig("", "m")


def test_llm_sampler_uses_prompt_text(api_key):
    with StubLlm([]) as stub:
        s = LlmSampler(LlmConfig(stub.url, "m", max_in_flight=2))
        try:
            out = s.sample(Prompt("hello", ("-cost_rate",)), np.random.default_rng(0))
        finally:
            s.close()
    assert out.source == "-cost_rate"
    assert stub.requests[0]["body"]["messages"][-1]["content"] == "hello"
