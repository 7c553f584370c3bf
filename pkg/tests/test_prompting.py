"""Prompt construction: shot selection, rendering, and prompt introspection."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vulnprompt.corpus import CodeSample
from vulnprompt.embedding import EmbeddingInput
from vulnprompt.labels import label_set
from vulnprompt.prompting import (
    PROMPT_STRATEGIES,
    PromptError,
    PromptSpec,
    Shot,
    ShotOrder,
    Strategy,
    extract_test_code,
    prompt_hash,
    render,
    select_random,
    select_retrieval,
    shot_label_lines,
)


def make_pool(n):
    return tuple(
        CodeSample(
            id=f"t{i:03d}",
            code=f"int f{i}() {{ return {i}; }}",
            truth=label_set(["CWE-119"] if i % 2 else ["CWE-120", "CWE-476"]),
        )
        for i in range(n)
    )


def make_shot(i=0, labels=("CWE-119",)):
    return Shot(code=f"int f{i}() {{ return {i}; }}", labels=label_set(labels))


def test_strategy_partition():
    assert Strategy.RETRIEVAL_LABELING not in PROMPT_STRATEGIES
    assert len(PROMPT_STRATEGIES) == 3


def test_spec_invariants():
    PromptSpec(strategy=Strategy.ZERO_SHOT, k=0, shots=(), test_code="int f();")
    with pytest.raises(PromptError, match="k=0"):
        PromptSpec(
            strategy=Strategy.ZERO_SHOT, k=1, shots=(make_shot(),), test_code="x"
        )
    with pytest.raises(PromptError, match="expected 2 shots"):
        PromptSpec(
            strategy=Strategy.RANDOM_FEW_SHOT, k=2, shots=(make_shot(),), test_code="x"
        )
    with pytest.raises(PromptError, match="does not build prompts"):
        PromptSpec(
            strategy=Strategy.RETRIEVAL_LABELING, k=1, shots=(make_shot(),), test_code="x"
        )


def test_shot_requires_labels():
    with pytest.raises(PromptError):
        Shot(code="int f();", labels=frozenset())


def test_select_random_deterministic():
    pool = make_pool(20)
    a = select_random(pool, 5, seed=3, test_id="q1")
    b = select_random(pool, 5, seed=3, test_id="q1")
    assert a == b


def test_select_random_distinct_shots():
    pool = make_pool(10)
    shots = select_random(pool, 10, seed=0, test_id="q")
    assert len(set(s.code for s in shots)) == 10
    assert sorted(s.code for s in shots) == sorted(s.code for s in pool)


def test_select_random_rejects_oversized_k():
    pool = make_pool(3)
    with pytest.raises(PromptError, match="pool of 3"):
        select_random(pool, 4, seed=0, test_id="q")


def test_select_random_seed_sensitivity():
    pool = make_pool(30)
    differs = any(
        select_random(pool, 3, seed=1, test_id=f"q{i}")
        != select_random(pool, 3, seed=2, test_id=f"q{i}")
        for i in range(100)
    )
    assert differs


def test_select_random_per_test_independence():
    pool = make_pool(30)
    draws = {
        test_id: select_random(pool, 3, seed=1, test_id=test_id)
        for test_id in ("a", "b", "c", "d")
    }
    assert len(set(draws.values())) > 1


def test_select_retrieval_maps_neighbors(hashed_backend, synthetic_corpus, synthetic_index):
    samples_by_id = synthetic_corpus.by_id()
    sample = synthetic_corpus.test[0]
    query = hashed_backend.embed(EmbeddingInput(code=sample.code))
    shots = select_retrieval(synthetic_index, query, 3, samples_by_id)
    assert len(shots) == 3
    from vulnprompt.vecindex import top_k

    neighbors = top_k(synthetic_index, query, 3)
    assert [s.code for s in shots] == [
        samples_by_id[n.sample_id].code for n in neighbors
    ]
    reversed_shots = select_retrieval(
        synthetic_index, query, 3, samples_by_id, order=ShotOrder.SIMILAR_LAST
    )
    assert list(reversed_shots) == list(shots[::-1])


def test_render_zero_shot_has_no_shot_blocks():
    spec = PromptSpec(
        strategy=Strategy.ZERO_SHOT, k=0, shots=(), test_code="int f() { return 0; }"
    )
    prompt = render(spec)
    assert "int f() { return 0; }" in prompt
    assert shot_label_lines(prompt) == []
    assert prompt.endswith("Vulnerabilities:")


def test_render_two_shot_blocks_in_order():
    shots = (make_shot(1, labels=("CWE-476", "CWE-119")), make_shot(2, labels=("CWE-120",)))
    spec = PromptSpec(
        strategy=Strategy.RANDOM_FEW_SHOT, k=2, shots=shots, test_code="int g();"
    )
    prompt = render(spec)
    assert shot_label_lines(prompt) == ["CWE-119, CWE-476", "CWE-120"]
    assert prompt.index("int f1()") < prompt.index("int f2()")


def test_render_deterministic():
    shots = (make_shot(1),)
    spec = PromptSpec(
        strategy=Strategy.RETRIEVAL_FEW_SHOT, k=1, shots=shots, test_code="int g();"
    )
    assert render(spec) == render(spec)


def test_render_sensitive_to_shot_order():
    a, b = make_shot(1), make_shot(2)
    one = render(
        PromptSpec(strategy=Strategy.RANDOM_FEW_SHOT, k=2, shots=(a, b), test_code="x")
    )
    two = render(
        PromptSpec(strategy=Strategy.RANDOM_FEW_SHOT, k=2, shots=(b, a), test_code="x")
    )
    assert one != two


def test_preamble_names_exactly_four_cwes():
    import re

    prompt = render(
        PromptSpec(strategy=Strategy.ZERO_SHOT, k=0, shots=(), test_code="int f();")
    )
    mentioned = set(re.findall(r"CWE-\d+", prompt))
    assert mentioned == {"CWE-119", "CWE-120", "CWE-469", "CWE-476"}


def test_extract_test_code_round_trip():
    code = "int f(char *p) {\n    return *p;\n}"
    spec = PromptSpec(
        strategy=Strategy.RANDOM_FEW_SHOT, k=1, shots=(make_shot(),), test_code=code
    )
    assert extract_test_code(render(spec)) == code


def test_extract_test_code_rejects_foreign_text():
    with pytest.raises(PromptError):
        extract_test_code("no stub here")


def test_prompt_hash_is_stable_hex():
    h = prompt_hash("abc")
    assert h == prompt_hash("abc")
    assert len(h) == 64
    assert h != prompt_hash("abd")


@given(st.text(min_size=1).filter(lambda s: s.strip() and "\nCode:\n" not in s))
def test_extract_round_trip_property(code):
    spec = PromptSpec(strategy=Strategy.ZERO_SHOT, k=0, shots=(), test_code=code)
    assert extract_test_code(render(spec)) == code
