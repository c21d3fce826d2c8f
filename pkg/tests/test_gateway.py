import json
import threading

import numpy as np
import pytest

from ambirag.errors import BackendUnavailable, BudgetExceeded, FixtureMiss, MissingSlot, UnparsableVerdict
from ambirag.gateway import (
    DISAMBIGUATIONS_MARKER,
    TEMPLATES,
    CallKey,
    CompletionCache,
    CompletionParams,
    Demo,
    Gateway,
    HttpOpenAiCompatible,
    Pricing,
    ScriptedMock,
    TemplateId,
    format_interpretations,
    format_pairs,
    load_demo_bank,
    parse_ambiguity,
    parse_disambig_pairs,
    parse_interpretations,
    parse_yes_no,
    prompt_hash,
    render_prompt,
    select_demos,
)
from ambirag.gateway.stub import StubServer
from ambirag.types import AmbiguityType, DisambigPair, VerdictLabel

PARAMS = CompletionParams()


class AxisEmbedder:
    """Maps a few known words to unit axes so similarities are easy to reason about."""

    AXES = {"football": 0, "film": 1, "river": 2}

    def embed(self, text):
        v = np.zeros(3)
        for word in text.lower().split():
            if word in self.AXES:
                v[self.AXES[word]] += 1.0
        return v


# ---------------------------------------------------------------- demos

BANK = [
    Demo("film one", "E1"),
    Demo("football one", "E2"),
    Demo("football film", "E3"),
    Demo("river", "E4"),
    Demo("football two", "E5"),
]


@pytest.mark.parametrize("question, k, expected", [
    ("football", 2, ["E2", "E5"]),
    ("film", 1, ["E1"]),
    ("football film", 1, ["E3"]),
    ("river", 3, ["E4", "E1", "E2"]),
    ("nothing relevant", 2, ["E1", "E2"]),
])
def test_select_demos(question, k, expected):
    got = select_demos(question, BANK, k, embedder=AxisEmbedder())
    assert [d.exemplar_text for d in got] == expected


def test_select_demos_edges():
    assert select_demos("football", BANK, 0, embedder=AxisEmbedder()) == []
    assert select_demos("football", [], 3) == []
    assert len(select_demos("football", BANK, 50, embedder=AxisEmbedder())) == len(BANK)


def test_packaged_demo_bank():
    bank = load_demo_bank()
    assert bank[TemplateId.VERIFY] == []
    for t in (TemplateId.AMBIGUITY, TemplateId.PSEUDO):
        assert len(bank[t]) == 5


# ---------------------------------------------------------------- rendering

def test_render_verify_prompt():
    out = render_prompt(TEMPLATES[TemplateId.VERIFY], {"question": "Who?", "passages": "[1] T | body"})
    assert "Please answer with Yes or No." in out
    assert out.endswith("Response:\n")
    assert "Passage:\n[1] T | body" in out
    assert out == render_prompt(TEMPLATES[TemplateId.VERIFY], {"question": "Who?", "passages": "[1] T | body"})


def test_render_pseudo_prompt_has_marker_and_demos():
    demos = [Demo("q", "EXAMPLE ONE"), Demo("q", "EXAMPLE TWO")]
    out = render_prompt(TEMPLATES[TemplateId.PSEUDO], {"question": "Q?", "reason": "R."}, demos)
    assert out.rstrip().endswith(DISAMBIGUATIONS_MARKER)
    assert out.index("EXAMPLE ONE") < out.index("EXAMPLE TWO") < out.index("##Question: Q?")


def test_render_ignores_demos_beyond_slots():
    out = render_prompt(TEMPLATES[TemplateId.VERIFY], {"question": "Q", "passages": "P"}, [Demo("q", "DEMO")])
    assert "DEMO" not in out


def test_render_optional_slot():
    base = {"passages": "ctx", "question": "Q?"}
    without = render_prompt(TEMPLATES[TemplateId.GENERATE], base)
    with_pairs = render_prompt(TEMPLATES[TemplateId.GENERATE], {**base, "pairs": "DQ 1: a\nDA 1: b"})
    assert "Disambiguations:" not in without
    assert "Disambiguations:\nDQ 1: a" in with_pairs


def test_render_missing_slot():
    with pytest.raises(MissingSlot) as info:
        render_prompt(TEMPLATES[TemplateId.CLOSED_BOOK], {})
    assert "question" in str(info.value)


# ---------------------------------------------------------------- parsers

def test_parse_interpretations_example():
    text = (
        "##Disambiguations:\n"
        "1: Who has scored the most goals in international men's soccer?\n"
        "2: Who has scored the most goals in international women's soccer?\n"
    )
    got = parse_interpretations(text)
    assert [i.text for i in got] == [
        "Who has scored the most goals in international men's soccer?",
        "Who has scored the most goals in international women's soccer?",
    ]
    assert [i.index for i in got] == [0, 1]


def test_parse_interpretations_lenient():
    warnings = []
    got = parse_interpretations("preamble\n##Disambiguations:\n1) A?\n\nnoise\n2. B?\n", warnings)
    assert [i.text for i in got] == ["A?", "B?"]
    assert len(warnings) == 1
    assert parse_interpretations("1: no marker") == []


def test_format_interpretations_roundtrip():
    qs = ["First?", "Second one?"]
    assert [i.text for i in parse_interpretations(format_interpretations(qs))] == qs


@pytest.mark.parametrize("text, label", [
    ("Yes", VerdictLabel.YES),
    ("yes.", VerdictLabel.YES),
    ("  No, it does not.", VerdictLabel.NO),
    ("**No**", VerdictLabel.NO),
])
def test_parse_yes_no(text, label):
    assert parse_yes_no(text) is label


@pytest.mark.parametrize("text", ["", "Possibly", "Nope", "Yesterday"])
def test_parse_yes_no_rejects(text):
    with pytest.raises(UnparsableVerdict):
        parse_yes_no(text)


def test_parse_pairs_example():
    text = (
        "DQ 1: Who played Ron Weasley in the films?\n"
        "DA 1: Rupert Grint\n"
        "DQ 2: Who played the Weasley twins\n"
        "in the films?\n"
        "DA 2: James Phelps; Oliver Phelps\n"
        "DQ 3: dangling\n"
        "Answer: long text\nDQ 4: ignored\nDA 4: x\n"
    )
    warnings = []
    pairs = parse_disambig_pairs(text, warnings)
    assert pairs == [
        DisambigPair("Who played Ron Weasley in the films?", ("Rupert Grint",)),
        DisambigPair("Who played the Weasley twins in the films?", ("James Phelps", "Oliver Phelps")),
    ]
    assert any("DQ 3" in w for w in warnings)


def test_format_pairs_roundtrip():
    pairs = [DisambigPair("A?", ("x",)), DisambigPair("B?", ("y", "z"))]
    assert parse_disambig_pairs(format_pairs(pairs)) == pairs


def test_parse_ambiguity_examples():
    a = parse_ambiguity('##Reason: The subject "Who" may refer to men or women. ##Answer: [AmbSub]')
    assert a.types == (AmbiguityType.AMB_SUB,)
    assert a.reason.startswith("The subject")
    b = parse_ambiguity("##Reason: two things\n##Answer: [AmbSub, AmbTime] [Bogus]")
    assert b.types == (AmbiguityType.AMB_SUB, AmbiguityType.AMB_TIME)
    c = parse_ambiguity("##Reason: clear ##Answer: [N/A]")
    assert c.types == (AmbiguityType.NA,)
    warnings = []
    d = parse_ambiguity("free text only", warnings)
    assert d.types == (AmbiguityType.NA,) and d.reason == "free text only" and warnings


# ---------------------------------------------------------------- backends

def test_scripted_mock_lookup_order():
    mock = ScriptedMock({"q1/Iv/0": "exact", "q1/Iv/*": "question", "*/Iv/*": "global"})
    assert mock.complete("p", PARAMS, CallKey("q1", "Iv", 0)).text == "exact"
    assert mock.complete("p", PARAMS, CallKey("q1", "Iv", 3)).text == "question"
    assert mock.complete("p", PARAMS, CallKey("q2", "Iv", 0)).text == "global"
    with pytest.raises(FixtureMiss) as info:
        mock.complete("p", PARAMS, CallKey("q2", "Ig", 0))
    assert "q2/Ig/0" in str(info.value)


def test_scripted_mock_strict():
    mock = ScriptedMock({prompt_hash("hello"): "hi"}, strict=True)
    assert mock.complete("hello", PARAMS, CallKey("q", "Ia", 0)).text == "hi"
    with pytest.raises(FixtureMiss):
        mock.complete("other", PARAMS, CallKey("q", "Ia", 0))


def test_scripted_mock_file_validation(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"k": 1}))
    with pytest.raises(ValueError):
        ScriptedMock.from_file(bad)


def test_params_validation():
    with pytest.raises(ValueError):
        CompletionParams(max_tokens=0)
    with pytest.raises(ValueError):
        CompletionParams(top_p=1.5)


def test_http_backend_roundtrip(monkeypatch):
    monkeypatch.setenv("AMBIRAG_TEST_KEY", "secret")
    with StubServer(lambda p: f"echo {len(p.split())}") as stub:
        backend = HttpOpenAiCompatible(stub.url, api_key_env="AMBIRAG_TEST_KEY")
        reply = backend.complete("three word prompt", CompletionParams(model_name="m1"), None)
    assert reply.text == "echo 3"
    assert (reply.input_tokens, reply.output_tokens) == (10, 3)
    req = stub.requests[0]
    assert req["path"] == "/v1/chat/completions"
    assert req["auth"] == "Bearer secret"
    assert req["body"]["model"] == "m1"
    assert req["body"]["messages"] == [{"role": "user", "content": "three word prompt"}]
    assert req["body"]["temperature"] == 0.3


def test_http_backend_error_status():
    with StubServer(status=401) as stub:
        backend = HttpOpenAiCompatible(stub.url, retries=0)
        with pytest.raises(BackendUnavailable):
            backend.complete("x", PARAMS, None)


def test_http_backend_retries_then_fails():
    with StubServer(status=503) as stub:
        backend = HttpOpenAiCompatible(stub.url, retries=1)
        with pytest.raises(BackendUnavailable):
            backend.complete("x", PARAMS, None)
    assert len(stub.requests) == 2


def test_gateway_counts_tokens_when_unreported():
    with StubServer("two words", report_usage=False) as stub:
        gw = Gateway(HttpOpenAiCompatible(stub.url), pricing=Pricing(1.0, 2.0))
        text, usage = gw.complete("a b c d", PARAMS)
    assert text == "two words"
    assert (usage.input_tokens, usage.output_tokens, usage.llm_calls) == (4, 2, 1)
    assert usage.cost_estimate == pytest.approx(0.004 + 0.004)


# ---------------------------------------------------------------- cache and budget

def test_cache_hit_reports_zero_calls(tmp_path):
    backend = ScriptedMock({"*/Ia/*": "analysis text"})
    gw = Gateway(backend, CompletionCache(tmp_path), pricing=Pricing(1.0, 1.0))
    key = CallKey("q", "Ia", 0)
    _, first = gw.complete("prompt words here", PARAMS, key)
    text, second = gw.complete("prompt words here", PARAMS, key)
    assert text == "analysis text"
    assert first.llm_calls == 1 and second.llm_calls == 0
    assert second.total_tokens == first.total_tokens
    assert second.cost_estimate == 0.0
    reopened = CompletionCache(tmp_path)
    assert reopened.stats() == {"entries": 1, "total_tokens": first.total_tokens}


def test_cache_bypass_and_param_sensitivity(tmp_path):
    gw = Gateway(ScriptedMock({"*/Ia/*": "x"}), CompletionCache(tmp_path))
    key = CallKey("q", "Ia", 0)
    gw.complete("p", PARAMS, key)
    assert gw.complete("p", CompletionParams(temperature=0.0), key)[1].llm_calls == 1
    assert gw.complete("p", PARAMS, key, use_cache=False)[1].llm_calls == 1


def test_cache_skips_torn_lines_and_clears(tmp_path):
    cache = CompletionCache(tmp_path)
    gw = Gateway(ScriptedMock({"*/Ia/*": "x"}), cache)
    gw.complete("p", PARAMS, CallKey("q", "Ia", 0))
    with open(tmp_path / "completions.jsonl", "a") as fh:
        fh.write('{"key": "trunc')
    assert len(CompletionCache(tmp_path)) == 1
    cache.clear()
    assert CompletionCache(tmp_path).stats()["entries"] == 0


def test_cache_concurrent_writers(tmp_path):
    cache = CompletionCache(tmp_path)
    gw = Gateway(ScriptedMock({"*/Ia/*": "x"}), cache)

    def work(n):
        for i in range(20):
            gw.complete(f"prompt {n} {i}", PARAMS, CallKey(f"q{n}", "Ia", i))

    threads = [threading.Thread(target=work, args=(n,)) for n in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert CompletionCache(tmp_path).stats()["entries"] == 80


def test_budget_enforced_per_question():
    gw = Gateway(ScriptedMock({"*/Iv/*": "Yes"}), call_budget=2)
    for i in range(2):
        gw.complete("p", PARAMS, CallKey("q1", "Iv", i))
    with pytest.raises(BudgetExceeded):
        gw.complete("p", PARAMS, CallKey("q1", "Iv", 2))
    gw.complete("p", PARAMS, CallKey("q2", "Iv", 0))
    gw.reset_budget("q1")
    gw.complete("p", PARAMS, CallKey("q1", "Iv", 0))
    assert len(gw.calls_for("q1", "Iv")) == 3


def test_empty_prompt_rejected():
    with pytest.raises(ValueError):
        Gateway(ScriptedMock({})).complete("  ", PARAMS)
