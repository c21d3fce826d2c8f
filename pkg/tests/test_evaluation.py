import itertools
import json
import math
import random
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from ambirag.errors import IdMismatch, NegativeInput
from ambirag.evaluation import (
    coverage_label,
    disambig_f1,
    dr_score,
    evaluate_run,
    load_dataset,
    mrecall_at_k,
    predicted_short_answers,
    render_table,
    rouge_l,
    short_f1,
)
from ambirag.records import ErrorRecord
from ambirag.types import CoverageLabel, DisambigPair, GeneratedResponse, Passage, Question, Route, tokenize
from ambirag.verify_adapt import answer

from reported_dr import INCONSISTENT, ROWS


def brute_lcs(a, b):
    """Longest common subsequence by trying every subsequence of the shorter list."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)

    def is_subseq(sub, seq):
        it = iter(seq)
        return all(tok in it for tok in sub)

    for size in range(len(short), 0, -1):
        for idx in itertools.combinations(range(len(short)), size):
            if is_subseq([short[i] for i in idx], long_):
                return size
    return 0


def rouge_oracle(h, r):
    ht, rt = tokenize(h), tokenize(r)
    lcs = brute_lcs(ht, rt)
    if not lcs:
        return 0.0
    p, rec = lcs / len(ht), lcs / len(rt)
    return 2 * p * rec / (p + rec)


def test_rouge_l_matches_brute_force_sample():
    rng = random.Random(3)
    for _ in range(30):
        h = " ".join(rng.choices("abcde", k=rng.randint(1, 8)))
        r = " ".join(rng.choices("abcde", k=rng.randint(1, 8)))
        assert rouge_l(h, r) == rouge_oracle(h, r)


@pytest.mark.parametrize("h, r, expected", [
    ("the cat sat on the mat", "the cat sat on the mat", 1.0),
    ("police killed the gunman", "the gunman kill police", 1 / 3),
    ("", "something", 0.0),
    ("x y", "z w", 0.0),
])
def test_rouge_l_examples(h, r, expected):
    assert rouge_l(h, r) == pytest.approx(expected)


@given(st.text(alphabet="abc ", max_size=30), st.text(alphabet="abc ", max_size=30))
def test_rouge_l_bounded_and_symmetric(h, r):
    v = rouge_l(h, r)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(rouge_l(r, h))


@pytest.mark.parametrize("name, rl, df1, dr", [r for r in ROWS if r[0] not in INCONSISTENT])
def test_dr_reproduces_reported_rows(name, rl, df1, dr):
    assert abs(dr_score(rl, df1) - dr) <= 0.05


def test_dr_properties():
    assert dr_score(0.5, 0.5) == 0.5
    assert dr_score(0.0, 0.9) == 0.0
    assert dr_score(38.8, 34.0) == pytest.approx(36.32, abs=0.01)
    with pytest.raises(NegativeInput):
        dr_score(-0.1, 0.5)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5))
def test_dr_monotone(rl, df1, bump):
    assert dr_score(min(1.0, rl + bump), df1) >= dr_score(rl, df1)
    assert min(rl, df1) - 1e-12 <= dr_score(rl, df1) <= max(rl, df1) + 1e-12


def short_f1_oracle(pred, gold):
    p, g = set(pred), set(gold)
    tp = len(p & g)
    if tp == 0:
        return 0.0
    precision, recall = tp / len(p), tp / len(g)
    return 2 * precision * recall / (precision + recall)


def test_short_f1_random_cases():
    rng = random.Random(5)
    pool = ["alpha", "beta", "gamma", "delta", "eps"]
    for _ in range(50):
        pred = rng.sample(pool, rng.randint(0, 4))
        gold = rng.sample(pool, rng.randint(1, 4))
        assert short_f1(pred, gold) == pytest.approx(short_f1_oracle(pred, gold))


def test_short_f1_normalizes():
    assert short_f1(["The United States!"], ["united states"]) == 1.0
    with pytest.raises(ValueError):
        short_f1(["x"], [])


P = [Passage("a", "Alpha title", "Bell patented it."), Passage("b", "", "Meucci built one; also Reis.")]


@pytest.mark.parametrize("answers, k, hit, label", [
    (["Bell", "Meucci"], 5, 1, CoverageLabel.FULLY_COVER),      # all answers found
    (["Bell", "Meucci", "Edison"], 2, 1, CoverageLabel.PARTIALLY_COVER),  # at least k found
    (["Bell", "Meucci", "Edison"], 3, 0, CoverageLabel.PARTIALLY_COVER),
    (["Edison"], 1, 0, CoverageLabel.NOT_COVER),
    ([("Edison", "Reis")], 5, 1, CoverageLabel.FULLY_COVER),     # alias group
    (["alpha title"], 1, 1, CoverageLabel.FULLY_COVER),          # titles count
    (["patented it meucci"], 1, 0, CoverageLabel.NOT_COVER),     # no match across passages
    (["Bell", "Edison", "Tesla", "Reis"], 2, 1, CoverageLabel.PARTIALLY_COVER),
    (["Bell", "Edison", "Tesla", "Marconi"], 2, 0, CoverageLabel.PARTIALLY_COVER),
])
def test_mrecall_and_coverage(answers, k, hit, label):
    assert mrecall_at_k(P, answers, k) == hit
    assert coverage_label(P, answers) is label


def test_mrecall_empty_passages_and_bad_args():
    assert mrecall_at_k([], ["x"], 1) == 0
    assert coverage_label([], ["x"]) is CoverageLabel.NOT_COVER
    with pytest.raises(ValueError):
        mrecall_at_k(P, [], 1)
    with pytest.raises(ValueError):
        mrecall_at_k(P, ["x"], 0)


GOLD = [DisambigPair("Men?", ("Cristiano Ronaldo",)), DisambigPair("Women?", ("Christine Sinclair",))]


@pytest.mark.parametrize("text, pairs, expected", [
    ("Ronaldo leads the men; Christine Sinclair the women.", 2, 2 * 0.5 * 0.5 / 1.0),
    ("Cristiano Ronaldo and Christine Sinclair.", 2, 1.0),
    ("Cristiano Ronaldo and Christine Sinclair.", 0, 1.0),
    ("Cristiano Ronaldo.", 4, 2 * 0.25 * 0.5 / 0.75),
    ("Nobody knows.", 0, 0.0),
])
def test_disambig_f1(text, pairs, expected):
    claimed = tuple(DisambigPair(f"Q{i}?", ("x",)) for i in range(pairs))
    route = Route.RAG_GENERATION if pairs else Route.CLOSED_BOOK
    assert disambig_f1(GeneratedResponse(text, route, claimed), GOLD) == pytest.approx(expected)


def test_predicted_short_answers(dataset):
    gold = dataset["q3"]
    rag = GeneratedResponse("x", Route.RAG_GENERATION, (DisambigPair("a?", ("deglutition",)),))
    assert predicted_short_answers(rag, gold) == ["Swallowing"]
    cb = GeneratedResponse("It is called peristalsis.", Route.CLOSED_BOOK)
    assert predicted_short_answers(cb, gold) == ["Peristalsis"]


def test_load_dataset_errors(tmp_path):
    bad = tmp_path / "d.jsonl"
    bad.write_text('{"id": "a", "question": "x?", "pairs": [], "long_answer": ""}\n'
                   '{"id": "a", "question": "y?", "pairs": [], "long_answer": ""}\n')
    with pytest.raises(ValueError):
        load_dataset(bad)


@pytest.fixture(scope="module")
def fixture_records(index, dataset):
    import json as _json
    from ambirag.config import PipelineConfig
    from ambirag.gateway import Gateway, ScriptedMock
    from conftest import SCRIPT
    cfg = PipelineConfig.single(Gateway(ScriptedMock(_json.loads(SCRIPT.read_text()))))
    return [answer(g.question, index, cfg) for g in dataset.values()]


def test_evaluate_run_empty(dataset):
    report = evaluate_run([], list(dataset.values()))
    assert report["n_scored"] == 0 and report["n_missing"] == 8
    assert report["means"]["rouge_l"] is None
    assert "rouge_l" in report["means"]["undefined"]
    assert "-" in render_table(report)


def test_evaluate_run_perfect(fixture_records, dataset):
    perfect = []
    for rec in fixture_records:
        gold = dataset[rec.question.id]
        resp = GeneratedResponse(gold.long_answer, Route.RAG_GENERATION, tuple(gold.gold_pairs))
        perfect.append(replace(rec, response=resp))
    report = evaluate_run(perfect, list(dataset.values()))
    means = report["means"]
    assert means["rouge_l"] == 1.0
    assert means["disambig_f1"] == 1.0
    assert means["short_f1"] == 1.0
    assert means["dr_of_means"] == 1.0


def test_evaluate_run_counts_errors(fixture_records, dataset):
    recs = list(fixture_records[:-1]) + [ErrorRecord(fixture_records[-1].question, "FixtureMiss", "q8/Ia/0")]
    report = evaluate_run(recs, list(dataset.values()))
    assert (report["n_records"], report["n_scored"], report["n_errors"]) == (8, 7, 1)
    assert report["error_ids"] == ["q8"]


def test_evaluate_run_id_mismatch(fixture_records, dataset):
    with pytest.raises(IdMismatch):
        evaluate_run([replace(fixture_records[0], question=Question("zz", "x?"))], list(dataset.values()))
    with pytest.raises(IdMismatch):
        evaluate_run([fixture_records[0], fixture_records[0]], list(dataset.values()))


def test_evaluate_run_breakdowns(fixture_records, dataset):
    report = evaluate_run(fixture_records, list(dataset.values()))
    assert report["by_route"]["ClosedBook"]["metrics"]["n"] == 1
    assert sum(b["count"] for b in report["coverage"].values()) == 8
    assert report["per_question"][3]["route"] == "ClosedBook"
    rl, df1 = report["means"]["rouge_l"], report["means"]["disambig_f1"]
    assert report["means"]["dr_of_means"] == pytest.approx(math.sqrt(rl * df1))
    json.dumps(report)
