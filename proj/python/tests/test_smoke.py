import json
import math
import pathlib

import pytest

import autograph_rl as ag

TOY = pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "toy"


def test_parse_triples_counts_malformed():
    triples, bad = ag.parse_triples('noise [{"subject": "A", "relation": "r", "object": "B"}, {"subject": ""}]')
    assert triples == [("A", "r", "B")]
    assert bad == 1
    with pytest.raises(ag.AutographError):
        ag.parse_triples("no list here")


def test_repetition_and_cap_boundary():
    ts = [(f"s{i}", "r", "o") for i in range(7)] + [(f"s{i}", "r", "o") for i in range(3)]
    p = ag.repetition_penalty(ts)
    assert p == 0.3
    assert ag.compose_reward(1.0, p) == pytest.approx(0.7)
    assert ag.compose_reward(1.0, math.nextafter(0.3, 1.0)) == 0.0


def test_indexing_reward_matches_set_intersection():
    ranked = ["p3", "p1", "p4", "p2"]
    gold = {"p4", "p2"}
    for k in range(1, 6):
        want = len(set(ranked[:k]) & gold) / len(gold)
        assert ag.indexing_reward(ranked, gold, k) == want


def test_advantages_and_objective():
    adv = ag.group_advantages([1.0, 0.5, 0.0])
    assert adv[0] == pytest.approx(math.sqrt(1.5))
    assert sum(adv) == pytest.approx(0.0, abs=1e-12)
    old = [[-1.0, -2.0], [-0.5]]
    assert ag.grpo_objective([1.0, 0.0], old, old) == 0.0
    new = [[x + math.log(1.5) for x in seq] for seq in old]
    assert ag.grpo_objective([1.0, 0.0], new, old) == pytest.approx((1.2 - 1.5) / 2)


def test_answer_f1():
    assert ag.answer_f1("The Clarence Brown", "clarence brown") == 1.0
    assert ag.answer_f1("unknown", "1987") == 0.0


def test_scorer_matches_fixture_rewards():
    scorer = ag.Scorer({"llm": {"kind": "scripted", "script": str(TOY / "script.json")}})
    status, body = scorer.score(json.loads((TOY / "score_indexing.json").read_text()))
    assert status == 200
    assert [g["reward"] for g in body["per_generation"]] == [1.0, 0.5, 0.0]
    status, body = scorer.score((TOY / "score_carrying.json").read_text())
    assert status == 200
    assert body["advantages"] == pytest.approx([1.0, -1.0])
    status, body = scorer.score({"query": "q"})
    assert status == 400


def test_scorer_rejects_unknown_config_keys():
    with pytest.raises(ag.AutographError):
        ag.Scorer({"nonsense": 1})
