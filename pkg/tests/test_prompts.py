import json
from pathlib import Path

import pytest

from ttagate.augment.prompts import (
    build_icr_prompt,
    build_paraphrase_prompt,
    extract_rewrite,
    fill_placeholders,
    load_template,
)
from ttagate.clients.http import fill_task_prompt
from ttagate.errors import EmptyGeneration, NoExemplars
from ttagate.exemplars import Exemplar, ExemplarSet
from ttagate.tasks import builtin_task

GOLDEN = Path(__file__).parent / "golden"
FIXTURES = json.loads((GOLDEN / "fixtures.json").read_text(encoding="utf-8"))


@pytest.mark.parametrize("i", range(3))
def test_paraphrase_prompt_matches_golden(i):
    expected = (GOLDEN / f"paraphrase_{i}.txt").read_bytes()
    assert build_paraphrase_prompt(FIXTURES["inputs"][i]).encode("utf-8") == expected


@pytest.mark.parametrize("i", range(3))
def test_icr_prompt_matches_golden(i):
    expected = (GOLDEN / f"icr_{i}.txt").read_bytes()
    got = build_icr_prompt(FIXTURES["inputs"][i], FIXTURES["exemplars"])
    assert got.encode("utf-8") == expected


def test_classification_prompt_matches_golden():
    shots = ExemplarSet((Exemplar("loved every minute", 1), Exemplar("it was fine I guess", 2),
                         Exemplar("total waste of money", 0)), seed=42)
    got = fill_task_prompt(builtin_task("sentiment").prompt_template, shots.few_shot_block(),
                           FIXTURES["inputs"][0])
    assert got == (GOLDEN / "classify_sentiment_0.txt").read_text(encoding="utf-8")


def test_icr_needs_exemplars():
    with pytest.raises(NoExemplars):
        build_icr_prompt("x", [])


def test_placeholder_text_inside_input_is_not_expanded():
    # single-pass substitution: an input that contains a placeholder stays literal
    out = build_icr_prompt("say <style_transfer_exemplars>", ["ex one"])
    assert 'Now paraphrase ```"say <style_transfer_exemplars>"```' in out
    assert out.count("ex one") == 1


def test_fill_placeholders_is_single_pass():
    assert fill_placeholders("<a> <b>", {"<a>": "<b>", "<b>": "B"}) == "<b> B"


def test_templates_have_their_placeholders_once():
    assert load_template("paraphrase").body.count("<style_input>") == 1
    icr = load_template("icr").body
    assert icr.count("<style_input>") == 1 and icr.count("<style_transfer_exemplars>") == 1


@pytest.mark.parametrize("raw, expected", [
    ("{{{It was great}}}", "It was great"),
    ('```"Nice film"```', "Nice film"),
    ("It was great}}}", "It was great"),
    ("Paraphrased Text: ```A fine day```", "A fine day"),
    ('Paraphrased Input Text: {{{"Quiet room."}}} trailing chatter', "Quiet room."),
    ("  plain reply  ", "plain reply"),
])
def test_extract_rewrite_examples(raw, expected):
    assert extract_rewrite(raw) == expected


@pytest.mark.parametrize("raw", ["", "   ", "{{{}}}", '``` "" ```'])
def test_extract_rewrite_empty(raw):
    with pytest.raises(EmptyGeneration):
        extract_rewrite(raw)
