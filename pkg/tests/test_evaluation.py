import random

import pytest
from hypothesis import given, strategies as st

from vqaexplain.errors import DataError, SchemaError
from vqaexplain.evaluation import (
    QaMeta,
    RatingRecord,
    compare_systems,
    first_relevant_position,
    num_relevant_top5,
    parse_meta,
    parse_ratings,
    render_table,
    results_from_tallies,
    weighted_explanation_score,
)

from conftest import fixture_text


def recs(relevances, qa="q", system="s"):
    return [RatingRecord(qa, system, i, r) for i, r in enumerate(relevances, start=1)]


@pytest.mark.parametrize("rels,expl,expected", [
    ([5, 0, 0, 0, 0], 5, 25.0),
    ([0, 0, 0], 4, 0.0),
    ([4, -2, 1], 3, 10.0),
])
def test_explanation_score(rels, expl, expected):
    assert weighted_explanation_score(recs(rels), QaMeta("q", expl)) == expected


def test_explanation_score_needs_meta():
    with pytest.raises(DataError):
        weighted_explanation_score(recs([1]), {"other": QaMeta("other", 3)})
    assert weighted_explanation_score(recs([1]), {"q": QaMeta("q", 3)}) == 3.0


@pytest.mark.parametrize("rels,expected", [([-1, 2, 5], 2), ([-1, -1], None), ([1, 0], 1)])
def test_first_relevant_position(rels, expected):
    assert first_relevant_position(recs(rels)) == expected


@pytest.mark.parametrize("rels,expected", [([1] * 5, 5), ([0] * 5, 0), ([3, -2, 1], 2)])
def test_num_relevant(rels, expected):
    assert num_relevant_top5(recs(rels)) == expected


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5), st.integers(0, 4),
       st.integers(1, 5))
def test_score_monotone_and_linear(rels, i, expl):
    i %= len(rels)
    base = weighted_explanation_score(recs(rels), QaMeta("q", expl))
    if rels[i] < 5:
        bumped = rels[:i] + [rels[i] + 1] + rels[i + 1:]
        assert weighted_explanation_score(recs(bumped), QaMeta("q", expl)) > base
    unit = weighted_explanation_score(recs(rels), QaMeta("q", 1))
    assert base == pytest.approx(expl * unit, rel=1e-12, abs=1e-12)


def hand_fixture():
    return parse_ratings(fixture_text("ratings.csv")), parse_meta(fixture_text("meta.csv"))


# per question, full vs baseline (explanation score / position / number):
#   q1  6.33 vs 4     1 vs 2       2 vs 1   -> win  win  win
#   q2  -10 vs -2     none vs 1    0 vs 1   -> loss loss loss
#   q3  5 vs 3.75     2 vs 1       2 vs 2   -> win  loss tie
HAND_TALLY = {"explanation_score": (2, 1, 0), "position": (1, 2, 0), "number": (1, 1, 1)}


def test_hand_tallied_comparison():
    ratings, meta = hand_fixture()
    results = compare_systems(ratings, meta, "full", "baseline")
    assert [(r.metric, r.wins, r.losses, r.ties) for r in results] == \
        [(m, *t) for m, t in HAND_TALLY.items()]
    assert results[0].win_pct == 200 / 3 and results[2].tie_pct == 100 / 3


def test_antisymmetry():
    ratings, meta = hand_fixture()
    ab = compare_systems(ratings, meta, "full", "baseline")
    ba = compare_systems(ratings, meta, "baseline", "full")
    for x, y in zip(ab, ba):
        assert (x.win_pct, x.loss_pct, x.tie_pct) == (y.loss_pct, y.win_pct, y.tie_pct)


def test_identical_systems_tie():
    ratings, meta = hand_fixture()
    twin = [RatingRecord(r.qa_id, "twin", r.position, r.relevance)
            for r in ratings if r.system_id == "full"]
    for r in compare_systems(ratings + twin, meta, "full", "twin"):
        assert (r.win_pct, r.loss_pct, r.tie_pct) == (0, 0, 100)


def test_record_order_irrelevant():
    ratings, meta = hand_fixture()
    shuffled = list(ratings)
    random.Random(5).shuffle(shuffled)
    assert compare_systems(shuffled, meta, "full", "baseline") == \
        compare_systems(ratings, meta, "full", "baseline")


def test_disjoint_systems():
    ratings = recs([1], "q1", "a") + recs([1], "q2", "b")
    with pytest.raises(DataError):
        compare_systems(ratings, {}, "a", "b")


def test_table_rendering_from_tallies():
    results = results_from_tallies({"explanation_score": (52, 28, 20), "position": (55, 30, 15),
                                    "number": (54, 24, 22)})
    assert render_table(results) == (
        "Type               Win  Loss  Tie\n"
        "Explanation score  52%   28%  20%\n"
        "Position score     55%   30%  15%\n"
        "Number score       54%   24%  22%\n")


@given(st.dictionaries(st.sampled_from(["explanation_score", "position", "number"]),
                       st.tuples(*[st.integers(0, 50)] * 3).filter(lambda t: sum(t) > 0),
                       min_size=1))
def test_percentages_sum_to_hundred(tallies):
    for r in results_from_tallies(tallies):
        assert abs(r.win_pct + r.loss_pct + r.tie_pct - 100) <= 0.01


@pytest.mark.parametrize("text,row", [
    ("qa_id,system_id,position,relevance\nq,s,1,6\n", 2),
    ("qa_id,system_id,position,relevance\nq,s,1,1\nq,s,x,1\n", 3),
    ("qa_id,system_id,position,relevance\nq,s,1,1\nq,s,1,2\n", 3),
    ("qa_id,system_id,position,relevance\nq,s,6,1\n", 2),
    ("qa_id,system_id,position\nq,s,1\n", 1),
])
def test_ratings_schema_errors(text, row):
    with pytest.raises(SchemaError) as err:
        parse_ratings(text)
    assert err.value.row == row and f"row {row}" in str(err.value)


def test_non_consecutive_positions():
    with pytest.raises(DataError, match="consecutive"):
        parse_ratings("qa_id,system_id,position,relevance\nq,s,1,1\nq,s,3,1\n")


def test_meta_errors():
    with pytest.raises(SchemaError):
        parse_meta("qa_id,explainability\nq,0\n")
    with pytest.raises(SchemaError):
        parse_meta("qa_id,explainability\nq,2\nq,3\n")
