import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lppo.dataset import Pool, Problem
from lppo.prefix import TokenSeq, augment, build_prefix, draw_ratio, sample_prefix, tokenize


def test_tokenize_marks():
    seq = tokenize("a b\nc")
    assert seq.tokens == ("a", "b", "c")
    assert seq.newline_marks == {2}


def test_tokenize_trailing_newline():
    seq = tokenize("x\n")
    assert seq.tokens == ("x",) and seq.newline_marks == {1}


def test_tokenize_length():
    assert len(tokenize(" ".join(f"w{i}" for i in range(100)))) == 100


@pytest.mark.parametrize("text", ["", "   \n "])
def test_tokenize_rejects_empty(text):
    with pytest.raises(ValueError):
        tokenize(text)


texts = st.lists(
    st.tuples(st.text("abc+=1234", min_size=1, max_size=4), st.sampled_from([" ", "\n", "  ", "\t", " \n", ""])),
    min_size=1, max_size=30,
).map(lambda parts: "".join(t + (s or " ") for t, s in parts))


@given(lead=st.sampled_from(["", " ", "\n"]), body=texts)
def test_tokenize_is_lossless(lead, body):
    text = lead + body
    assert tokenize(text).text() == text


def test_draw_ratio_degenerate_and_errors():
    rng = np.random.default_rng(0)
    assert draw_ratio(rng, 0.5, 0.5) == 0.5
    with pytest.raises(ValueError):
        draw_ratio(rng, 0.8, 0.3)


def test_draw_ratio_mean():
    rng = np.random.default_rng(1)
    lams = [draw_ratio(rng, 0.3, 0.8) for _ in range(100_000)]
    assert min(lams) >= 0.3 and max(lams) <= 0.8
    assert abs(np.mean(lams) - 0.55) < 0.01


def test_draw_ratio_reproducible():
    a = [draw_ratio(np.random.default_rng(5)) for _ in range(3)]
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    assert [draw_ratio(r1) for _ in range(20)] == [draw_ratio(r2) for _ in range(20)]
    assert len(set(a)) == 1


def _seq(m, marks):
    seps = tuple("\n" if i + 1 in marks else " " for i in range(m))
    return TokenSeq(tuple(f"y{i}" for i in range(m)), seps, "", frozenset(marks))


def test_build_prefix_clips_to_line_end():
    spec = build_prefix(_seq(10, {3, 8}), 0.55)
    assert (spec.raw_len, spec.clipped_len) == (5, 3)
    assert spec.prefix.tokens == ("y0", "y1", "y2")


def test_build_prefix_zero_ratio():
    spec = build_prefix(_seq(10, {3, 8}), 0.0)
    assert spec.clipped_len == 0 and spec.text == ""


def test_build_prefix_chain_solution():
    spec = build_prefix(tokenize("0\n1\n2\n3\n0\n1\n"), 0.5)
    assert (spec.raw_len, spec.clipped_len) == (3, 3)
    assert spec.text == "0\n1\n2\n"


def test_build_prefix_without_newlines_keeps_raw():
    spec = build_prefix(_seq(10, set()), 0.45)
    assert spec.clipped_len == spec.raw_len == 4


def test_strictly_before_rule():
    seq = _seq(10, {3, 5})
    assert build_prefix(seq, 0.5).clipped_len == 5
    assert build_prefix(seq, 0.5, clip="strictly_before").clipped_len == 3


@given(m=st.integers(1, 80), lam=st.floats(0, 1), data=st.data())
def test_prefix_properties(m, lam, data):
    marks = data.draw(st.sets(st.integers(1, m)))
    seq = _seq(m, marks)
    spec = build_prefix(seq, lam)
    raw = math.floor(lam * m)
    assert spec.clipped_len <= spec.raw_len == raw <= m
    assert spec.prefix.tokens == seq.tokens[:spec.clipped_len]
    if any(i <= raw for i in marks):
        assert spec.clipped_len in spec.prefix.newline_marks


def test_augment_and_context(make_chain):
    prob = make_chain("c", [0, 1, 2, 3, 0, 1])
    spec = build_prefix(tokenize(prob.expert_solution), 0.5)
    aug = augment(prob, spec)
    assert aug.prefix_len == 3
    assert aug.to_dict() == {"id": "c", "prefix_text": "0\n1\n2\n", "prefix_len": 3, "lambda": 0.5}
    empty = augment(prob, build_prefix(tokenize(prob.expert_solution), 0.0))
    assert empty.context == prob.question


def test_augment_text_question():
    prob = Problem("t", "Solve x.", "1", "step one\nx = 1\n", pool=Pool.PREFIX_ELIGIBLE)
    aug = augment(prob, build_prefix(tokenize(prob.expert_solution), 0.7))
    assert aug.context == "Solve x.\nstep one\n"


def test_augment_rejects_standard(make_chain):
    prob = make_chain("s", [0, 1], eligible=False)
    spec = build_prefix(tokenize("0\n1\n"), 0.5)
    with pytest.raises(ValueError, match="no expert solution"):
        augment(prob, spec)
    with pytest.raises(ValueError):
        sample_prefix(prob, np.random.default_rng(0))
