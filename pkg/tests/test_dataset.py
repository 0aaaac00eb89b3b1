import json

import pytest
from hypothesis import given, settings, strategies as st

from lppo.dataset import (
    ChainProblemSpec,
    DatasetConfig,
    DatasetError,
    Pool,
    dumps_dataset,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from lppo.env import verify_actions
from lppo.prefix import tokenize


def write_lines(path, rows):
    path.write_text("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in rows))
    return path


def test_load_two_lines_sets_pools(tmp_path):
    f = write_lines(tmp_path / "d.jsonl", [
        {"id": "a", "question": "1+1?", "answer": "2"},
        {"id": "b", "question": "2+2?", "answer": "4", "expert_solution": "2+2\n=4\n"},
    ])
    probs = load_dataset(f)
    assert [p.pool for p in probs] == [Pool.STANDARD, Pool.PREFIX_ELIGIBLE]
    assert probs[1].expert_solution == "2+2\n=4\n"


def test_empty_file_gives_empty_list(tmp_path):
    f = tmp_path / "empty.jsonl"
    f.write_text("")
    assert load_dataset(f) == []


def test_duplicate_id_names_id_and_line(tmp_path):
    rows = [{"id": f"q{i}", "question": "x", "answer": "y"} for i in range(0, 9)]
    rows.insert(2, {"id": "q7", "question": "x", "answer": "y"})  # line 3
    f = write_lines(tmp_path / "d.jsonl", rows)
    with pytest.raises(DatasetError, match=r"'q7' on line 9"):
        load_dataset(f)


@pytest.mark.parametrize("missing", ["id", "question", "answer"])
def test_missing_key_reports_line(tmp_path, missing):
    rec = {"id": "b", "question": "q", "answer": "a"}
    del rec[missing]
    f = write_lines(tmp_path / "d.jsonl", [{"id": "a", "question": "q", "answer": "a"}, rec])
    with pytest.raises(DatasetError, match=rf"line 2: missing required key '{missing}'"):
        load_dataset(f)


def test_bad_json_reports_line(tmp_path):
    f = write_lines(tmp_path / "d.jsonl", ['{"id": "a", "question": "q", "answer": "a"}', "{nope"])
    with pytest.raises(DatasetError, match="line 2"):
        load_dataset(f)


def test_synthetic_deterministic_and_all_eligible():
    cfg = DatasetConfig(n_problems=64, steps_range=(4, 8), branching=4, prefix_eligible_fraction=1.0, seed=1)
    a, b = generate_synthetic(cfg), generate_synthetic(cfg)
    assert len(a) == 64
    assert all(p.pool is Pool.PREFIX_ELIGIBLE for p in a)
    assert dumps_dataset(a).encode() == dumps_dataset(b).encode()
    assert all(4 <= p.chain.steps <= 8 for p in a)


def test_synthetic_fraction_zero_and_half():
    none = generate_synthetic(DatasetConfig(n_problems=12, prefix_eligible_fraction=0.0))
    assert all(p.pool is Pool.STANDARD and p.expert_solution is None for p in none)
    half = generate_synthetic(DatasetConfig(n_problems=10, prefix_eligible_fraction=0.5))
    assert sum(p.pool is Pool.PREFIX_ELIGIBLE for p in half) == 5


def test_synthetic_rejects_branching_one():
    with pytest.raises(DatasetError):
        generate_synthetic(DatasetConfig(branching=1))


def test_chain_spec_invariants():
    with pytest.raises(DatasetError):
        ChainProblemSpec(3, 2, (0, 1))
    with pytest.raises(DatasetError):
        ChainProblemSpec(2, 2, (0, 2))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(0, 30), frac=st.floats(0, 1), seed=st.integers(0, 2**31 - 1),
       lo=st.integers(1, 4), extra=st.integers(0, 4))
def test_round_trip_and_solution_verifies(tmp_path_factory, n, frac, seed, lo, extra):
    cfg = DatasetConfig(n_problems=n, steps_range=(lo, lo + extra), branching=3,
                        prefix_eligible_fraction=frac, seed=seed)
    probs = generate_synthetic(cfg)
    assert probs == generate_synthetic(cfg)
    path = tmp_path_factory.mktemp("rt") / "d.jsonl"
    save_dataset(probs, path)
    assert load_dataset(path) == probs
    for p in probs:
        if p.pool is Pool.PREFIX_ELIGIBLE:
            toks = tokenize(p.expert_solution)
            assert len(toks) == p.chain.steps
            assert verify_actions([int(t) for t in toks.tokens], p, 0) == 1
