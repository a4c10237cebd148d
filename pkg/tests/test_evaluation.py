import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lscl.classifier import ConfigError, LsclConfig
from lscl.dataset import Dataset, SyntheticSpec, generate_synthetic
from lscl.evaluation import (
    EvaluationReport,
    FoldCounts,
    format_cell,
    parse_report,
    render_report,
    run_leave_one_out,
    run_two_fold,
    split_seeds,
)


def balanced(C=4, per=6, seed=0):
    return generate_synthetic(SyntheticSpec(C, per, 5, 6.0, 1.0, seed))


def oracle_stub(ds):
    # looks the query up in the full dataset, so it is always right
    lookup = {tuple(v): int(c) for v, c in zip(ds.vectors, ds.class_ids)}
    return lambda y, train: lookup[tuple(y)]


def test_perfect_stub():
    ds = balanced()
    r = run_two_fold(ds, oracle_stub(ds), repetitions=5)
    assert r.mean_accuracy == 1.0 and r.std_accuracy == 0.0
    assert r.per_class_accuracy == (1.0,) * 4


def test_constant_stub_on_balanced_data():
    ds = balanced()
    r = run_two_fold(ds, lambda y, train: 0, repetitions=5)
    assert r.mean_accuracy == pytest.approx(0.25)
    assert r.per_class_accuracy == (1.0, 0.0, 0.0, 0.0)
    loo = run_leave_one_out(ds, lambda y, train: 0)
    assert loo.mean_accuracy == pytest.approx(0.25)
    assert loo.std_accuracy == pytest.approx(np.std([1, 0, 0, 0]))


def test_two_fold_determinism():
    ds = balanced(3, 8, seed=2)
    cfg = LsclConfig(k=2, S=2)
    a = run_two_fold(ds, "lscl", cfg, repetitions=3, seed=11)
    b = run_two_fold(ds, "lscl", cfg, repetitions=3, seed=11)
    assert a.without_timing() == b.without_timing()
    assert a.total_wall_time_s > 0
    assert split_seeds(11, 3) == split_seeds(11, 3)
    assert split_seeds(11, 3) != split_seeds(12, 3)


def test_stage_times_within_total():
    ds = balanced(3, 8, seed=2)
    r = run_two_fold(ds, "lscl", LsclConfig(k=2, S=2), repetitions=2)
    st_ = r.per_stage_time_s
    assert st_["stage1"] > 0 and st_["stage2"] > 0
    assert st_["stage1"] + st_["stage2"] <= r.total_wall_time_s
    assert run_two_fold(ds, "src", LsclConfig(k=2, S=2), repetitions=1).per_stage_time_s is None


def test_leave_one_out_one_nn_separated():
    ds = generate_synthetic(SyntheticSpec(2, 10, 6, 50.0, 0.5, seed=1))
    r = run_leave_one_out(ds, "lmc", LsclConfig(k=1))
    assert r.mean_accuracy == 1.0
    assert r.counts[0].total == ds.n
    assert r.scheme == "leave_one_out" and r.std_over == "classes"


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(2, 7), min_size=2, max_size=4), st.integers(0, 2**31), st.integers(1, 4))
def test_counting_identities(sizes, seed, reps):
    rng = np.random.default_rng(seed)
    ids = np.repeat(np.arange(len(sizes)), sizes)
    ds = Dataset(rng.standard_normal((ids.size, 3)), ids)
    flip = rng.random(ids.size) < 0.3
    wrong = {tuple(v) for v, f in zip(ds.vectors, flip) if f}
    lookup = {tuple(v): int(c) for v, c in zip(ds.vectors, ds.class_ids)}

    def stub(y, train):
        c = lookup[tuple(y)]
        if tuple(y) in wrong:
            if c == 0:
                raise ValueError("simulated failure")
            return (c + 1) % len(sizes)
        return c

    two = run_two_fold(ds, stub, repetitions=reps, seed=seed)
    test_sizes = [s // 2 for s in sizes]
    for fc, acc in zip(two.counts, two.rep_accuracies):
        assert fc.total == sum(test_sizes)
        assert acc == fc.correct / fc.total
    assert two.mean_accuracy == pytest.approx(np.mean(two.rep_accuracies))
    pooled = np.array(test_sizes) * reps
    assert np.dot(two.per_class_accuracy, pooled) / pooled.sum() == pytest.approx(
        sum(c.correct for c in two.counts) / sum(c.total for c in two.counts)
    )

    loo = run_leave_one_out(ds, stub)
    (fc,) = loo.counts
    assert fc.total == ds.n
    assert fc.correct == ds.n - flip.sum()
    assert fc.errored == int(np.sum(flip & (ids == 0)))
    assert np.dot(loo.per_class_accuracy, sizes) / ds.n == pytest.approx(loo.mean_accuracy)
    assert all(0.0 <= a <= 1.0 for a in loo.per_class_accuracy)


def test_format_cell_matches_table_layout():
    r = EvaluationReport("lscl", "two_fold", 50, 0.8139, 0.204, (0.8139,), 86.0)
    assert format_cell(r) == "0.8139 ± 0.204 / 86"
    table = render_report(r, "table").decode()
    assert "0.8139 ± 0.204 / 86" in table
    assert "fractions" in table


def test_json_round_trip_and_schema():
    ds = balanced(3, 6, seed=4)
    r = run_two_fold(ds, "lmc", LsclConfig(k=2), repetitions=2)
    data = render_report(r, "json")
    obj = json.loads(data)
    assert list(obj)[:8] == [
        "method", "scheme", "repetitions", "mean_accuracy", "std_accuracy",
        "per_class_accuracy", "total_wall_time_s", "config",
    ]
    assert obj["units"] == "fraction"
    assert parse_report(data) == r
    many = [r, run_leave_one_out(ds, "lmc", LsclConfig(k=2))]
    assert parse_report(render_report(many, "json")) == many
    with pytest.raises(ValueError):
        render_report(r, "xml")


def test_unknown_method_and_bad_reps():
    ds = balanced()
    with pytest.raises(ConfigError):
        run_two_fold(ds, "knn", repetitions=1)
    with pytest.raises(ValueError):
        run_two_fold(ds, "lmc", repetitions=0)


def test_fold_counts_total():
    assert FoldCounts(3, 2, 1).total == 6
