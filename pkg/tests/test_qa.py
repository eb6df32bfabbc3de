"""Tests for the quality and privacy metrics."""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.errors import ColumnMismatch, EmptyColumn, EmptySet, NoSequencesOfLengthTwo
from src.models.report import MetricsOptions
from src.models.schema import ColumnKind, EncodingSpec, EncodingStrategy, SubColumn, TableRole, TableSchema
from src.qa import (
    BinnedOneHotEmbedder,
    bin_table,
    coherence_accuracy,
    dcr_share,
    evaluate,
    fit_binning,
    overall_accuracy,
    univariate_accuracy,
)
from src.qa.binning import DROPPED
from src.qa.coherence import successive_pairs

ORACLES = json.loads((Path(__file__).parent / "fixtures" / "qa_oracles.json").read_text())


def _spec(column: str, kind: ColumnKind = ColumnKind.CATEGORICAL) -> EncodingSpec:
    strategy = EncodingStrategy.CATEGORICAL if kind == ColumnKind.CATEGORICAL else EncodingStrategy.NUMERIC_DISCRETE
    return EncodingSpec(
        column_name=column,
        kind=kind,
        strategy=strategy,
        source_columns=[column],
        sub_columns=[SubColumn(name=f"{column}__x", cardinality=1, labels=["x"])],
    )


def _schema(columns, kinds=None, group_key=None) -> TableSchema:
    kinds = kinds or {}
    return TableSchema(
        specs=[_spec(c, kinds.get(c, ColumnKind.CATEGORICAL)) for c in columns],
        table_role=TableRole.SEQUENTIAL if group_key else TableRole.FLAT,
        group_key=group_key,
    )


def _events(n_subjects: int, seed: int) -> pd.DataFrame:
    gen = np.random.default_rng(seed)
    rows = []
    for s in range(n_subjects):
        state = "a"
        for _ in range(int(gen.integers(1, 6))):
            rows.append({"user": f"u{s}", "state": state})
            state = {"a": "b", "b": "c", "c": "a"}[state]
    return pd.DataFrame(rows)


# ----------------------------------------------------------------------------
# Binning
# ----------------------------------------------------------------------------

def test_numeric_columns_use_deciles():
    trn = pd.DataFrame({"v": [str(i) for i in range(1, 101)]})
    binning = fit_binning(trn, _schema(["v"], {"v": ColumnKind.NUMERIC}), MetricsOptions())
    b = binning["v"]
    assert len(b.edges) == 9
    assert b.n_groups == 11
    groups = b.assign(pd.Series(["1", "100", ""]))
    assert groups.tolist() == [0, 9, 10]


def test_categorical_keeps_top_k_and_drops_the_rest():
    trn = pd.DataFrame({"c": ["a"] * 5 + ["b"] * 3 + ["c"] * 1 + [""]})
    binning = fit_binning(trn, _schema(["c"]), MetricsOptions(top_k=2))
    assert binning["c"].categories == ["a", "b"]
    groups = binning["c"].assign(pd.Series(["a", "b", "c", ""]))
    assert groups.tolist() == [0, 1, DROPPED, 2]


# ----------------------------------------------------------------------------
# Accuracy
# ----------------------------------------------------------------------------

@pytest.mark.parametrize("case", ORACLES["univariate"], ids=lambda c: c["name"])
def test_univariate_oracles(case):
    trn, syn = pd.DataFrame(case["trn"]), pd.DataFrame(case["syn"])
    binning = fit_binning(trn, _schema(list(trn.columns)), MetricsOptions())
    scores = univariate_accuracy(bin_table(trn, binning), bin_table(syn, binning), binning)
    assert scores.overall == pytest.approx(case["expected"])


@pytest.mark.parametrize("case", ORACLES["bivariate"], ids=lambda c: c["name"])
def test_bivariate_oracles(case):
    trn, syn = pd.DataFrame(case["trn"]), pd.DataFrame(case["syn"])
    report = evaluate(_schema(list(trn.columns)), trn, None, syn)
    assert report.acc_univariate.overall == pytest.approx(case["expected_univariate"])
    assert report.acc_bivariate.overall == pytest.approx(case["expected_bivariate"])
    assert report.acc_overall == pytest.approx(case["expected_overall"])


def test_identical_tables_score_one():
    trn = pd.DataFrame({"a": list("xyzxyzxx"), "b": list("pqpqpqrr"), "n": [str(i) for i in range(8)]})
    report = evaluate(_schema(["a", "b", "n"], {"n": ColumnKind.NUMERIC}), trn, None, trn.copy())
    assert report.acc_univariate.overall == pytest.approx(1.0)
    assert report.acc_bivariate.overall == pytest.approx(1.0)
    assert report.acc_overall == pytest.approx(1.0)
    assert report.dcr_share is None


def test_single_column_has_no_bivariate_score():
    trn = pd.DataFrame({"a": ["x", "y"]})
    report = evaluate(_schema(["a"]), trn, None, trn)
    assert report.acc_bivariate is None
    assert report.acc_overall == pytest.approx(report.acc_univariate.overall)


def test_overall_is_mean_of_available_parts():
    assert overall_accuracy(0.8) == pytest.approx(0.8)
    assert overall_accuracy(0.8, 0.6) == pytest.approx(0.7)
    assert overall_accuracy(0.9, 0.6, 0.3) == pytest.approx(0.6)


def test_column_with_only_dropped_values_raises():
    trn = pd.DataFrame({"a": ["x"] * 3})
    syn = pd.DataFrame({"a": ["y"] * 3})
    binning = fit_binning(trn, _schema(["a"]), MetricsOptions())
    with pytest.raises(EmptyColumn):
        univariate_accuracy(bin_table(trn, binning), bin_table(syn, binning), binning)


def test_missing_column_raises():
    trn = pd.DataFrame({"a": ["x"], "b": ["y"]})
    with pytest.raises(ColumnMismatch):
        evaluate(_schema(["a", "b"]), trn, None, trn[["a"]])


def test_empty_synthetic_table_raises():
    trn = pd.DataFrame({"a": ["x"]})
    with pytest.raises(EmptySet):
        evaluate(_schema(["a"]), trn, None, trn.iloc[0:0])


# ----------------------------------------------------------------------------
# Coherence
# ----------------------------------------------------------------------------

def test_exhaustive_coherence_of_identical_tables_is_one():
    trn = _events(30, seed=0)
    opts = MetricsOptions(exhaustive_coherence=True)
    report = evaluate(_schema(["state"], group_key="user"), trn, None, trn.copy(), opts)
    assert report.acc_coherence.overall == 1.0


def test_sampled_coherence_uses_one_pair_per_subject():
    trn = _events(40, seed=1)
    first, second, weights = successive_pairs(trn, "user", seed=3)
    lengths = trn.groupby("user").size()
    assert len(first) == int((lengths >= 2).sum())
    assert np.all(weights == 1.0)
    assert (trn["user"].to_numpy()[first] == trn["user"].to_numpy()[second]).all()


def test_exhaustive_pairs_weight_each_subject_equally():
    trn = pd.DataFrame({"user": ["a", "a", "a", "b", "b"], "state": list("xyzxy")})
    first, _, weights = successive_pairs(trn, "user", seed=0, exhaustive=True)
    assert first.tolist() == [0, 1, 3]
    assert weights.tolist() == [0.5, 0.5, 1.0]


def test_broken_transitions_lower_coherence():
    trn = _events(60, seed=2)
    syn = trn.copy()
    syn["state"] = syn["state"].sample(frac=1.0, random_state=0).to_numpy()
    schema = _schema(["state"], group_key="user")
    binning = fit_binning(trn, schema, MetricsOptions())
    coh = coherence_accuracy(
        trn, syn, "user", bin_table(trn, binning), bin_table(syn, binning), binning, exhaustive=True
    )
    assert coh.overall < 0.9


def test_coherence_needs_a_sequence_of_two():
    trn = pd.DataFrame({"user": ["a", "b"], "state": ["x", "y"]})
    with pytest.raises(NoSequencesOfLengthTwo):
        successive_pairs(trn, "user", seed=0)


# ----------------------------------------------------------------------------
# DCR
# ----------------------------------------------------------------------------

def _people(n: int, seed: int) -> pd.DataFrame:
    gen = np.random.default_rng(seed)
    return pd.DataFrame({
        "a": gen.choice(list("pqrs"), size=n),
        "b": gen.choice(list("tuvw"), size=n),
    })


def test_dcr_share_is_half_when_all_sets_match():
    trn = _people(50, seed=0)
    report = evaluate(_schema(["a", "b"]), trn, trn.copy(), trn.copy())
    assert report.dcr_share == pytest.approx(0.5)
    assert report.holdout_reference.acc_overall == pytest.approx(1.0)
    assert report.sample_sizes == {"trn": 50, "syn": 50, "hold": 50}


def test_dcr_share_is_one_for_copies_of_training():
    trn = _people(30, seed=1)
    hold = pd.DataFrame({"a": ["h"] * 30, "b": ["h"] * 30})
    embedder = BinnedOneHotEmbedder(fit_binning(trn, _schema(["a", "b"]), MetricsOptions()))
    share, indicators = dcr_share(trn, hold, trn.copy(), embedder)
    assert share == 1.0
    assert set(indicators.tolist()) == {1.0}


def test_unequal_set_sizes_warn():
    trn = _people(40, seed=2)
    report = evaluate(_schema(["a", "b"]), trn, _people(20, seed=3), _people(40, seed=4))
    assert report.warnings
    assert 0.0 <= report.dcr_share <= 1.0


def test_embedding_is_unit_length():
    trn = _people(10, seed=5)
    vectors = BinnedOneHotEmbedder(fit_binning(trn, _schema(["a", "b"]), MetricsOptions())).embed(trn)
    np.testing.assert_allclose(np.linalg.norm(vectors, axis=1), 1.0)


def test_sequences_are_embedded_per_subject():
    trn = _events(12, seed=4)
    binning = fit_binning(trn, _schema(["state"], group_key="user"), MetricsOptions())
    embedder = BinnedOneHotEmbedder(binning, group_key="user", max_steps=3)
    vectors = embedder.embed(trn)
    assert vectors.shape == (12, 3 * embedder.row_width)


def test_report_summary_mentions_noise_floor():
    trn = _people(20, seed=6)
    report = evaluate(_schema(["a", "b"]), trn, _people(20, seed=7), _people(20, seed=8))
    text = report.summary_text()
    assert "noise floor" in text
    assert "DCR share" in text
