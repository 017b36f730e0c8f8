import numpy as np
import pytest

from hpmropt.design import PARAM_NAMES
from hpmropt.pipeline import sample_dataset
from hpmropt.surrogate.dataset import (
    COLUMNS,
    Dataset,
    EmptyDatasetError,
    SchemaError,
    Standardizer,
    correlation_csv,
    correlation_long_csv,
    correlation_matrix,
    filter_outliers,
)


def _toy(n=5, rng=None, lcoe=None):
    rng = rng or np.random.default_rng(0)
    cols = {c: rng.random(n) for c in COLUMNS[7:-2]}
    if lcoe is not None:
        cols["lcoe_foak_usd_mwh"] = np.asarray(lcoe, dtype=float)
    return Dataset(X=rng.random((n, 7)), columns=cols, seed=np.full(n, 3), oracle_id=["t"] * n)


def test_negative_cost_removed():
    ds, removed = filter_outliers(_toy(4, lcoe=[10.0, -5.0, 20.0, 30.0]))
    assert removed == 1 and len(ds) == 3
    assert np.all(ds["lcoe_foak_usd_mwh"] >= 0)


def test_clean_dataset_unchanged():
    raw = _toy(6)
    ds, removed = filter_outliers(raw)
    assert removed == 0
    np.testing.assert_array_equal(ds.X, raw.X)


def test_non_finite_qoi_removed():
    raw = _toy(4)
    raw.columns["fdh"][2] = np.nan
    ds, removed = filter_outliers(raw)
    assert removed == 1 and len(ds) == 3


def test_filter_empty_result_errors():
    with pytest.raises(EmptyDatasetError):
        filter_outliers(_toy(3, lcoe=[-1.0, -2.0, np.nan]))


def test_sampled_retained_not_more_than_raw(rom, db_be, fin, constants):
    ds, counts = sample_dataset(200, 5, rom, db_be, fin, constants)
    assert len(ds) + counts["removed"] == counts["sampled"] == 200
    assert counts["removed"] >= counts["non_starters"]
    assert np.all(ds["lcoe_foak_usd_mwh"] >= 0)
    assert set(ds.oracle_id) == {rom.oracle_id}


def test_sampling_independent_of_workers(rom, db_be, fin, constants):
    a, _ = sample_dataset(150, 9, rom, db_be, fin, constants, workers=1, chunk=40)
    b, _ = sample_dataset(150, 9, rom, db_be, fin, constants, workers=3, chunk=40)
    assert a.to_csv_text() == b.to_csv_text()


def test_csv_round_trip(tmp_path, small_dataset):
    p = tmp_path / "d.csv"
    small_dataset.write_csv(p)
    back = Dataset.read_csv(p)
    assert back.to_csv_text() == small_dataset.to_csv_text()
    np.testing.assert_array_equal(back.X, small_dataset.X)


def test_csv_header_lines_skipped(tmp_path, small_dataset):
    p = tmp_path / "d.csv"
    p.write_text("# provenance\n# seed=1\n" + small_dataset.to_csv_text())
    assert len(Dataset.read_csv(p)) == len(small_dataset)


def test_missing_column_named(tmp_path, small_dataset):
    lines = small_dataset.to_csv_text().splitlines()
    header = lines[0].split(",")
    drop = header.index("sdm_pcm")
    text = "\n".join(",".join(f for i, f in enumerate(l.split(",")) if i != drop) for l in lines) + "\n"
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(SchemaError, match="sdm_pcm"):
        Dataset.read_csv(p)


def test_empty_dataset_header_only():
    text = Dataset.empty().to_csv_text()
    assert text == ",".join(COLUMNS) + "\n"


def test_standardizer_round_trip(rng):
    A = rng.normal(3.0, 7.0, size=(50, 4))
    s = Standardizer.fit(A)
    np.testing.assert_allclose(s.inverse(s.transform(A)), A, rtol=0, atol=1e-12)
    Z = s.transform(A)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(Z.std(axis=0), 1, atol=1e-12)


def test_standardizer_zero_variance():
    with pytest.raises(ValueError, match="zero-variance"):
        Standardizer.fit(np.ones((5, 2)))


def test_correlation_trivial_cases(rng):
    x = rng.random(30)
    ds = Dataset(X=rng.random((30, 7)), columns={"a": x, "b": -x})
    names, C = correlation_matrix(ds, ["a", "b"])
    assert C[0, 0] == pytest.approx(1.0) and C[0, 1] == pytest.approx(-1.0)


def test_correlation_errors(rng):
    ds = Dataset(X=rng.random((2, 7)), columns={"a": np.ones(2)})
    with pytest.raises(ValueError):
        correlation_matrix(ds, ["x_fh"])
    ds = Dataset(X=rng.random((5, 7)), columns={"a": np.ones(5)})
    with pytest.raises(ValueError, match="zero-variance"):
        correlation_matrix(ds, ["x_fh", "a"])


def test_correlation_on_rom_data(small_dataset):
    names, C = correlation_matrix(small_dataset)
    assert np.all(np.abs(C) <= 1.0)
    np.testing.assert_allclose(np.diag(C), 1.0)
    np.testing.assert_allclose(C, C.T)
    i, j = names.index("x_mr"), names.index("fdh")
    assert C[i, j] < 0
    wide = correlation_csv(names, C).splitlines()
    assert len(wide) == len(names) + 1
    long = correlation_long_csv(names, C).splitlines()
    assert len(long) == len(names) ** 2 + 1


def test_dataset_schema_access(small_dataset):
    assert small_dataset.X.shape[1] == len(PARAM_NAMES)
    np.testing.assert_array_equal(small_dataset["x_fh"], small_dataset.X[:, PARAM_NAMES.index("x_fh")])
    with pytest.raises(SchemaError):
        small_dataset["nope"]
