import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from interpcp.config import ConfigError, RunConfig, load_config, study_defaults
from interpcp.data import DataError, Dataset, format_float, read_csv, write_csv
from interpcp.ingest import apply_target_transform, ingest_csv, invert_target_transform


def test_study_defaults():
    d = study_defaults("sim1")
    assert d["D"] == 5 and d["data"]["N"] == 1000 and d["full_mlp"]["hidden"] == [60, 60]
    s3 = study_defaults("sim3")
    assert s3["complexity"] == "avg_params_per_layer" and s3["fit"]["loss"] == "cross_entropy"
    assert s3["fit"]["iterations"] == 2000
    assert study_defaults("tabular")["D"] == 4
    with pytest.raises(ConfigError):
        study_defaults("sim9")


def test_yaml_overrides_merge_deeply(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("study: sim1\nseed: 4\nfit:\n  iterations: 50\ndata:\n  N: 30\n")
    cfg = load_config(p)
    assert cfg.seed == 4 and cfg.fit["iterations"] == 50 and cfg.fit["restarts"] == 5
    assert cfg.data["N"] == 30 and cfg.data["mc_reps"] == 10000
    assert load_config(p, seed=9, out="x").seed == 9


@pytest.mark.parametrize("raw", [
    {"study": "sim1", "D": 1},
    {"study": "sim1", "seed": -1},
    {"study": "sim1", "candidates": {"f1": ["nope.f1"]}},
    {"study": "sim1", "correlation": "kendall"},
    {"study": "sim1", "bogus": 1},
    {"study": "tabular"},
    {"seed": 1},
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(raw)


def test_conflicting_study_flag(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("study: sim1\n")
    with pytest.raises(ConfigError):
        load_config(p, study="sim3")


def test_unreadable_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("study: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def write(tmp_path, text):
    p = tmp_path / "d.csv"
    p.write_text(text)
    return p


def test_identity_ingest_round_trips(tmp_path):
    p = write(tmp_path, "a,b,y\n0.1,2,3.5\n-1e-3,4,0.25\n7,8,9\n")
    d = ingest_csv(p, "y")
    assert_allclose(d.X, [[0.1, 2], [-1e-3, 4], [7, 8]], rtol=0, atol=0)
    assert_allclose(d.y, [3.5, 0.25, 9], rtol=0, atol=0)
    assert d.meta["dropped_rows"] == 0


def test_standardization(tmp_path):
    rng = np.random.default_rng(0)
    rows = "\n".join(",".join(repr(float(v)) for v in r) for r in rng.normal(3, 2, (50, 3)))
    d = ingest_csv(write(tmp_path, "a,b,y\n" + rows + "\n"), "y", standardize=True)
    assert_allclose(d.X.mean(axis=0), 0, atol=1e-12)
    assert_allclose(d.X.std(axis=0), 1, atol=1e-12)
    assert set(d.meta["standardization"]) == {"a", "b"}


def test_log_affine_transform():
    tf = {"kind": "log_affine", "shift": 3.0, "scale": 14.0}
    assert_allclose(apply_target_transform(np.array([math.e]), tf), [4 / 14])
    y = np.array([0.2, 5.0, 130.0])
    assert_allclose(invert_target_transform(apply_target_transform(y, tf), tf), y, rtol=1e-14)
    with pytest.raises(DataError):
        apply_target_transform(np.array([0.0]), tf)
    af = {"kind": "affine", "shift": 1.0, "scale": 2.0}
    assert_allclose(apply_target_transform(np.array([3.0]), af), [2.0])


def test_missing_rows_dropped_and_counted(tmp_path):
    d = ingest_csv(write(tmp_path, "a,b,y\n1,2,3\n,2,3\n4,NA,6\n7,8,9\n"), "y")
    assert d.n == 2 and d.meta["dropped_rows"] == 2


def test_non_numeric_cells_list_line_numbers(tmp_path):
    with pytest.raises(DataError, match="line\\(s\\) 3, 5"):
        ingest_csv(write(tmp_path, "a,y\n1,2\nx,3\n4,5\n6,seven\n"), "y")


def test_empty_result_is_fatal(tmp_path):
    with pytest.raises(DataError):
        ingest_csv(write(tmp_path, "a,y\n,2\n3,\n"), "y")
    with pytest.raises(DataError):
        ingest_csv(write(tmp_path, "a,y\n1,2\n"), "z")


def test_format_float():
    assert format_float(3.0) == "3"
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(float("inf")) == "inf"


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (6, 3), elements=st.floats(-1e300, 1e300, allow_nan=False, allow_subnormal=True)))
def test_dataset_csv_round_trip_is_lossless(tmp_path_factory, arr):
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    d = Dataset(arr[:, :2], arr[:, 2], ("a", "b"))
    write_csv(d, p)
    back = read_csv(p)
    assert np.array_equal(back.X, d.X) and np.array_equal(back.y, d.y)
    again = ingest_csv(p, "y")
    assert np.array_equal(again.X, d.X)


def test_classification_targets_round_trip(tmp_path):
    d = Dataset(np.array([[1.0, 2.0, 10.0]]), np.array([[0.0, 1.0]]), ("q1", "q2", "n"), ("y0", "y1"))
    write_csv(d, tmp_path / "d.csv")
    back = read_csv(tmp_path / "d.csv", ("y0", "y1"))
    assert back.task == "classification" and np.array_equal(back.y, d.y)
