import numpy as np
import pytest
from numpy.testing import assert_allclose

from interpcp.config import ConfigError
from interpcp.data import Dataset
from interpcp.exprdsl import BaseFunction, CandidateModel, P, S, X, apply_link, enumerate_candidates, library
from interpcp.exprdsl import first_layer_output, layer_outputs
from interpcp.heatmap import emit_heatmaps, grid_for_view, read_heatmap, write_heatmap


def tabular_data(seed=0):
    rng = np.random.default_rng(seed)
    X_ = rng.normal(size=(60, 4))
    return Dataset(X_, rng.normal(size=60), ("z1", "z2", "z3", "z4"))


def nhanes_model(f1, pair, subset, seed=0):
    models = enumerate_candidates(library.family("nhanes.f1"), library.family("nhanes.f2"), covariate_pool=range(4),
                                  subset_size=2, feature_names=["z1", "z2", "z3", "z4"])
    ids = (f"nhanes.f1.{f1}",) + tuple(f"nhanes.f2.{k}" for k in pair)
    m = next(m for m in models if (m.first_layer.id,) + tuple(f.id for f in m.second_layer) == ids
             and m.covariate_subset == subset)
    return m.with_theta(np.random.default_rng(seed).uniform(-1, 1, m.param_count))


def test_constant_model_gives_constant_grid():
    f1 = BaseFunction("t.c1", P(0) + 0.0 * S(0) + 0.0 * S(1), 2)
    f2 = BaseFunction("t.c2", P(0) + 0.0 * X(0) + 0.0 * X(1), 2)
    m = CandidateModel(1, f1, (f2, f2), (0, 1), theta=np.array([2.5, 1.0, -1.0]))
    for view in ("model", "f1"):
        g = grid_for_view(m, tabular_data(), view, steps=7)
        assert g.values.shape == (7, 7)
        assert np.all(g.values == g.values[0, 0])


def test_linear_second_layer_reproduces_closed_form():
    m = nhanes_model(3, (1, 3), (0, 1))
    g = grid_for_view(m, tabular_data(), "f2_2", steps=9)
    gx, gy = np.meshgrid(g.x_values, g.y_values)
    th = m.theta[m.param_slices[2]]
    assert_allclose(g.values, th[0] * gx + th[1] * gy + th[2], rtol=0, atol=1e-14)
    assert (g.x_name, g.y_name) == ("z1", "z2")


def test_model_view_composes_layer_views():
    m = nhanes_model(2, (2, 3), (1, 3), seed=4)
    data = tabular_data(1)
    g = grid_for_view(m, data, "model", steps=11)
    ix, iy = data.feature_names.index(g.x_name), data.feature_names.index(g.y_name)
    gx, gy = np.meshgrid(g.x_values, g.y_values)
    pts = np.tile(np.median(data.X, axis=0), (gx.size, 1))
    pts[:, ix], pts[:, iy] = gx.ravel(), gy.ravel()
    slots = np.column_stack([grid_for_view(m, data, "f2_1", steps=11).values.ravel(),
                             grid_for_view(m, data, "f2_2", steps=11).values.ravel()])
    assert_allclose(slots, layer_outputs(m, pts), rtol=1e-14)
    composed = apply_link(m.output_link, first_layer_output(m, slots))[:, 0]
    assert_allclose(g.values.ravel(), composed, rtol=1e-13)


def test_f1_view_ranges_follow_layer_outputs():
    m = nhanes_model(1, (1, 2), (0, 2))
    data = tabular_data(2)
    g = grid_for_view(m, data, "f1", steps=5)
    x1 = layer_outputs(m, data.X)
    assert_allclose([g.x_values[0], g.x_values[-1]], [x1[:, 0].min(), x1[:, 0].max()])
    assert (g.x_name, g.y_name) == ("x1_1", "x1_2")


def test_unknown_axes_and_views_are_config_errors():
    m = nhanes_model(1, (1, 2), (0, 1))
    data = tabular_data()
    with pytest.raises(ConfigError):
        grid_for_view(m, data, "model", axes=("z1", "z4"))
    with pytest.raises(ConfigError):
        grid_for_view(m, data, "f1", axes=("z1", "z2"))
    with pytest.raises(ConfigError):
        grid_for_view(m, data, "f2_3")
    with pytest.raises(ConfigError):
        grid_for_view(m, data, "bogus")


def test_grid_file_layout_round_trip(tmp_path):
    m = nhanes_model(3, (2, 3), (2, 3), seed=1)
    paths = emit_heatmaps(m, tabular_data(), tmp_path, steps=6)
    assert [p.name for p in paths] == ["heatmap_model.csv", "heatmap_f1.csv", "heatmap_f2_1.csv", "heatmap_f2_2.csv"]
    lines = paths[0].read_text().splitlines()
    assert len(lines) == 7 and len(lines[0].split(",")) == 7
    g = grid_for_view(m, tabular_data(), "model", steps=6)
    back = read_heatmap(paths[0])
    assert np.array_equal(back.values, g.values) and np.array_equal(back.x_values, g.x_values)
    write_heatmap(back, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_text() == paths[0].read_text()
