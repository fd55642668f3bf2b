import math

import numpy as np
import pytest

import canyonpl


@pytest.fixture(scope="module")
def dataset():
    cfg = canyonpl.SceneConfig()
    cfg.n_streets = 4
    cfg.links_min = 12
    cfg.links_max = 20
    cfg.point_scale = 0.05
    d = canyonpl.generate_scene(cfg, 3)
    canyonpl.generate_pl(d, canyonpl.GroundTruthPL(), 3)
    return d


def test_scene_shape(dataset):
    assert len(dataset.street_ids) == 4
    assert len(dataset.link_ids) == len(dataset.measured_pl)
    assert all(pl > 0 for pl in dataset.measured_pl)


def test_round_trip(dataset, tmp_path):
    canyonpl.save_dataset(tmp_path, dataset)
    back = canyonpl.load_dataset(tmp_path)
    assert back.link_ids == dataset.link_ids
    assert back.measured_pl == pytest.approx(dataset.measured_pl, abs=1e-6)


def test_features_are_numpy(dataset):
    t = canyonpl.extract_clutter_features(dataset)
    assert isinstance(t.values, np.ndarray)
    assert t.values.shape == (len(t), len(t.columns))
    assert np.all(np.isfinite(t.values))


def test_traversal():
    assert canyonpl.traverse_segment((0.5, 0.5, 0.5), (2.5, 0.5, 0.5)) == [[0, 0, 0], [1, 0, 0], [2, 0, 0]]
    with pytest.raises(canyonpl._core.InvariantError):
        canyonpl.traverse_segment((1, 1, 1), (1, 1, 1))


def test_slope_intercept_recovers_a_line():
    d = np.geomspace(10, 400, 50)
    pl = 60.0 + 25.0 * np.log10(d)
    m = canyonpl.fit_slope_intercept(list(d), list(pl))
    assert m.a == pytest.approx(60.0)
    assert m.n == pytest.approx(2.5)
    assert m.sigma < 1e-9
    assert math.isfinite(canyonpl.gpp_uma_los(100.0))
    assert canyonpl.gpp_umi_nlos(100.0) > canyonpl.gpp_uma_los(100.0)


def test_lasso_zero_penalty_is_least_squares():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(60, 3))
    y = x @ np.array([1.0, -2.0, 0.5]) + 3.0
    m = canyonpl.fit_lasso(x, y, 0.0)
    assert m.weights == pytest.approx([1.0, -2.0, 0.5], abs=1e-6)
    assert canyonpl.rmse(y, m.predict(x)) < 1e-6


def test_evaluate(dataset):
    rep = canyonpl.evaluate(dataset, families=["lasso"])
    assert rep["folds"] == dataset.street_ids
    lasso = rep["models"]["lasso"]
    assert len(lasso["fold_rmse"]) == 4
    assert lasso["mean"] == pytest.approx(np.mean(lasso["fold_rmse"]))
    with pytest.raises(canyonpl._core.ConfigError):
        canyonpl.evaluate(dataset, protocol="leave-one-out")


def test_importance(dataset):
    weights = canyonpl.lasso_importance(dataset)
    assert [w["feature"] for w in weights] == list(canyonpl.extract_clutter_features(dataset).columns)
