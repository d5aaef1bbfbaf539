import math

import numpy as np
import pytest

import oceanbo


def test_default_space_has_fifteen_dimensions():
    space = oceanbo.default_space()
    names = [d["name"] for d in space["dimensions"]]
    assert len(names) == 15
    assert names[0] == "padding" and names[-1] == "batch_size"
    assert oceanbo.space_hash() == oceanbo.space_hash(space)


def test_encode_decode_round_trip():
    for seed in range(20):
        config = oceanbo.sample_random(seed)
        coords = oceanbo.encode(config)
        assert all(0.0 <= x <= 1.0 for x in coords)
        assert oceanbo.decode(coords) == config
        assert oceanbo.validation_errors(config) == ""


def test_validation_names_bad_fields():
    config = oceanbo.sample_random(0)
    config["num_FNO"] = 99
    config["colour"] = "red"
    errors = oceanbo.validation_errors(config)
    assert "num_FNO" in errors and "colour" in errors


def test_pareto_and_hypervolume():
    pts = np.array([[1.0, 3.0], [2.0, 2.0], [3.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
    assert oceanbo.non_dominated(pts) == [0, 1, 2, 4]
    assert oceanbo.hypervolume2d(pts, (0.0, 0.0)) == pytest.approx(6.0)


def test_quantile_transform_averages_ties():
    q = oceanbo.quantile_transform(np.array([3.0, 1.0, 3.0, 2.0]))
    assert q == pytest.approx([5.0 / 6.0, 0.0, 5.0 / 6.0, 1.0 / 3.0])


def test_acquisition_helpers():
    assert oceanbo.ucb(1.0, 2.0, 0.5) == 2.0
    c = oceanbo.sample_c(3, 20000)
    assert np.mean(c) == pytest.approx(1.96, rel=0.05)
    assert oceanbo.scalarize((1.0, 0.0), (0.5, 0.5), (0.0, 0.0), (2.0, 1.0)) == pytest.approx(0.25)


def test_extra_trees_bounds_and_constant_target():
    rng = np.random.default_rng(0)
    x = rng.random((40, 3))
    y = np.sin(4 * x[:, 0]) + x[:, 1]
    forest = oceanbo.ExtraTrees(x, y, n_trees=30, seed=2)
    mean, std = forest.predict(rng.random((200, 3)) * 2 - 0.5)
    assert mean.min() >= y.min() and mean.max() <= y.max()
    assert (std >= 0).all()
    flat = oceanbo.ExtraTrees(x, np.full(40, 1.5), n_trees=10, seed=2)
    mean, std = flat.predict(rng.random((50, 3)))
    assert (mean == 1.5).all() and (std == 0).all()


def test_optimizer_ask_tell_on_synthetic_space():
    space = oceanbo.synthetic_space()
    opt = oceanbo.Optimizer(space, seed=4, n_initial=4)
    for _ in range(8):
        (config,) = opt.ask(1)
        assert oceanbo.validation_errors(config, space) == ""
        opt.tell(config, opt.synthetic(config))
    assert opt.n_trials == 8
    (config,) = opt.ask(1)
    opt.tell(config, failure="divergence")
    assert opt.n_trials == 9


def test_rfft2_matches_numpy():
    x = np.random.default_rng(1).standard_normal((6, 9))
    assert np.allclose(oceanbo.rfft2(x), np.fft.rfft2(x), atol=1e-12)


def test_generate_ensemble_shapes():
    data, mask, kappas = oceanbo.generate_ensemble(sims=2, days=3, grid=16, seed=1)
    assert data.shape == (2, 3, 16, 16, 5)
    assert mask.shape == (16, 16)
    assert len(kappas) == 2
    assert np.isfinite(data).all()
    assert (data[:, :, mask == 0, :4] == 0).all()


def test_errors_are_typed():
    with pytest.raises(oceanbo.ConfigError):
        oceanbo.decode([0.5], {"dimensions": [{"name": "x", "kind": "float", "lo": 1.0, "hi": 0.0, "scale": "linear"}]})
    assert math.isfinite(oceanbo.ucb(0.0, 0.0, 1.0))
