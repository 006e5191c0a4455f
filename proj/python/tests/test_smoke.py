import json
import math
import os
import tempfile

import numpy as np
import pytest

import survnet

SMALL = json.dumps(
    {
        "monde_plus_widths": [8, 8],
        "hadamard_width": 8,
        "monde_widths": [8, 8],
        "feature_widths": [8],
        "cox_deep_widths": [],
    }
)


def test_km_hand_example():
    times, values = survnet.km_fit([1.0, 2.0, 3.0], [1, 0, 1])
    assert times == [1.0, 3.0]
    assert values[0] == 2.0 / 3.0
    assert values[1] == 0.0


def test_initial_condition_and_monotone_curve():
    m = survnet.build_model("sumo_plusplus", 3, seed=1, config=SMALL)
    x = np.random.default_rng(0).normal(size=(1, 3))
    s = [m.survival([t], x)[0] for t in np.linspace(0.0, 2.0, 21)]
    assert s[0] == 1.0
    assert all(a >= b for a, b in zip(s, s[1:]))
    h = m.cumulative_hazard([0.7], x)[0]
    assert math.isclose(math.exp(-h), m.survival([0.7], x)[0], rel_tol=1e-12)

    back = survnet.model_from_json(m.to_json())
    assert back.survival([0.3], x) == m.survival([0.3], x)


def test_train_and_evaluate():
    d = survnet.normalize(survnet.synthetic_weibull(n=200, dims=2, seed=3))
    parts = survnet.km_balanced_split(d, n_seeds=10)
    assert sorted(sum(parts, [])) == list(range(len(d)))
    train, val = d.subset(parts[0]), d.subset(parts[1])
    m = survnet.build_model("sumo_plusplus", 2, seed=0, config=SMALL)
    h = survnet.train(m, train, val, {"max_steps": 50, "window": 8})
    assert h["steps"] == 50
    assert len(h["train_loss"]) == 50
    r = survnet.evaluate(m, val, grid_size=17)
    assert set(r) == {"scores", "concordance", "mean", "min"}
    assert 0.0 <= r["concordance"] <= 1.0

    km = survnet.fit_km(train)
    assert survnet.evaluate(km, val)["concordance"] == 0.5


def test_errors_map_to_exceptions():
    with pytest.raises(survnet.ConfigError):
        survnet.build_model("weibull", 2)
    m = survnet.build_model("sumo", 2, config=SMALL)
    with pytest.raises(survnet.ShapeError):
        m.survival([0.1, 0.2], np.zeros((1, 2)))
    with pytest.raises(survnet.SurvnetError):
        survnet.make_dataset(np.zeros((1, 1)), [3], [1.0])
    d = survnet.normalize(survnet.synthetic_weibull(n=20, dims=1))
    with pytest.raises(survnet.UnsupportedOperation):
        survnet.train(survnet.fit_km(d), d, d)


def test_csv_and_cli():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "d.csv")
        with open(path, "w") as f:
            f.write("a,event,time\n1,1,0.5\n2,0,1.0\n3,1,2.0\n")
        d = survnet.load_csv(path)
        assert len(d) == 3
        assert d.features.shape == (3, 1)
        code, out, _ = survnet.run_cli(["km", "--data", path])
        assert code == 0
        assert out.startswith("t,S\n0,1\n")
        code, _, err = survnet.run_cli(["km"])
        assert code == 2
