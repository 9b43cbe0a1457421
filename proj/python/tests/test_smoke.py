import json
import math

import numpy as np
import pytest

import copcp


def split(data, n_train, n_calib):
    x, y = np.asarray(data.features), np.asarray(data.targets)
    a, b = n_train, n_train + n_calib
    return (x[:a], y[:a]), (x[a:b], y[a:b]), (x[b:], y[b:])


def test_closed_forms():
    assert copcp.independent_epsilon_t(0.19, 2) == 0.1
    assert copcp.gumbel_epsilon_t(0.1, 4, 1.0) == copcp.independent_epsilon_t(0.1, 4)
    assert copcp.gumbel_epsilon_t(0.1, 4, 2.0) == pytest.approx(0.0513167019494862, rel=1e-13)
    assert copcp.CopulaModel.gumbel(2.0).cdf([0.5, 0.5]) == pytest.approx(0.3752142272464818, rel=1e-13)
    assert copcp.normalized_score(2.0, 1.0, 0.0, 0.1) == pytest.approx(1 / 1.1)


def test_ecdf_and_pseudo_observations():
    v = np.array([3.0, 1.0, 2.0, 2.0, 5.0])
    assert copcp.ecdf_eval(v, 2.0) == pytest.approx(0.6)
    assert copcp.ecdf_quantile(v, 0.61) == 3.0
    assert math.isinf(copcp.ecdf_quantile(v, 0.9, "n_plus_one"))
    u = copcp.pseudo_observations(np.array([[2.0], [2.0], [1.0]]))
    assert u[:, 0].tolist() == pytest.approx([1.0, 1.0, 1 / 3])


def test_predictor_end_to_end():
    data = copcp.synth_dataset(3000, 3, 5, 0.9, 7)
    (xt, yt), (xc, yc), (xs, ys) = split(data, 2000, 500)
    ridge = copcp.RegressorSpec("ridge")
    ind = copcp.ConformalPredictor.build(xt, yt, xc, yc, ridge, ridge, "independent", seed=1)
    emp = ind.with_copula("empirical")
    gum = ind.with_copula("gumbel")
    assert gum.theta > 1.5
    lower, upper = emp.predict_boxes(xs, 0.1)
    assert lower.shape == (500, 3)
    assert np.all(lower <= upper)
    cov = copcp.coverage(lower, upper, ys)
    assert 0.85 <= cov <= 0.95
    assert copcp.efficiency_median_volume(ind, xs) >= copcp.efficiency_median_volume(emp, xs)
    curve = copcp.validity_curve(emp, xs, ys)
    assert all(a >= b for a, b in zip(curve, curve[1:]))


def test_errors_surface_as_exceptions():
    with pytest.raises(copcp.CopcpError, match="CalibTooSmall"):
        x = np.zeros((20, 2))
        y = np.zeros((20, 1))
        copcp.ConformalPredictor.build(x[:15], y[:15], x[15:], y[15:], copcp.RegressorSpec("ridge"))
    with pytest.raises(ValueError):
        copcp.RegressorSpec("forest")


def test_run_experiment_and_cli(tmp_path):
    data = copcp.synth_dataset(300, 2, 3, 0.5, 3)
    config = {
        "targets": ["t1", "t2"],
        "regressor": {"kind": "ridge"},
        "error_model": {"kind": "knn", "k": 10},
        "folds": 3,
        "seed": 5,
    }
    report = copcp.run_experiment(data, config, jobs=2)
    assert report["fold_count"] == 3
    assert [s["copula"] for s in report["summary"]] == ["independent", "gumbel", "empirical"]

    csv = tmp_path / "d.csv"
    code, out, err = copcp.run_cli(["synth", "--n", "300", "--m", "2", "--dependence", "0.5", "--seed", "3",
                                    "--out", str(csv)])
    assert code == 0, err
    (tmp_path / "c.json").write_text(json.dumps(dict(config, dataset="d.csv")))
    code, out, err = copcp.run_cli(["run", "--config", str(tmp_path / "c.json")])
    assert code == 0, err
    assert (tmp_path / "out" / "report.json").exists()
    assert copcp.run_cli(["run", "--config", str(tmp_path / "missing.json")])[0] == 2
