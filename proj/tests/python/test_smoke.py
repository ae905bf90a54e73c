import math

import numpy as np
import pytest

import ericson


def test_version_is_reported():
    assert ericson.__version__ == ericson.version()


def test_goe_sample_is_symmetric_and_deterministic():
    a = ericson.sample_goe(20, seed=3)
    b = ericson.sample_goe(20, seed=3)
    assert np.array_equal(a, b)
    assert np.allclose(a, a.T)
    assert not np.array_equal(a, ericson.sample_goe(20, seed=3, realization=1))


def test_tetrahedron_s_matrix_is_unitary():
    for f in np.linspace(10.1, 12.0, 25):
        s = ericson.tetrahedron_s_matrix(1.0, f)
        assert np.abs(s.conj().T @ s - np.eye(2)).max() < 1e-10
        assert np.abs(s - s.T).max() < 1e-10


def test_count_maxima_of_squared_sine():
    x = np.linspace(0.0, 1.0, 4001)[:-1]
    stats = ericson.count_maxima(x, np.sin(2 * math.pi * x) ** 2)
    assert stats["n_max"] == 2


def test_cosine_autocorrelation():
    x = np.arange(200000) * 0.01
    curve = ericson.autocorrelation(x, 1.0 + np.cos(x), max_lag=5.0)
    lags = np.asarray(curve["lags"])
    assert np.abs(np.asarray(curve["values"]) - 0.5 * np.cos(lags)).max() < 0.01


def test_ansatz_fit_recovers_parameters():
    gamma = np.linspace(0.2, 3.0, 15)
    product = [ericson.eval_ansatz("freq_lorentzian", [1.0, 1.0 / 3.0], g) for g in gamma]
    fit = ericson.fit_ansatz(list(gamma), product)
    assert fit["converged"]
    assert fit["params"] == pytest.approx([1.0, 1.0 / 3.0], abs=1e-8)


def test_bad_config_raises_config_error():
    with pytest.raises(ericson.ConfigError):
        ericson.run({"model": "rmt_billiard", "ensemble_size": 0})


def test_small_billiard_run():
    config = {
        "model": "rmt_billiard",
        "seed": 1,
        "ensemble_size": 2,
        "rmt_billiard": {"N": 60, "M": 4, "windows": [{"t_real": 0.5, "t_fictitious": 0.5}]},
    }
    report = ericson.run(config)
    assert report["exit_code"] in (0, 4)
    assert all(p["product"] > 0 for p in report["products"])
