import math

import numpy as np
import pytest

import qedcascade as qc


def test_version():
    assert qc.__version__ == "0.1.0"


def test_split_frequency_reconstructs():
    rng = np.random.default_rng(3)
    x = rng.normal(size=37)
    pos, neg = qc.split_frequency(x, 0.1)
    assert np.max(np.abs(pos + neg - x)) < 1e-12
    assert np.max(np.abs(neg - np.conj(pos))) < 1e-12


def test_white_noise_periodogram_level():
    rng = np.random.default_rng(4)
    dt = 0.01
    records = rng.normal(scale=2.0, size=(50, 64 * 16))
    omega, value, se = qc.periodogram(records, dt, 64)
    inner = slice(1, len(value) - 1)
    mean = np.mean(value[inner])
    err = math.sqrt(np.sum(np.square(se[inner]))) / len(value[inner])
    assert abs(mean - 4.0 * dt) < 4 * err
    assert omega[1] == pytest.approx(2 * math.pi / (64 * dt))


def test_noise_limits():
    assert [qc.caves_bound(t) for t in (0.5, 1.0, 2.0, 3.0)] == [0.0, 0.0, 1.0, 2.0]
    assert qc.weak_bound(3.0) == 1.0
    rep = qc.validate_amplifier(3.0, 1.0, 4.0)
    assert not rep["caves_ok"] and rep["weak_ok"]
    assert abs(qc.spectrum_n0_coefficient(-1.0, 2.0, 1.25, 10.0)) < 1e-12


def test_photocounts():
    p = qc.photocount_distribution("exponential", 4.0, 0.5)
    assert p[3] == pytest.approx(2.0**3 / 3.0**4, abs=1e-12)
    with pytest.raises(ValueError):
        qc.photocount_distribution("uniform", 1.0)


CONFIG = {
    "grid": {"dt_s": 0.01, "bins": 1024},
    "source": {"type": "coherent", "flux_per_s": 10.0},
    "detector": {"efficiency": 0.8, "charge_c": 1.0},
    "run": {"trajectories": 8, "seed": 1, "segment_bins": 128},
}


def test_run_config_is_deterministic():
    a = qc.run(CONFIG)
    b = qc.run(CONFIG)
    assert a["files"] == b["files"]
    assert {"mean_current.csv", "spectrum.csv", "counts.csv"} <= set(a["files"])
    assert [c["name"] for c in a["checks"]] == ["mean_current", "spectrum", "count_distribution"]


def test_errors_map_to_python_exceptions():
    bad = dict(CONFIG, extra=1)
    with pytest.raises(qc.ConfigError):
        qc.run(bad)
    unphysical = dict(CONFIG, amplifier={"transfer": 3.0, "noise_flux_per_s": 0.0, "gamma_per_s": 5.0})
    assert qc.check(unphysical)
    with pytest.raises(qc.PhysicsViolation):
        qc.run(unphysical)
