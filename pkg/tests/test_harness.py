import json

import numpy as np
import pytest

from lrcone import harness as H
from lrcone.errors import ConfigError, DomainError

SMOKE = H.SweepConfig.from_file(H.__file__.replace("harness.py", "configs/smoke.json"))

CHAIN4 = {
    "lattice": {"d": 1, "extents": [4], "metric": "euclidean"},
    "alphas": [2.5],
    "ensemble": "random_two_body",
    "seeds": [0, 1],
    "r_grid": [1, 2, 3],
    "t_grid": [0.0, 0.25, 0.5, 1.0],
    "checks": ["sandwich", "dominance", "truncation", "correlator", "front", "tail"],
    "name": "chain4",
}


def test_config_round_trip():
    cfg = H.SweepConfig.from_dict(CHAIN4)
    again = H.SweepConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg and again.digest() == cfg.digest()
    assert len(cfg.digest()) == 16
    assert H.SweepConfig.from_dict({**CHAIN4, "name": "other"}).digest() != cfg.digest()


@pytest.mark.parametrize(
    "patch",
    [
        {"wobble": 1},
        {"t_grid": [0.5, 0.5]},
        {"r_grid": [2, 1]},
        {"t_grid": []},
        {"theta": 1.0},
        {"theta": 0.0},
        {"norm_kind": "trace"},
        {"ensemble": "heisenberg"},
        {"operator": "W"},
        {"fit_method": "ransac"},
        {"root_seed": 3},
        {"checks": ["sandwich", "bogus"]},
        {"t_grid": [-1.0, 0.0]},
        {"lattice": {"d": 1, "extents": [4], "shape": "ring"}},
    ],
)
def test_config_rejects(patch):
    with pytest.raises(ConfigError):
        H.SweepConfig.from_dict({**CHAIN4, **patch})


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        H.SweepConfig.from_file(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="not valid JSON"):
        H.SweepConfig.from_file(bad)
    with pytest.raises(ConfigError):
        H.SweepConfig.from_dict({"alphas": [2.5]})


def test_derive_seeds_independent_and_stable():
    seeds = H.derive_seeds(7, 5)
    assert seeds == H.derive_seeds(7, 5)
    assert len(set(seeds)) == 5
    assert H.derive_seeds(7, 3) == seeds[:3]
    assert H.derive_seeds(8, 5) != seeds
    cfg = H.SweepConfig.from_dict({**CHAIN4, "root_seed": 7, "n_samples": 2})
    assert cfg.sample_seeds() == seeds[:2]


# ---------------------------------------------------------------- fits


@pytest.mark.parametrize("p", [0.5, 1.0, 1.7])
def test_fit_front_recovers_planted_exponent(p):
    rs = np.arange(1, 20, dtype=float)
    ts = np.logspace(-3, 3, 300)
    fit = H.fit_front(H.synthetic_front_curve(rs, ts, p, C=2.0), theta=0.1)
    assert fit.slope == pytest.approx(p, abs=1e-9)
    assert fit.intercept == pytest.approx(np.log(0.1 / 2.0), abs=1e-9)
    assert fit.excluded == []


def test_fit_front_excludes_radii_that_never_cross():
    rs = np.arange(1, 8, dtype=float)
    ts = np.logspace(-2, 0.5, 100)
    fit = H.fit_front(H.synthetic_front_curve(rs, ts, 2.0), theta=0.1)
    assert fit.excluded == [6.0, 7.0]
    assert fit.slope == pytest.approx(2.0, abs=1e-9)


def test_fit_front_needs_three_crossings():
    curve = H.synthetic_front_curve([1.0, 2.0, 50.0, 60.0], np.linspace(0, 1, 20), 1.0)
    with pytest.raises(DomainError, match="need 3"):
        H.fit_front(curve, 0.1)
    with pytest.raises(DomainError):
        H.fit_front(curve, 1.5)


def test_fit_tail():
    rs = np.arange(1, 10, dtype=float)
    slope, intercept, stderr = H.fit_tail(rs, 3.0 * rs**-1.5)
    assert slope == pytest.approx(-1.5, abs=1e-12) and intercept == pytest.approx(np.log(3.0))
    assert stderr < 1e-12
    # zeros are dropped before the log
    assert H.fit_tail([1, 2, 3, 4], [1, 0.5**2, 3.0**-2, 0])[0] == pytest.approx(-2.0)
    with pytest.raises(DomainError):
        H.fit_tail([1, 2, 3], [1.0, 0.0, 0.2])


# ---------------------------------------------------------------- runs


def test_smoke_report_passes():
    report = H.run_verification(SMOKE)
    assert report.passed, report.failures
    names = [s.name for s in report.sections]
    assert names == list(H.CHECK_NAMES)
    closed = report.sections[0]
    assert {c.name for c in closed.checks} == {"leakage_equals_abs_sin", "commutator_equals_2abs_sin"}


def test_chain4_sections():
    report = H.run_verification(H.SweepConfig.from_dict(CHAIN4), jobs=2)
    assert report.passed, report.failures
    by = {s.name: s for s in report.sections}
    assert by["sandwich"].rows and by["sandwich"].header[0] == "alpha"
    assert np.isfinite(by["dominance"].records["C_fit"])
    assert not by["front"].checks and not by["tail"].checks  # report-only
    doc = json.loads(json.dumps(report.to_dict(), default=H._json_default))
    assert doc["environment"]["seeds"] == [0, 1]
    assert doc["passed"]


def test_zero_tolerance_fails_visibly():
    cfg = H.SweepConfig.from_dict({**SMOKE.to_dict(), "tol": 0.0, "checks": ["closed_form"]})
    report = H.run_verification(cfg)
    assert not report.passed
    assert report.failures


def test_jobs_do_not_change_results(tmp_path):
    cfg = H.SweepConfig.from_dict(CHAIN4)
    a = H.write_run(H.run_verification(cfg, jobs=1), tmp_path / "a")
    b = H.write_run(H.run_verification(cfg, jobs=3), tmp_path / "b")
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    with pytest.raises(ConfigError):
        H.run_verification(cfg, jobs=0)


def test_write_run_appends(tmp_path):
    report = H.run_verification(SMOKE)
    run_dir = H.write_run(report, tmp_path)
    H.write_run(report, tmp_path)
    assert run_dir.name == SMOKE.digest()
    lines = (run_dir / "reports.jsonl").read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["config"] == json.loads((run_dir / "report.json").read_text())["config"]


def test_bad_center_is_config_error():
    with pytest.raises(ConfigError):
        H.run_verification(H.SweepConfig.from_dict({**CHAIN4, "center": 9}))
