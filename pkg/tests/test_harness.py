import csv

import numpy as np
import pytest

from configs import config_text
from fractimo import harness
from fractimo.config import parse_config
from fractimo.solver import BeamConfig
from fractimo.memory import KernelSpec


def _cfg(tmp_path, **kw):
    kw.setdefault("output__dir", str(tmp_path / "out"))
    return parse_config(config_text(**kw))


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_zero_run_passes_with_zero_traces(tmp_path):
    status, checks = harness.run(_cfg(tmp_path))
    assert status == 0 and all(c.passed for c in checks)
    out = tmp_path / "out"
    sol = _rows(out / "solution.csv")
    assert sol[0] == ["t", "x", "theta", "phi"]
    assert all(r[2] == "0" and r[3] == "0" for r in sol[1:])
    norms = _rows(out / "norms.csv")
    assert norms[0] == ["t", "l2_theta", "l2_phi", "b21_theta_t", "b21_phi_t"]
    assert _rows(out / "energy_report.csv")[0] == ["check", "lhs", "rhs", "ratio", "pass"]


def test_manufactured_run_reports_mms_rows(tmp_path):
    status, checks = harness.run(_cfg(tmp_path, scenario__name="manufactured_poly"))
    names = [c.name for c in checks]
    assert status == 0
    assert {"apriori_sup_l2", "apriori_rate_b21", "constraints", "mms_theta",
            "mms_phi"} <= set(names)
    mms = [c for c in checks if c.name.startswith("mms")]
    assert all(0 < c.lhs < 0.05 * c.rhs for c in mms)


def test_perturb_pair_run_has_dependence_row(tmp_path):
    status, checks = harness.run(_cfg(tmp_path, scenario__name="perturb_pair"))
    dep = [c for c in checks if c.name == "continuous_dependence"]
    assert status == 0 and len(dep) == 1 and dep[0].passed


def test_run_perturb_scaling_row(tmp_path):
    cfg = _cfg(tmp_path, scenario__name="perturb_pair", scenario__n_directions=3)
    status, checks = harness.run_perturb(cfg)
    assert status == 0
    assert [c.name for c in checks] == ["dependence_0", "dependence_1", "dependence_2",
                                        "dependence_scaling"]
    assert checks[-1].ratio <= 1e-8


def test_stride_and_plot_script(tmp_path):
    cfg = _cfg(tmp_path, output__stride=16, output__plot="true")
    harness.run(cfg)
    sol = _rows(tmp_path / "out" / "solution.csv")
    times = sorted({float(r[0]) for r in sol[1:]})
    assert len(times) == 5  # 0, 16, 32, 48, 64
    assert (tmp_path / "out" / "plot_norms.py").exists()


def test_csv_values_finite_and_rectangular(tmp_path):
    harness.run(_cfg(tmp_path, scenario__name="random_smooth", seed=11))
    for name in ("solution.csv", "norms.csv", "energy_report.csv", "constants.csv"):
        rows = _rows(tmp_path / "out" / name)
        assert len({len(r) for r in rows}) == 1
        for r in rows[1:]:
            for v in r[1:]:
                assert np.isfinite(float(v))


def test_runs_are_byte_identical(tmp_path):
    a = _cfg(tmp_path, scenario__name="random_smooth", seed=5, output__dir=tmp_path / "a")
    b = _cfg(tmp_path, scenario__name="random_smooth", seed=5, output__dir=tmp_path / "b")
    harness.run(a)
    harness.run(b)
    for name in ("solution.csv", "norms.csv", "energy_report.csv", "constants.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_converge_zero_scenario_has_no_orders(tmp_path):
    status, rows = harness.converge(_cfg(tmp_path), 3)
    assert status == 0 and len(rows) == 6
    assert all(r.err_theta == 0 and r.err_phi == 0 for r in rows)
    assert all(r.order_x is None and r.order_t is None for r in rows)
    text = (tmp_path / "out" / "convergence.csv").read_text()
    assert text.splitlines()[0] == "level,dx,dt,err_theta,err_phi,order_x,order_t"
    assert "nan" not in text.lower()


def test_converge_rejects_too_few_levels(tmp_path):
    with pytest.raises(ValueError):
        harness.converge(_cfg(tmp_path), 2)


def test_converge_flags_non_monotone(tmp_path, monkeypatch):
    errs = iter([(1e-3, 1e-3), (2e-3, 2e-3), (1e-4, 1e-4)] * 2)
    monkeypatch.setattr(harness, "_max_errors", lambda *a: next(errs))
    status, _ = harness.converge(_cfg(tmp_path, scenario__name="manufactured_poly"), 3)
    assert status == 1


def test_spatial_sweep_second_order():
    beam = BeamConfig(kernel=KernelSpec("exponential", 0.1, 1.0), n_cells=32, n_steps=2048)
    rows = harness.spatial_sweep(beam, 3)
    assert [r.order_x is None for r in rows] == [True, False, False]
    assert all(abs(r.order_x - 2.0) <= 0.3 for r in rows[1:])


def test_selftest_passes_and_writes_csv(tmp_path):
    status, results = harness.selftest(out_dir=tmp_path)
    assert status == 0, [r.name for r in results if not r.passed]
    assert len(_rows(tmp_path / "selftest.csv")) == len(results) + 1


def test_selftest_ml_budget_negative_control():
    status, results = harness.selftest(ml_max_terms=3)
    failed = {r.name for r in results if not r.passed}
    assert status == 1 and {"ml_exponential", "ml_two_parameter"} <= failed


def test_selftest_projection_negative_control():
    status, results = harness.selftest(project=False)
    failed = {r.name for r in results if not r.passed}
    assert status == 1 and failed == {"ibp_identity_i"}
