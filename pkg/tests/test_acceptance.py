"""One test per acceptance criterion, each printing a single PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import math
import warnings

import numpy as np
import pytest

from configs import write_config
from fractimo import harness, scenarios
from fractimo.cli import main
from fractimo.energy import (check_dissipation, compute_constants, verify_apriori,
                             verify_continuous_dependence, verify_ibp_identities)
from fractimo.fraccalc import (FracOrder, TimeSeries, caputo2_apply, caputo_apply,
                               mittag_leffler, mittag_leffler2)
from fractimo.gronwall import (GronwallCase, frac_gronwall_bound, gronwall_bound,
                               random_classical_case, random_fractional_case,
                               verify_hypothesis_and_bound)
from fractimo.memory import KernelSpec
from fractimo.solver import BeamConfig, CompatibilityWarning, ProblemData, solve
from oracles import classical_crank_nicolson, classical_exact
from test_fraccalc import ML_REFERENCE
from verdicts import record

KERNEL = KernelSpec("exponential", 0.1, 1.0)
CANONICAL = BeamConfig(kernel=KERNEL, n_cells=64, n_steps=512)


def _solve(cfg, data, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CompatibilityWarning)
        return solve(cfg, data, **kw)


def _suite(cfg):
    """zero, manufactured_poly and 20 seeded random_smooth scenarios."""
    out = [scenarios.zero(cfg), scenarios.manufactured_poly(cfg)]
    out += [scenarios.random_smooth(cfg, seed) for seed in range(20)]
    return out


@pytest.fixture(scope="module")
def apriori_reports():
    consts = compute_constants(CANONICAL)
    reports = []
    for scen in _suite(CANONICAL):
        traj = _solve(CANONICAL, scen.data)
        reports.append((scen.name, verify_apriori(traj, scen.data, consts),
                        traj.moment_residuals()))
    return reports


def test_criterion_01_apriori_estimate(apriori_reports):
    ok = [rep.pass_31 for _, rep, _ in apriori_reports]
    worst = max(rep.ratio_31 for _, rep, _ in apriori_reports)
    log_f = apriori_reports[0][1].log_f_star
    assert record(1, all(ok), f"{sum(ok)}/{len(ok)} runs, worst lhs/rhs={worst:.3e}, "
                              f"log F*={log_f:.1f}")


def test_criterion_02_rate_estimate(apriori_reports):
    ok = [rep.pass_31ss for _, rep, _ in apriori_reports]
    worst = max(rep.ratio_31ss for _, rep, _ in apriori_reports)
    assert record(2, all(ok), f"{sum(ok)}/{len(ok)} runs, worst lhs/rhs={worst:.3e}")


def test_criterion_03_continuous_dependence():
    cfg = CANONICAL
    base = scenarios.manufactured_poly(cfg).data
    consts = compute_constants(cfg)
    rng = np.random.default_rng(2024)
    passed, drifts = [], []
    for _ in range(20):
        pert = scenarios.random_direction(cfg, rng)
        r1 = verify_continuous_dependence(cfg, base, 1e-3 * pert, consts)
        r2 = verify_continuous_dependence(cfg, base, 1e-1 * pert, consts)
        passed.append(r1.passed and r2.passed)
        drifts.append(abs(r2.ratio - r1.ratio) / r1.ratio)
    ok = all(passed) and max(drifts) <= 1e-8
    assert record(3, ok, f"{sum(passed)}/20 directions r<=F*, "
                         f"max scaling drift={max(drifts):.2e}")


def _orders(errs):
    errs = np.asarray(errs)
    return np.log2(errs[:-1] / errs[1:])


def test_criterion_04_fractional_operators():
    n = 1024
    e1 = abs(caputo_apply(TimeSeries.from_function(lambda t: t**2, 1.0, n), FracOrder(0.5))
             - 2 / math.gamma(2.5)) / (2 / math.gamma(2.5))
    e2 = abs(caputo2_apply(TimeSeries.from_function(lambda t: t**3, 1.0, n), FracOrder(1.5))
             - 6 / math.gamma(2.5)) / (6 / math.gamma(2.5))
    levels = (256, 512, 1024)
    o1 = _orders([abs(caputo_apply(TimeSeries.from_function(lambda t: t**2, 1.0, m),
                                   FracOrder(0.5)) - 2 / math.gamma(2.5)) for m in levels])
    o2 = _orders([abs(caputo2_apply(TimeSeries.from_function(lambda t: t**3, 1.0, m),
                                    FracOrder(1.5)) - 6 / math.gamma(2.5)) for m in levels])
    ok = (e1 <= 1e-3 and e2 <= 1e-2 and np.all(np.abs(o1 - 1.5) <= 0.3)
          and np.all(np.abs(o2 - 1.5) <= 0.3))
    assert record(4, ok, f"L1 err={e1:.2e} orders={np.round(o1, 3).tolist()}, "
                         f"second-order err={e2:.2e} orders={np.round(o2, 3).tolist()}")


def test_criterion_05_mittag_leffler():
    e_exp = max(abs(mittag_leffler(1.0, x) - math.exp(x)) / math.exp(x)
                for x in (-5.0, -1.0, 0.0, 1.0, 5.0))
    e_grid = max(abs(mittag_leffler2(b, m, x) - ref) / abs(ref) for b, m, x, ref in ML_REFERENCE)
    ok = e_exp <= 1e-10 and e_grid <= 1e-10 and len(ML_REFERENCE) == 12
    assert record(5, ok, f"E_1 vs exp={e_exp:.2e}, 12-point grid={e_grid:.2e}")


def test_criterion_06_constraints(apriori_reports, tmp_path):
    worst = max(res for _, _, res in apriori_reports)
    cl = BeamConfig(alpha=1.0, classical_limit=True, n_cells=64, n_steps=512)
    worst = max(worst, _solve(cl, scenarios.classical_limit(cl).data).moment_residuals())
    pert = scenarios.random_direction(CANONICAL, np.random.default_rng(0))
    base = scenarios.manufactured_poly(CANONICAL).data
    worst = max(worst, _solve(CANONICAL, base + 1e-3 * pert).moment_residuals())
    ok = worst <= harness.CONSTRAINT_RTOL
    assert record(6, ok, f"worst |moment|/(L max|u|)={worst:.2e} over 25 runs")


def test_criterion_07_mms_convergence():
    fine_t = BeamConfig(kernel=KERNEL, n_cells=32, n_steps=4096)
    fine_x = BeamConfig(kernel=KERNEL, n_cells=128, n_steps=256)
    sx = harness.spatial_sweep(fine_t, 3)
    st = harness.temporal_sweep(fine_x, 3)
    ox = [r.order_x for r in sx[1:]]
    ot = [r.order_t for r in st[1:]]
    ok = (all(abs(o - 2.0) <= 0.3 for o in ox) and all(o >= 0.8 for o in ot)
          and harness.errors_monotone(sx) and harness.errors_monotone(st))
    assert record(7, ok, f"spatial orders={np.round(ox, 3).tolist()}, "
                         f"temporal orders={np.round(ot, 3).tolist()}")


def test_criterion_08_ibp_identities():
    res, scale = [], []
    for n in (16, 32, 64):
        cfg = BeamConfig(kernel=KERNEL, n_cells=n, n_steps=128)
        rep = verify_ibp_identities(_solve(cfg, scenarios.manufactured_poly(cfg).data), 128)
        res.append(np.abs(rep.residuals))
        scale.append(np.abs(rep.scales))
    res, scale = np.array(res), np.array(scale)
    detail, ok = [], True
    for j, name in enumerate(("i", "ii", "iii", "iv")):
        if np.all(res[:, j] <= 1e-12 * np.maximum(scale[:, j], 1.0)):
            # holds to roundoff at every level: no truncation error to shrink
            detail.append(f"({name}) exact, max={res[:, j].max():.1e}")
            continue
        order = float(np.min(_orders(res[:, j])))
        ok &= order >= 1.7
        detail.append(f"({name}) order={order:.2f}")
    cfg = BeamConfig(kernel=KERNEL, n_cells=32, n_steps=64)
    data = scenarios.manufactured_poly(cfg).data
    good = verify_ibp_identities(_solve(cfg, data), 64).relative()[0]
    bad = verify_ibp_identities(_solve(cfg, data, project=False), 64).relative()[0]
    ok &= bad >= 100 * max(good, np.finfo(float).eps)
    detail.append(f"control (i) rel={bad:.1e} vs {good:.1e}")
    assert record(8, ok, ", ".join(detail))


def test_criterion_09_gronwall():
    rng = np.random.default_rng(9)
    cls = [verify_hypothesis_and_bound(*random_classical_case(rng)) for _ in range(50)]
    frac = [verify_hypothesis_and_bound(*random_fractional_case(rng)) for _ in range(50)]
    dominated = sum(r.bound_ok for r in cls if r.hypothesis_ok)
    dominated_f = sum(r.bound_ok for r in frac if r.hypothesis_ok)
    n_hyp = sum(r.hypothesis_ok for r in cls)
    n_hyp_f = sum(r.hypothesis_ok for r in frac)

    t = np.linspace(0.0, 1.0, 401)
    dt = t[1]
    e = TimeSeries(1 + t**2, dt)
    b = TimeSeries(np.exp(-t) + 0.5, dt)
    f = frac_gronwall_bound(GronwallCase(e, b, order=1.0, b1=0.8)).values
    c = gronwall_bound(GronwallCase(e, b, a_samples=TimeSeries(np.full_like(t, 0.8), dt))).values
    unit = float(np.max(np.abs(f - c)))
    ok = (n_hyp == 50 and n_hyp_f == 50 and dominated == 50 and dominated_f == 50
          and unit <= 1e-6)
    assert record(9, ok, f"classical {dominated}/{n_hyp}, fractional {dominated_f}/{n_hyp_f} "
                         f"dominated, unit-order gap={unit:.1e}")


def test_criterion_10_classical_limit():
    cfg = BeamConfig(alpha=1.0, classical_limit=True, n_cells=64, n_steps=2000)
    traj = _solve(cfg, scenarios.classical_limit(cfg).data)
    th0, ph0 = traj.theta[0], traj.phi[0]
    cn_th, cn_ph = classical_crank_nicolson(cfg, th0, ph0, 2000)
    ex_th, ex_ph = classical_exact(cfg, th0, ph0)
    d_cn = max(np.max(np.abs(traj.theta[-1] - cn_th)), np.max(np.abs(traj.phi[-1] - cn_ph)))
    d_ex = max(np.max(np.abs(traj.theta[-1] - ex_th)), np.max(np.abs(traj.phi[-1] - ex_ph)))
    ok = d_cn <= 1e-3 and d_ex <= 1e-3
    assert record(10, ok, f"max diff vs trapezoidal={d_cn:.2e}, vs matrix exponential={d_ex:.2e}")


def _unforced(cfg, rng=None):
    nt, nx = cfg.n_steps + 1, cfg.grid.n_nodes
    z = np.zeros((nt, nx))
    if rng is None:
        p = scenarios.profile_p(cfg.grid.nodes, cfg.length)
        return ProblemData(z, z, p, 0 * p, p, 0 * p)
    d = scenarios.random_direction(cfg, rng)
    return ProblemData(z, z, d.init_disp, d.init_disp_rate, d.init_rot, d.init_rot_rate)


@pytest.mark.xfail(strict=True, reason="the functional is not monotone for unit "
                   "coefficients; see the decisions ledger")
def test_criterion_11_dissipation():
    cfg = CANONICAL
    rng = np.random.default_rng(11)
    reports = [check_dissipation(_solve(cfg, _unforced(cfg)))]
    reports += [check_dissipation(_solve(cfg, _unforced(cfg, rng))) for _ in range(5)]
    worst = max(r.max_increase for r in reports)
    ok = all(r.passed for r in reports)
    assert record(11, ok, f"{sum(r.passed for r in reports)}/{len(reports)} runs monotone, "
                          f"worst single-step increase={worst:.2e} x E0 (tol 1e-6)")


def test_criterion_12_determinism(tmp_path):
    outputs = []
    for tag in ("a", "b"):
        cfg = write_config(tmp_path, name=f"{tag}.cfg", output__dir=str(tmp_path / tag),
                           scenario__name="random_smooth", seed=42, output__plot="true")
        assert main(["run", str(cfg)]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted((tmp_path / tag).iterdir())})
    ok = outputs[0] == outputs[1] and len(outputs[0]) >= 4
    assert record(12, ok, f"{len(outputs[0])} files byte-identical across two runs")
