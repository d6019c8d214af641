"""Scenario runs, convergence studies, energy checks and the self-test.

Every entry point returns an exit status (0 pass, 1 check failure) and
writes its CSV files under the configured output directory. Floats are
written with ``repr`` so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import scenarios
from .config import RunConfig
from .energy import (EnergyConstants, compute_constants, verify_apriori,
                     verify_continuous_dependence,
                     verify_ibp_identities, write_energy_csv)
from .fraccalc import (ML_MAX_TERMS, ConvergenceError, FracOrder, TimeSeries,
                       caputo2_apply, caputo_apply, mittag_leffler, mittag_leffler2,
                       rl_integral)
from .gronwall import (frac_gronwall_bound, gronwall_bound, random_classical_case,
                       random_fractional_case, verify_hypothesis_and_bound, GronwallCase)
from .memory import KernelSpec, memory_convolution
from .solver import BeamConfig, CompatibilityWarning, Trajectory, solve
from .spatial import Grid, d2x, ix, moment0, moment1, project_constraints

__all__ = [
    "CONSTRAINT_RTOL",
    "CheckResult",
    "ConvergenceRow",
    "run",
    "run_energy",
    "run_perturb",
    "spatial_sweep",
    "temporal_sweep",
    "converge",
    "selftest",
]

logger = logging.getLogger(__name__)

#: Moment residual allowed on every stored step, relative to ``L max|u|``.
CONSTRAINT_RTOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool

    def row(self) -> tuple:
        return (self.name, self.lhs, self.rhs, self.ratio, self.passed)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} in CSV output")
    return repr(x) if x != 0 else "0"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else _fmt(v) for v in r])


# {{{ traces


def _solve_quiet(config: BeamConfig, data, **kw) -> Trajectory:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CompatibilityWarning)
        traj = solve(config, data, **kw)
    for w in caught:
        logger.info("%s", w.message)
    return traj


def write_solution(path: Path, traj: Trajectory, stride: int):
    idx = list(range(0, traj.theta.shape[0], stride))
    if idx[-1] != traj.theta.shape[0] - 1:
        idx.append(traj.theta.shape[0] - 1)
    x, t = traj.grid.nodes, traj.times

    def rows():
        for n in idx:
            for j in range(x.shape[0]):
                yield (t[n], x[j], traj.theta[n, j], traj.phi[n, j])

    _write_csv(path, ["t", "x", "theta", "phi"], rows())


def write_norms(path: Path, report):
    rows = zip(report.times, report.l2_theta, report.l2_phi,
               report.b21_theta_t, report.b21_phi_t)
    _write_csv(path, ["t", "l2_theta", "l2_phi", "b21_theta_t", "b21_phi_t"], rows)


def write_constants(path: Path, constants: EnergyConstants):
    rows = [("w_star", constants.w_star), ("omega", constants.omega),
            ("log10_m_const", constants.log10_m_const),
            ("log10_f_star", constants.log10_f_star)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "value"])
        for name, v in rows:
            w.writerow([name, _fmt(v)])


PLOT_SCRIPT = '''"""Plot the traces written next to this script (needs matplotlib)."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).parent
with open(here / "norms.csv") as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
for key in ("l2_theta", "l2_phi"):
    ax[0].plot(t, [float(r[key]) for r in rows], label=key)
for key in ("b21_theta_t", "b21_phi_t"):
    ax[1].plot(t, [float(r[key]) for r in rows], label=key)
for a in ax:
    a.set_xlabel("t")
    a.legend()
fig.tight_layout()
fig.savefig(here / "norms.png", dpi=120)
'''


# }}}


# {{{ checks


def constraint_check(traj: Trajectory) -> CheckResult:
    worst = traj.moment_residuals()
    return CheckResult("constraints", worst, CONSTRAINT_RTOL, worst / CONSTRAINT_RTOL,
                       worst <= CONSTRAINT_RTOL)


def mms_check(traj: Trajectory, scenario, rtol: float) -> list[CheckResult]:
    th, ph = scenario.exact(traj.times, traj.grid.nodes)
    out = []
    for name, num, ref in (("mms_theta", traj.theta, th), ("mms_phi", traj.phi, ph)):
        err = float(np.max(np.abs(num - ref)))
        size = float(np.max(np.abs(ref)))
        ratio = err / size if size > 0 else err
        out.append(CheckResult(name, err, size, ratio, ratio <= rtol))
    return out


def run_energy(cfg: RunConfig) -> tuple[int, list[CheckResult]]:
    """Solve the scenario and check both a priori estimates and the constraints."""
    beam = cfg.beam
    scen = scenarios.build(cfg.scenario, beam, cfg.seed, cfg.params)
    traj = _solve_quiet(beam, scen.data)
    constants = compute_constants(beam)
    report = verify_apriori(traj, scen.data, constants)
    checks = [CheckResult(*r) for r in report.rows()] + [constraint_check(traj)]
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_energy_csv([c.row() for c in checks], out / "energy_report.csv")
    write_constants(out / "constants.csv", constants)
    return (0 if all(c.passed for c in checks) else 1), checks


def _perturbations(cfg: RunConfig):
    rng = np.random.default_rng(cfg.seed)
    eps = cfg.param("epsilon", default=1e-3)
    modes = int(cfg.param("modes", default=3))
    for _ in range(int(cfg.param("n_directions", default=20))):
        yield eps * scenarios.random_direction(cfg.beam, rng, modes=modes)


def run_perturb(cfg: RunConfig) -> tuple[int, list[CheckResult]]:
    """Continuous-dependence ratios over seeded perturbation directions.

    The last row compares the ratio of the first direction with the ratio of
    the same direction scaled by 10 (linearity: they must agree to 1e-8).
    """
    beam = cfg.beam
    base = scenarios.build(cfg.scenario, beam, cfg.seed, cfg.params).data
    constants = compute_constants(beam)
    checks, first = [], None
    for k, pert in enumerate(_perturbations(cfg)):
        rep = verify_continuous_dependence(beam, base, pert, constants)
        checks.append(CheckResult(f"dependence_{k}", rep.lhs, rep.rhs, rep.ratio,
                                  rep.passed))
        if first is None:
            first = (pert, rep.ratio)
    if first is not None:
        scaled = verify_continuous_dependence(beam, base, 10.0 * first[0], constants)
        drift = abs(scaled.ratio - first[1]) / first[1]
        checks.append(CheckResult("dependence_scaling", scaled.ratio, first[1], drift,
                                  drift <= 1e-8))
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_energy_csv([c.row() for c in checks], out / "energy_report.csv")
    write_constants(out / "constants.csv", constants)
    return (0 if all(c.passed for c in checks) else 1), checks


def run(cfg: RunConfig) -> tuple[int, list[CheckResult]]:
    """Solve, verify, and write every trace of one scenario."""
    beam = cfg.beam
    scen = scenarios.build(cfg.scenario, beam, cfg.seed, cfg.params)
    traj = _solve_quiet(beam, scen.data)
    constants = compute_constants(beam)
    report = verify_apriori(traj, scen.data, constants)

    checks = [CheckResult(*r) for r in report.rows()] + [constraint_check(traj)]
    if scen.exact is not None and cfg.scenario == "manufactured_poly":
        checks += mms_check(traj, scen, cfg.param("mms_rtol"))
    if cfg.scenario == "perturb_pair":
        rng = np.random.default_rng(cfg.seed)
        pert = cfg.param("epsilon") * scenarios.random_direction(
            beam, rng, modes=int(cfg.param("modes")))
        rep = verify_continuous_dependence(beam, scen.data, pert, constants)
        checks.append(CheckResult(*rep.row()))

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_solution(out / "solution.csv", traj, cfg.snapshot_stride)
    write_norms(out / "norms.csv", report)
    write_energy_csv([c.row() for c in checks], out / "energy_report.csv")
    write_constants(out / "constants.csv", constants)
    if cfg.plot:
        (out / "plot_norms.py").write_text(PLOT_SCRIPT)
    for c in checks:
        logger.info("%-20s %s", c.name, "PASS" if c.passed else "FAIL")
    return (0 if all(c.passed for c in checks) else 1), checks


# }}}


# {{{ convergence


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    dx: float
    dt: float
    err_theta: float
    err_phi: float
    order_x: float | None = None
    order_t: float | None = None

    def as_tuple(self):
        return (self.level, self.dx, self.dt, self.err_theta, self.err_phi,
                self.order_x, self.order_t)


def _max_errors(beam: BeamConfig, name: str, params: dict, seed: int):
    scen = scenarios.build(name, beam, seed, params)
    if scen.exact is None:
        raise ValueError(f"scenario {name!r} has no exact solution to converge to")
    traj = _solve_quiet(beam, scen.data)
    th, ph = scen.exact(traj.times, traj.grid.nodes)
    return float(np.max(np.abs(traj.theta - th))), float(np.max(np.abs(traj.phi - ph)))


def _order(e_coarse, e_fine, ratio):
    if e_coarse <= 0 or e_fine <= 0:
        return None
    return math.log(e_coarse / e_fine) / math.log(ratio)


def _sweep(beam, levels, name, params, seed, axis):
    rows = []
    prev = None
    for i in range(levels):
        shrink = 2 ** (levels - 1 - i)
        if axis == "x":
            if beam.n_cells % shrink or beam.n_cells // shrink < 8:
                raise ValueError(f"n_cells={beam.n_cells} too coarse for {levels} levels")
            b = beam.with_resolution(n_cells=beam.n_cells // shrink)
        else:
            if beam.n_steps % shrink or beam.n_steps // shrink < 2:
                raise ValueError(f"n_steps={beam.n_steps} too coarse for {levels} levels")
            b = beam.with_resolution(n_steps=beam.n_steps // shrink)
        et, ep = _max_errors(b, name, params, seed)
        order = None
        if prev is not None:
            order = _order(max(prev), max(et, ep), 2.0)
        rows.append(ConvergenceRow(i, b.grid.dx, b.dt, et, ep,
                                   order if axis == "x" else None,
                                   order if axis == "t" else None))
        prev = (et, ep)
    return rows


def spatial_sweep(beam: BeamConfig, levels: int, name: str = "manufactured_poly",
                  params: dict | None = None, seed: int = 0) -> list[ConvergenceRow]:
    """Halve ``dx`` ``levels - 1`` times up to ``beam.n_cells`` at fixed ``dt``."""
    return _sweep(beam, levels, name, params or {}, seed, "x")


def temporal_sweep(beam: BeamConfig, levels: int, name: str = "manufactured_poly",
                   params: dict | None = None, seed: int = 0) -> list[ConvergenceRow]:
    """Halve ``dt`` ``levels - 1`` times up to ``beam.n_steps`` at fixed ``dx``."""
    return _sweep(beam, levels, name, params or {}, seed, "t")


def errors_monotone(rows: list[ConvergenceRow]) -> bool:
    errs = [max(r.err_theta, r.err_phi) for r in rows]
    if all(e == 0 for e in errs):
        return True
    return all(b < a for a, b in zip(errs, errs[1:]))


def converge(cfg: RunConfig, levels: int) -> tuple[int, list[ConvergenceRow]]:
    """Spatial sweep then temporal sweep; the config resolution is the finest level."""
    if levels < 3:
        raise ValueError("converge needs at least 3 levels")
    sx = spatial_sweep(cfg.beam, levels, cfg.scenario, cfg.params, cfg.seed)
    st = temporal_sweep(cfg.beam, levels, cfg.scenario, cfg.params, cfg.seed)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "convergence.csv",
               ["level", "dx", "dt", "err_theta", "err_phi", "order_x", "order_t"],
               [r.as_tuple() for r in sx + st])
    ok = errors_monotone(sx) and errors_monotone(st)
    if not ok:
        logger.warning("errors do not decrease monotonically under refinement")
    return (0 if ok else 1), sx + st


# }}}


# {{{ self-test


def _ml_checks(max_terms: int):
    import mpmath

    def oracle(beta, mu, x):
        with mpmath.workdps(60):
            return float(mpmath.nsum(
                lambda k: mpmath.mpf(x) ** k / mpmath.gamma(beta * k + mu), [0, mpmath.inf]))

    def exp_check():
        worst = 0.0
        for x in (-5.0, -1.0, 0.0, 1.0, 5.0):
            worst = max(worst, abs(mittag_leffler(1.0, x, max_terms=max_terms)
                                   - math.exp(x)) / math.exp(x))
        return worst, 1e-10

    def two_param_check():
        worst = 0.0
        for beta, mu, x in ((0.5, 1.0, -2.0), (0.8, 0.8, 3.0), (1.5, 2.0, -4.0)):
            ref = oracle(beta, mu, x)
            worst = max(worst, abs(mittag_leffler2(beta, mu, x, max_terms=max_terms) - ref)
                        / max(abs(ref), 1e-300))
        return worst, 1e-10

    return [("ml_exponential", exp_check), ("ml_two_parameter", two_param_check)]


def _operator_checks():
    def caputo_l1():
        n = 256
        ts = TimeSeries.from_function(lambda t: t**2, 1.0, n)
        exact = 2.0 / math.gamma(2.5)
        return abs(caputo_apply(ts, FracOrder(0.5)) - exact) / exact, 1e-3

    def caputo_second():
        ts = TimeSeries.from_function(lambda t: t**3, 1.0, 256)
        exact = 6.0 / math.gamma(2.5)
        return abs(caputo2_apply(ts, FracOrder(1.5)) - exact) / exact, 1e-2

    def rl_constant():
        ts = TimeSeries(np.ones(65), 1 / 64)
        exact = 1.0 / math.gamma(1.7)
        return abs(rl_integral(ts, FracOrder(0.7, "rl")) - exact), 1e-12

    def memory_exp():
        spec = KernelSpec("exponential", 0.3, 2.0)
        k = spec.sample(1 / 512, 512)
        val = float(memory_convolution(np.ones((513, 1)), k, 512)[0])
        exact = 0.3 * (1 - math.exp(-2.0)) / 2.0
        return abs(val - exact), 1e-5

    def spatial_ops():
        g = Grid(2.0, 64)
        x = g.nodes
        e1 = np.max(np.abs(ix(np.ones_like(x), g) - x))
        e2 = np.max(np.abs(d2x(x**3, g) - 6 * x))
        u = project_constraints(np.exp(x), g)
        e3 = max(abs(moment0(u, g)), abs(moment1(u, g)))
        return float(max(e1, e2, e3)), 1e-10

    return [("caputo_l1", caputo_l1), ("caputo_second_order", caputo_second),
            ("rl_integral", rl_constant), ("memory_convolution", memory_exp),
            ("spatial_operators", spatial_ops)]


def _gronwall_checks():
    def classical_suite():
        rng = np.random.default_rng(7)
        bad = sum(not verify_hypothesis_and_bound(*random_classical_case(rng)).passed
                  for _ in range(10))
        return float(bad), 0.0

    def fractional_suite():
        rng = np.random.default_rng(8)
        bad = sum(not verify_hypothesis_and_bound(*random_fractional_case(rng)).passed
                  for _ in range(10))
        return float(bad), 0.0

    def unit_order():
        t = np.linspace(0.0, 1.0, 201)
        dt = t[1]
        b = TimeSeries(1 + np.cos(2 * t) ** 2, dt)
        e = TimeSeries(np.exp(t), dt)
        frac = frac_gronwall_bound(GronwallCase(e, b, order=1.0, b1=0.5)).values
        cls = gronwall_bound(GronwallCase(e, b, a_samples=TimeSeries(0.5 + 0 * t, dt))).values
        return float(np.max(np.abs(frac - cls))), 1e-6

    return [("gronwall_classical", classical_suite),
            ("gronwall_fractional", fractional_suite),
            ("gronwall_unit_order", unit_order)]


def _ibp_check(project: bool):
    def ibp():
        beam = BeamConfig(kernel=KernelSpec("exponential", 0.1, 1.0), n_cells=32, n_steps=64)
        scen = scenarios.manufactured_poly(beam)
        traj = _solve_quiet(beam, scen.data, project=project)
        return verify_ibp_identities(traj, beam.n_steps).relative()[0], 1e-8

    return [("ibp_identity_i", ibp)]


def selftest(*, ml_max_terms: int = ML_MAX_TERMS, project: bool = True,
             out_dir: Path | None = None) -> tuple[int, list[CheckResult]]:
    """Run every oracle check; ``ml_max_terms`` and ``project`` are negative-control knobs."""
    checks = (_ml_checks(ml_max_terms) + _operator_checks() + _gronwall_checks()
              + _ibp_check(project))
    results = []
    for name, fn in checks:
        try:
            value, tol = fn()
            ok = bool(value <= tol)
        except (ConvergenceError, ArithmeticError) as exc:
            logger.info("%s: %s", name, exc)
            value, tol, ok = math.inf, 0.0, False
        results.append(CheckResult(name, value, tol, 0.0, ok))
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = [(r.name, r.lhs if math.isfinite(r.lhs) else -1.0, r.rhs,
                 r.lhs / r.rhs if r.rhs > 0 and math.isfinite(r.lhs) else 0.0, r.passed)
                for r in results]
        write_energy_csv(rows, out_dir / "selftest.csv")
    return (0 if all(r.passed for r in results) else 1), results


# }}}

# vim: fdm=marker
