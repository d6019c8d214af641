"""Norms, the explicit energy constants and numerical checks of the energy bounds.

The stability constant ``F*`` grows like ``E_{a,a}(omega T^a)`` with
``omega ~ W* exp(W* T)`` and overflows double precision for every
physically sensible parameter set. :class:`EnergyConstants` therefore keeps
``log M`` and ``log F*``; the inequalities ``lhs <= F* rhs`` are decided in
log space.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .fraccalc import FracOrder, TimeSeries, log_mittag_leffler2, rl_integral
from .solver import BeamConfig, ProblemData, Trajectory, solve
from .spatial import Grid, SpatialField, d2x, inner, ix, ix2

__all__ = [
    "UndefinedRatioError",
    "EnergyConstants",
    "EnergyReport",
    "DependenceReport",
    "IdentityReport",
    "DissipationReport",
    "norm_L2",
    "norm_L2_spacetime",
    "norm_B21",
    "norm_sup_L2",
    "norm_data",
    "w_star",
    "compute_constants",
    "bounded_by",
    "verify_apriori",
    "verify_continuous_dependence",
    "verify_ibp_identities",
    "dissipation_energy",
    "check_dissipation",
    "write_energy_csv",
]


class UndefinedRatioError(ZeroDivisionError):
    """The continuous-dependence ratio has a zero denominator."""


# {{{ norms


def _values(field, grid):
    if isinstance(field, SpatialField):
        return field.values, field.grid
    if grid is None:
        raise TypeError("a grid is needed for raw arrays")
    return np.asarray(field, dtype=float), grid


def norm_L2(field, grid: Grid | None = None):
    """Trapezoidal L2(0, L) norm; leading axes (e.g. time) are kept."""
    u, grid = _values(field, grid)
    return np.sqrt(inner(u, u, grid))


def norm_L2_spacetime(values, grid: Grid, dt: float) -> float:
    """L2 norm over (0, T) x (0, L), trapezoidal in both directions."""
    u = np.asarray(values, dtype=float)
    if u.ndim != 2:
        raise ValueError("space-time norm needs an array of shape (n_steps + 1, n_nodes)")
    return float(np.sqrt(trapezoid(inner(u, u, grid), dx=dt)))


def norm_B21(field, grid: Grid | None = None):
    """``||ix(field)||``, the norm of the space B_2^1."""
    u, grid = _values(field, grid)
    return norm_L2(ix(u, grid), grid)


def norm_sup_L2(component, grid: Grid | None = None) -> float:
    """Maximum over the stored steps of the L2 norm."""
    u, grid = _values(component, grid)
    return float(np.max(norm_L2(np.atleast_2d(u), grid)))


def norm_data(data: ProblemData, config: BeamConfig) -> float:
    """Squared data norm: forcing in L2 of space-time, initial fields in L2."""
    g, dt = config.grid, config.dt
    total = norm_L2_spacetime(data.forcing_F, g, dt) ** 2
    total += norm_L2_spacetime(data.forcing_G, g, dt) ** 2
    for name in ProblemData.INITIAL:
        total += float(norm_L2(getattr(data, name), g)) ** 2
    return total


# }}}


# {{{ constants


@dataclass(frozen=True)
class EnergyConstants:
    """``W*``, ``omega`` and the logarithms of ``M`` and ``F*``."""

    w_star: float
    omega: float
    log_m_const: float
    log_f_star: float
    alpha: float
    horizon: float

    def __post_init__(self):
        for name in ("w_star", "omega"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def m_const(self) -> float:
        return _exp_or_inf(self.log_m_const)

    @property
    def f_star(self) -> float:
        return _exp_or_inf(self.log_f_star)

    @property
    def log10_f_star(self) -> float:
        return self.log_f_star / math.log(10.0)

    @property
    def log10_m_const(self) -> float:
        return self.log_m_const / math.log(10.0)


def _exp_or_inf(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def w_star(config: BeamConfig) -> float:
    """The max/min quotient defining ``W*``."""
    c, rep = config, config.kernel_report
    T, L, a = c.horizon, c.length, c.alpha
    # Gamma(1-a)(1-a) = Gamma(2-a); the second form stays finite at a = 1
    frac = T ** (1.0 - a) * L**2 / (4.0 * math.gamma(2.0 - a))
    num = max(
        c.kappa1**2 / 2 + T / c.kappa2 * rep.sup_m2 + 0.5
        + T**2 / 2 * rep.sup_dm2 + rep.m_at_0,
        1.5,
        c.kappa1 / 2 + L**2 / 4,
        c.kappa2 / 4,
        c.rho1 * frac,
        c.rho2 * frac,
    )
    den = min(c.rho1 / 2, c.rho2 / 2, c.kappa1 / 2, c.kappa2 / 2, 0.5)
    return num / den


def compute_constants(config: BeamConfig) -> EnergyConstants:
    """``W*``, ``omega``, ``M`` (at ``t = T``) and ``F*``."""
    a, T = config.alpha, config.horizon
    ws = w_star(config)
    omega = ws * (ws * math.exp(ws * T) + 1.0)
    lead = max(1.0, T**a / (a * math.gamma(a)))
    log_m = (math.lgamma(a) + log_mittag_leffler2(a, a, omega * T**a) + math.log(lead))
    log_f = log_m + math.log(omega) + math.log(lead)
    return EnergyConstants(ws, omega, log_m, log_f, a, T)


def bounded_by(lhs: float, rhs: float, log_factor: float) -> bool:
    """``lhs <= exp(log_factor) * rhs`` for nonnegative ``lhs``, ``rhs``."""
    if lhs < 0 or rhs < 0:
        raise ValueError("norm quantities must be nonnegative")
    if lhs == 0.0:
        return True
    if rhs == 0.0:
        return False
    return math.log(lhs) - math.log(rhs) <= log_factor


# }}}


# {{{ a priori estimates


@dataclass(frozen=True)
class EnergyReport:
    """Both sides of the two a priori estimates plus per-step norm traces.

    ``rhs_*`` hold the squared data norm; the bound itself is ``F* rhs``.
    """

    lhs_31: float
    rhs_31: float
    lhs_31ss: float
    rhs_31ss: float
    log_f_star: float
    pass_31: bool
    pass_31ss: bool
    times: np.ndarray = field(repr=False)
    l2_theta: np.ndarray = field(repr=False)
    l2_phi: np.ndarray = field(repr=False)
    b21_theta_t: np.ndarray = field(repr=False)
    b21_phi_t: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.pass_31 and self.pass_31ss

    @staticmethod
    def _ratio(lhs, rhs):
        if lhs == 0.0:
            return 0.0
        return lhs / rhs if rhs > 0 else math.inf

    @property
    def ratio_31(self) -> float:
        return self._ratio(self.lhs_31, self.rhs_31)

    @property
    def ratio_31ss(self) -> float:
        return self._ratio(self.lhs_31ss, self.rhs_31ss)

    def log_margin(self, which: str = "31") -> float:
        """``log F* - log(lhs / rhs)``; positive means PASS with room to spare."""
        r = self.ratio_31 if which == "31" else self.ratio_31ss
        return math.inf if r == 0.0 else self.log_f_star - math.log(r)

    def rows(self) -> list[tuple]:
        return [
            ("apriori_sup_l2", self.lhs_31, self.rhs_31, self.ratio_31, self.pass_31),
            ("apriori_rate_b21", self.lhs_31ss, self.rhs_31ss, self.ratio_31ss,
             self.pass_31ss),
        ]


def verify_apriori(trajectory: Trajectory, data: ProblemData,
                   constants: EnergyConstants) -> EnergyReport:
    cfg, g = trajectory.config, trajectory.grid
    l2_th = norm_L2(trajectory.theta, g)
    l2_ph = norm_L2(trajectory.phi, g)
    b21_th = norm_B21(trajectory.theta_rate, g)
    b21_ph = norm_B21(trajectory.phi_rate, g)

    lhs = float(np.max(l2_th) ** 2 + np.max(l2_ph) ** 2)
    rhs = norm_data(data, cfg)

    rate = TimeSeries(b21_th**2 + b21_ph**2, cfg.dt)
    if cfg.alpha < 1.0:
        lhs_ss = rl_integral(rate, FracOrder(1.0 - cfg.alpha, "rl"))
    else:
        # order-zero integral is the identity
        lhs_ss = float(rate.values[-1])
    lhs_ss = max(lhs_ss, 0.0)

    log_f = constants.log_f_star
    return EnergyReport(
        lhs_31=lhs, rhs_31=rhs, lhs_31ss=lhs_ss, rhs_31ss=rhs, log_f_star=log_f,
        pass_31=bounded_by(lhs, rhs, log_f), pass_31ss=bounded_by(lhs_ss, rhs, log_f),
        times=cfg.times, l2_theta=l2_th, l2_phi=l2_ph,
        b21_theta_t=b21_th, b21_phi_t=b21_ph,
    )


@dataclass(frozen=True)
class DependenceReport:
    lhs: float
    rhs: float
    ratio: float
    log_f_star: float

    @property
    def passed(self) -> bool:
        return bounded_by(self.lhs, self.rhs, self.log_f_star)

    def row(self) -> tuple:
        return ("continuous_dependence", self.lhs, self.rhs, self.ratio, self.passed)


def verify_continuous_dependence(config: BeamConfig, data: ProblemData,
                                 perturbation: ProblemData,
                                 constants: EnergyConstants) -> DependenceReport:
    """Ratio of the solution change to the perturbation size, both squared."""
    rhs = norm_data(perturbation, config)
    if rhs == 0.0:
        raise UndefinedRatioError("zero perturbation: the dependence ratio is undefined")
    base = solve(config, data)
    moved = solve(config, data + perturbation)
    g = config.grid
    lhs = (norm_sup_L2(moved.theta - base.theta, g) ** 2
           + norm_sup_L2(moved.phi - base.phi, g) ** 2)
    return DependenceReport(lhs, rhs, lhs / rhs, constants.log_f_star)


# }}}


# {{{ integration-by-parts identities


@dataclass(frozen=True)
class IdentityReport:
    """Residuals of the four identities at one step, with a size for each."""

    step: int
    residuals: tuple[float, float, float, float]
    scales: tuple[float, float, float, float]

    NAMES = ("rate_duality", "theta_stiffness", "phi_stiffness", "coupling")

    def relative(self) -> tuple[float, ...]:
        return tuple(abs(r) / s if s > 0 else abs(r)
                     for r, s in zip(self.residuals, self.scales))

    def as_dict(self) -> dict:
        return dict(zip(self.NAMES, self.residuals))


def verify_ibp_identities(trajectory: Trajectory, n: int) -> IdentityReport:
    """Discrete forms of the four integration-by-parts identities at step ``n``.

    Time derivatives are taken as ``(u^n - u^{n-1}) / dt`` and paired with
    the average of the two levels, which makes
    ``(ubar, du/dt) = (||u^n||^2 - ||u^{n-1}||^2) / (2 dt)`` exact, so every
    residual is a purely spatial discretization error.
    """
    if n < 1 or n >= trajectory.theta.shape[0]:
        raise ValueError(f"step must lie in [1, {trajectory.theta.shape[0] - 1}], got {n}")
    cfg, g, dt = trajectory.config, trajectory.grid, trajectory.config.dt
    th0, th1 = trajectory.theta[n - 1], trajectory.theta[n]
    ph0, ph1 = trajectory.phi[n - 1], trajectory.phi[n]
    th_t, ph_t = (th1 - th0) / dt, (ph1 - ph0) / dt
    th_bar, ph_bar = 0.5 * (th0 + th1), 0.5 * (ph0 + ph1)

    def ddt_sq(a, b):
        return (inner(b, b, g) - inner(a, a, g)) / (2 * dt)

    i2_th_t, i2_ph_t = ix2(th_t, g), ix2(ph_t, g)

    lhs_i = inner(th_t, i2_th_t, g)
    rhs_i = -inner(ix(th_t, g), ix(th_t, g), g)
    lhs_ii = cfg.kappa1 * inner(d2x(th_bar, g), i2_th_t, g)
    rhs_ii = cfg.kappa1 * ddt_sq(th0, th1)
    lhs_iii = cfg.kappa2 * inner(d2x(ph_bar, g), i2_ph_t, g)
    rhs_iii = cfg.kappa2 * ddt_sq(ph0, ph1)
    lhs_iv = -cfg.kappa1 * inner(ph_bar, i2_ph_t, g)
    rhs_iv = cfg.kappa1 * ddt_sq(ix(ph0, g), ix(ph1, g))

    pairs = ((lhs_i, rhs_i), (lhs_ii, rhs_ii), (lhs_iii, rhs_iii), (lhs_iv, rhs_iv))
    return IdentityReport(
        step=n,
        residuals=tuple(float(a - b) for a, b in pairs),
        scales=tuple(float(max(abs(a), abs(b))) for a, b in pairs),
    )


# }}}


# {{{ dissipation


@dataclass(frozen=True)
class DissipationReport:
    energy: np.ndarray
    max_increase: float      # largest single-step increase, relative to energy[0]
    total_increase: float    # sum of all positive increments, relative
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_increase <= self.tolerance


def dissipation_energy(trajectory: Trajectory) -> np.ndarray:
    """``kappa1 ||theta||^2 + kappa2 ||phi||^2 + ||ix(phi)||^2`` at every step."""
    c, g = trajectory.config, trajectory.grid
    th, ph = trajectory.theta, trajectory.phi
    iph = ix(ph, g)
    return c.kappa1 * inner(th, th, g) + c.kappa2 * inner(ph, ph, g) + inner(iph, iph, g)


def check_dissipation(trajectory: Trajectory, rtol: float = 1e-6) -> DissipationReport:
    e = dissipation_energy(trajectory)
    e0 = float(e[0])
    inc = np.diff(e)
    scale = e0 if e0 > 0 else 1.0
    return DissipationReport(
        energy=e,
        max_increase=float(max(inc.max(initial=0.0), 0.0) / scale),
        total_increase=float(inc[inc > 0].sum() / scale),
        tolerance=rtol,
    )


# }}}


def write_energy_csv(rows, path=None) -> str:
    """One row per check: ``check, lhs, rhs, ratio, pass``.

    ``rhs`` is the squared data norm and ``pass`` records ``ratio <= F*``.
    Returns the text; writes it to ``path`` when given.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "lhs", "rhs", "ratio", "pass"])
    for name, lhs, rhs, ratio, ok in rows:
        w.writerow([name, _fmt(lhs), _fmt(rhs), _fmt(ratio), int(bool(ok))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _fmt(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} in CSV output")
    return repr(x) if x != 0 else "0"

# vim: fdm=marker
