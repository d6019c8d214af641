"""Classical and fractional Gronwall bounds and a checker for their hypotheses.

Classical: if ``E' <= A E + B`` with ``A, B >= 0`` then
``E(s) <= exp(int_0^s A) (E(0) + int_0^s B)``.

Fractional (constant ``b1 > 0``, order ``beta`` in (0, 1]): if
``D^beta Q <= b1 Q + b2`` then
``Q(t) <= Q(0) E_beta(b1 t^beta) + Gamma(beta) E_{beta,beta}(b1 t^beta) I^beta b2(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .fraccalc import (FracOrder, TimeSeries, l1_weights, mittag_leffler,
                       mittag_leffler2, rl_integral_series)

__all__ = [
    "GronwallCase",
    "GronwallReport",
    "gronwall_bound",
    "frac_gronwall_bound",
    "caputo_series",
    "verify_hypothesis_and_bound",
    "random_classical_case",
    "random_fractional_case",
]

#: Relative tolerance of the pointwise bound comparison (roundoff only).
BOUND_RTOL = 1e-9
#: Multiple of the truncation estimate allowed as hypothesis slack.
SLACK_FACTOR = 10.0


def _as_beta(order) -> float | None:
    if order is None:
        return None
    beta = float(order.beta if isinstance(order, FracOrder) else order)
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"Gronwall order must lie in (0,1], got {beta}")
    return beta


@dataclass(frozen=True)
class GronwallCase:
    """Samples of ``E`` (or ``Q``) and the coefficients on one uniform grid.

    Classical cases use ``a_samples`` (``A``) and ``b_samples`` (``B``).
    Fractional cases set ``order`` and the constant ``b1``; ``b_samples``
    then holds ``b2``.
    """

    e_samples: TimeSeries
    b_samples: TimeSeries
    a_samples: TimeSeries | None = None
    order: FracOrder | float | None = None
    b1: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "order", _as_beta(self.order))
        n, dt = len(self.e_samples), self.e_samples.dt
        series = [self.b_samples] + ([self.a_samples] if self.a_samples is not None else [])
        for s in series:
            if len(s) != n or not math.isclose(s.dt, dt):
                raise ValueError("all samples must share one time grid")
            if np.any(s.values < 0):
                raise ValueError("Gronwall coefficients must be nonnegative")
        if self.is_fractional:
            if self.b1 is None or not self.b1 > 0:
                raise ValueError("fractional case needs a positive constant b1")
        elif self.a_samples is None:
            raise ValueError("classical case needs a_samples")

    @property
    def is_fractional(self) -> bool:
        return self.order is not None

    @property
    def dt(self) -> float:
        return self.e_samples.dt

    @property
    def times(self) -> np.ndarray:
        return self.e_samples.times


def gronwall_bound(case: GronwallCase) -> TimeSeries:
    if case.is_fractional:
        raise ValueError("gronwall_bound needs a classical case")
    dt = case.dt
    int_a = cumulative_trapezoid(case.a_samples.values, dx=dt, initial=0.0)
    int_b = cumulative_trapezoid(case.b_samples.values, dx=dt, initial=0.0)
    return TimeSeries(np.exp(int_a) * (case.e_samples.values[0] + int_b), dt)


def frac_gronwall_bound(case: GronwallCase) -> TimeSeries:
    if not case.is_fractional:
        raise ValueError("frac_gronwall_bound needs a fractional case")
    beta, b1, dt = case.order, case.b1, case.dt
    z = b1 * case.times**beta
    e1 = np.array([mittag_leffler(beta, x) for x in z])
    e2 = np.array([mittag_leffler2(beta, beta, x) for x in z])
    integral = rl_integral_series(case.b_samples, FracOrder(beta, "rl")).values
    q0 = case.e_samples.values[0]
    return TimeSeries(q0 * e1 + math.gamma(beta) * e2 * integral, dt)


def caputo_series(values: np.ndarray, beta: float, dt: float) -> np.ndarray:
    """L1 Caputo derivative at every sample (the first entry is left at 0)."""
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    for n in range(1, v.shape[0]):
        out[n] = l1_weights(n, beta, dt) @ v[: n + 1]
    return out


def _derivative(values, beta, dt):
    if beta is None or beta == 1.0:
        return np.gradient(values, dt, edge_order=2)
    return caputo_series(values, beta, dt)


def _truncation_estimate(values, beta, dt) -> np.ndarray:
    """``|D_h - D_2h|`` at the shared samples; odd samples take the next one."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 5:
        return np.zeros_like(v)
    fine = _derivative(v, beta, dt)
    coarse = _derivative(v[::2], beta, 2 * dt)
    diff = np.abs(fine[::2] - coarse)
    k = np.minimum((np.arange(v.shape[0]) + 1) // 2, diff.shape[0] - 1)
    return diff[k]


@dataclass(frozen=True)
class GronwallReport:
    hypothesis_ok: bool
    hypothesis_margin: float    # min of rhs + slack - derivative
    bound_ok: bool | None       # None when the hypothesis failed
    bound_margin: float         # min of bound - E (nan when not asserted)
    bound: TimeSeries = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.hypothesis_ok and bool(self.bound_ok)


def verify_hypothesis_and_bound(case: GronwallCase,
                                derivative_samples=None) -> GronwallReport:
    """Check the differential inequality, then domination by the bound curve.

    ``derivative_samples`` defaults to the second-order finite difference
    (classical) or the L1 Caputo derivative (fractional) of ``e_samples``.
    The hypothesis gets ``10x`` the estimated truncation error as slack; the
    bound is compared up to roundoff.
    """
    e = case.e_samples.values
    beta, dt = case.order, case.dt
    if derivative_samples is None:
        deriv = _derivative(e, beta, dt)
    else:
        deriv = np.asarray(getattr(derivative_samples, "values", derivative_samples),
                           dtype=float)
    if case.is_fractional:
        rhs = case.b1 * e + case.b_samples.values
        bound = frac_gronwall_bound(case)
    else:
        rhs = case.a_samples.values * e + case.b_samples.values
        bound = gronwall_bound(case)

    slack = SLACK_FACTOR * _truncation_estimate(e, beta, dt)
    slack = slack + 1e-12 * (np.abs(rhs) + np.abs(deriv))
    checked = slice(1, None) if case.is_fractional else slice(None)
    margin = (rhs + slack - deriv)[checked]
    hyp_ok = bool(np.all(margin >= 0))
    hyp_margin = float(np.min(margin)) if margin.size else 0.0

    if not hyp_ok:
        return GronwallReport(False, hyp_margin, None, math.nan, bound)
    gap = bound.values - e
    tol = BOUND_RTOL * np.maximum(np.abs(bound.values), 1.0)
    return GronwallReport(True, hyp_margin, bool(np.all(gap >= -tol)), float(np.min(gap)),
                          bound)


# {{{ randomized hypothesis-passing cases


def random_classical_case(rng: np.random.Generator, n_steps: int = 400,
                          horizon: float = 1.0) -> tuple[GronwallCase, np.ndarray]:
    """``E' = A E + B - sigma`` with random nonnegative ``A``, ``B`` and ``0 <= sigma <= B``.

    Returns the case and the exact derivative samples.
    """
    a0, a1, w_a = rng.uniform(0, 2), rng.uniform(0, 1), rng.uniform(0.5, 6)
    b0, b1, w_b = rng.uniform(0, 2), rng.uniform(0, 1), rng.uniform(0.5, 6)
    s_frac = rng.uniform(0, 1)
    e0 = rng.uniform(0.1, 2)

    def coef_a(t):
        return a0 + a1 * np.sin(w_a * t) ** 2

    def coef_b(t):
        return b0 + b1 * np.cos(w_b * t) ** 2

    def rhs(t, y):
        return coef_a(t) * y + (1 - s_frac) * coef_b(t)

    t = np.linspace(0.0, horizon, n_steps + 1)
    sol = solve_ivp(rhs, (0.0, horizon), [e0], t_eval=t, method="DOP853",
                    rtol=1e-12, atol=1e-14)
    e = sol.y[0]
    dt = horizon / n_steps
    case = GronwallCase(TimeSeries(e, dt), TimeSeries(coef_b(t), dt),
                        a_samples=TimeSeries(coef_a(t), dt))
    return case, rhs(t, e)


def random_fractional_case(rng: np.random.Generator, n_steps: int = 400,
                           horizon: float = 1.0) -> tuple[GronwallCase, np.ndarray]:
    """Discrete L1 solution of ``D^beta Q = b1 Q + b2 - sigma`` with ``0 <= sigma <= b2``.

    The L1 derivative of the returned samples satisfies the hypothesis
    exactly, so the returned derivative samples are the L1 ones.
    """
    beta = rng.uniform(0.2, 0.95)
    b1 = rng.uniform(0.1, 2.0)
    c0, c1, w = rng.uniform(0.1, 2), rng.uniform(0, 1), rng.uniform(0.5, 6)
    s_frac = rng.uniform(0, 1)
    q0 = rng.uniform(0.1, 2)
    dt = horizon / n_steps
    t = dt * np.arange(n_steps + 1)
    b2 = c0 + c1 * np.sin(w * t) ** 2
    src = (1 - s_frac) * b2

    q = np.empty(n_steps + 1)
    q[0] = q0
    for n in range(1, n_steps + 1):
        wts = l1_weights(n, beta, dt)
        q[n] = (src[n] - wts[:-1] @ q[:n]) / (wts[-1] - b1)
    case = GronwallCase(TimeSeries(q, dt), TimeSeries(b2, dt), order=beta, b1=b1)
    deriv = b1 * q + src
    deriv[0] = 0.0
    return case, deriv


# }}}

# vim: fdm=marker
