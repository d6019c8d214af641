"""Discrete fractional operators and Mittag-Leffler functions.

All time series are sampled on a uniform grid starting at ``t = 0``. The
Caputo operators use the L1 product quadrature (piecewise-linear
reconstruction of the integrand), the Riemann-Liouville integral uses the
product trapezoidal rule. Both are exact for the polynomial degree of their
reconstruction and have the usual ``2 - beta`` / ``2`` orders on smooth data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ConvergenceError",
    "InsufficientHistoryError",
    "FracOrder",
    "TimeSeries",
    "CaputoWeights",
    "gamma_fn",
    "mittag_leffler",
    "mittag_leffler2",
    "log_mittag_leffler2",
    "l1_weights",
    "caputo_weights",
    "caputo2_weights",
    "caputo_apply",
    "caputo2_apply",
    "rl_weights",
    "rl_integral",
    "rl_integral_series",
]

#: Default number of series terms before Mittag-Leffler evaluation gives up.
ML_MAX_TERMS = 10_000
#: Relative size of the next term (w.r.t. the partial sum) that ends the series.
ML_RTOL = 1e-16
ML_ATOL = 1e-300
#: Cancellation ratio (sum of |terms| / |sum|) above which the series is
#: re-summed in extended precision.
ML_CANCELLATION_LIMIT = 1e4


class ConvergenceError(ArithmeticError):
    """A series did not converge within its term budget.

    The partial sum reached before giving up is kept in :attr:`partial_sum`.
    """

    def __init__(self, message: str, partial_sum: float, n_terms: int):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.n_terms = n_terms


class InsufficientHistoryError(ValueError):
    """Not enough samples to evaluate a history-dependent operator."""


@dataclass(frozen=True)
class FracOrder:
    """Order of a fractional operator.

    ``kind="caputo"`` accepts orders in (0, 1) or (1, 2); ``kind="rl"``
    accepts (0, 1].
    """

    beta: float
    kind: str = "caputo"

    def __post_init__(self):
        b = float(self.beta)
        if not math.isfinite(b):
            raise ValueError(f"order must be finite, got {self.beta!r}")
        if self.kind == "caputo":
            if not (0.0 < b < 1.0 or 1.0 < b < 2.0):
                raise ValueError(f"Caputo order must lie in (0,1) or (1,2), got {b}")
        elif self.kind == "rl":
            if not 0.0 < b <= 1.0:
                raise ValueError(f"Riemann-Liouville order must lie in (0,1], got {b}")
        else:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        object.__setattr__(self, "beta", b)


@dataclass(frozen=True)
class TimeSeries:
    """Samples ``values[k] = v(t0 + k*dt)`` with ``t0 = 0``."""

    values: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 0:
            values = values.reshape(1)
        if values.shape[0] < 1:
            raise ValueError("a time series needs at least one sample")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t0 != 0.0:
            raise ValueError("time series always start at t = 0")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self))

    @classmethod
    def from_function(cls, fn, t_final: float, n_steps: int) -> "TimeSeries":
        dt = t_final / n_steps
        return cls(np.asarray(fn(dt * np.arange(n_steps + 1)), dtype=float), dt)


@dataclass(frozen=True)
class CaputoWeights:
    """Weights ``w`` such that the operator at the last sample is ``w @ values``."""

    order: FracOrder
    step: float
    coefficients: np.ndarray


# {{{ special functions


def gamma_fn(x: float) -> float:
    """Gamma function for positive arguments."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma_fn is only defined here for x > 0, got {x}")
    return math.gamma(x)


def _check_ml_args(beta: float, mu: float, x: float) -> None:
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if not math.isfinite(x):
        raise ValueError(f"argument must be finite, got {x}")


def _ml_series(beta: float, mu: float, x: float, max_terms: int) -> float:
    if x == 0.0:
        return 1.0 / math.gamma(mu)

    logx = math.log(abs(x))
    # terms grow until beta * psi(beta*n + mu) ~ log|x|; the stopping test is
    # only meaningful once they decay
    n_peak = max(0.0, (abs(x) ** (1.0 / beta) - mu) / beta)

    total = 0.0
    abs_total = 0.0
    comp = 0.0
    for n in range(max_terms):
        logterm = n * logx - math.lgamma(beta * n + mu)
        if logterm > 709.0:
            raise ConvergenceError(
                f"Mittag-Leffler term {n} overflows for x={x}, beta={beta}",
                total, n)
        term = math.exp(logterm)
        if x < 0 and n % 2 == 1:
            term = -term

        # Kahan summation
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
        abs_total += abs(term)

        if n > n_peak and abs(term) < max(ML_RTOL * abs(total), ML_ATOL):
            break
    else:
        raise ConvergenceError(
            f"Mittag-Leffler series did not converge in {max_terms} terms "
            f"(beta={beta}, mu={mu}, x={x})", total, max_terms)

    # a float sum ruined by cancellation can itself be large, so the size of
    # the terms alone also triggers the extended-precision pass
    if abs_total > ML_CANCELLATION_LIMIT * max(abs(total), 1.0):
        return _ml_series_mp(beta, mu, x, max_terms, abs_total)
    if abs_total > ML_CANCELLATION_LIMIT * abs(total):
        return _ml_series_mp(beta, mu, x, max_terms, abs_total / max(abs(total), 1e-300))

    return total


def _ml_series_mp(beta: float, mu: float, x: float, max_terms: int,
                  cancellation: float) -> float:
    # same series with enough extra digits to absorb the cancellation; a
    # second pass with 15 more digits confirms the result
    digits = 20 + int(math.ceil(math.log10(max(cancellation, 1.0))))
    first = _ml_series_mp_at(beta, mu, x, max_terms, digits)
    for _ in range(8):
        digits += 15
        second = _ml_series_mp_at(beta, mu, x, max_terms, digits)
        if abs(second - first) <= 1e-15 * abs(second) or second == first:
            return second
        first = second
    raise ConvergenceError(
        f"Mittag-Leffler series unstable at {digits} digits (beta={beta}, x={x})",
        second, max_terms)


def _ml_series_mp_at(beta: float, mu: float, x: float, max_terms: int,
                     digits: int) -> float:
    import mpmath

    with mpmath.workdps(digits):
        xm = mpmath.mpf(x)
        bm = mpmath.mpf(beta)
        total = mpmath.mpf(0)
        tol = mpmath.mpf(10) ** (-digits)
        n_peak = max(0.0, (abs(x) ** (1.0 / beta) - mu) / beta)
        for n in range(max_terms):
            term = xm**n * mpmath.rgamma(bm * n + mu)
            total += term
            if n > n_peak and abs(term) <= tol * abs(total):
                break
        else:
            raise ConvergenceError(
                f"Mittag-Leffler series did not converge in {max_terms} terms",
                float(total), max_terms)
        return float(total)


def mittag_leffler(beta: float, x: float, *, max_terms: int = ML_MAX_TERMS) -> float:
    r"""One-parameter Mittag-Leffler function :math:`E_\beta(x)`.

    Evaluated by direct summation of :math:`\sum_n x^n / \Gamma(\beta n + 1)`.
    The series stops once the next term is below ``1e-16`` of the partial
    sum (absolute floor ``1e-300``). Heavy cancellation (negative ``x``) is
    detected and the series is re-summed in extended precision.

    The argument must keep every term below ``exp(709)``; in practice this
    means ``|x| <~ 50`` for ``beta = 1`` and ``|x| <~ 20`` for ``beta = 0.5``.
    Larger arguments raise :class:`ConvergenceError` rather than lose
    accuracy silently.
    """
    return mittag_leffler2(beta, 1.0, x, max_terms=max_terms)


def mittag_leffler2(beta: float, mu: float, x: float, *,
                    max_terms: int = ML_MAX_TERMS) -> float:
    r"""Two-parameter Mittag-Leffler function :math:`E_{\beta,\mu}(x)`."""
    beta, mu, x = float(beta), float(mu), float(x)
    _check_ml_args(beta, mu, x)
    return _ml_series(beta, mu, x, max_terms)


def log_mittag_leffler2(beta: float, mu: float, x: float) -> float:
    r"""Natural logarithm of :math:`E_{\beta,\mu}(x)` for ``x >= 0``.

    Sums the same series in log space, restricted to the window of terms
    within ``60`` nats of the largest one, so that arguments whose value
    overflows double precision (as happens for the energy constants) are
    still evaluated from the series itself.
    """
    beta, mu, x = float(beta), float(mu), float(x)
    _check_ml_args(beta, mu, x)
    if x < 0:
        raise ValueError("log_mittag_leffler2 needs a nonnegative argument")
    if x == 0.0:
        return -math.lgamma(mu)

    logx = math.log(x)

    def logterm(n):
        return n * logx - gammaln(beta * n + mu)

    # the log-terms are concave in n; bracket the maximum and the window
    n_peak = max(0.0, (x ** (1.0 / beta) - mu) / beta)
    centre = int(n_peak)
    lo, hi = max(0, centre - 2), centre + 2
    grid = np.arange(lo, hi + 1, dtype=float)
    peak = float(np.max(logterm(grid)))

    width = 16
    while lo > 0 and logterm(float(lo)) > peak - 60.0:
        lo = max(0, lo - width)
        width *= 2
    width = 16
    while logterm(float(hi)) > peak - 60.0:
        hi += width
        width *= 2

    n = np.arange(lo, hi + 1, dtype=float)
    lt = logterm(n)
    m = float(np.max(lt))
    return m + math.log(float(np.sum(np.exp(lt - m))))


# }}}


# {{{ Caputo derivatives


def _pos_pow(d: np.ndarray, e: float) -> np.ndarray:
    """``d**e`` with ``0**e := 0``, also for ``e = 0`` (the integer-order limit)."""
    d = np.asarray(d, dtype=float)
    out = np.zeros_like(d)
    mask = d > 0
    out[mask] = d[mask] ** e
    return out


def l1_weights(n: int, beta: float, dt: float) -> np.ndarray:
    r"""Weights of the L1 scheme of order ``beta`` in (0, 1] at ``t_n``.

    Returns ``w`` of length ``n + 1`` with

    .. math::

        {}^C\partial_t^\beta V(t_n) \approx \sum_j w_j V_j
            = \sum_{k=0}^{n-1} b_{n-1-k} (V_{k+1} - V_k),

    :math:`b_j = [(j+1)^{1-\beta} - j^{1-\beta}] \Delta t^{-\beta}/\Gamma(2-\beta)`.
    ``beta = 1`` reduces to the backward difference.
    """
    if n < 1:
        raise InsufficientHistoryError("the L1 scheme needs at least 2 samples")
    j = np.arange(n, dtype=float)
    b = (_pos_pow(j + 1, 1.0 - beta) - _pos_pow(j, 1.0 - beta))
    b *= dt ** (-beta) / math.gamma(2.0 - beta)
    # coefficient of (V_{k+1} - V_k) is b[n-1-k]
    c = b[::-1]
    w = np.zeros(n + 1)
    w[1:] += c
    w[:-1] -= c
    return w


def caputo2_weights(n: int, beta: float, dt: float) -> np.ndarray:
    r"""Weights of the order-``beta`` Caputo derivative, ``beta`` in (1, 2].

    The derivative is the order ``beta - 1`` L1 operator applied to the
    first-difference series :math:`D_k = (V_{k+1} - V_k)/\Delta t`, read as
    samples of :math:`V_t` at the half steps :math:`t_{k+1/2}`. The
    piecewise-linear reconstruction through the half-step values is
    extended linearly over :math:`[0, t_{1/2}]` and
    :math:`[t_{n-1/2}, t_n]`, so the result lives at :math:`t_n`, is exact
    for quadratics and has order :math:`3 - \beta`.
    """
    if n < 2:
        raise InsufficientHistoryError("order (1,2) Caputo needs at least 3 samples")
    gam = beta - 1.0
    e = 1.0 - gam
    scale = dt ** (1.0 - gam) / math.gamma(2.0 - gam)

    # c[k] multiplies the slope S_k = (D_k - D_{k-1})/dt, k = 1..n-1, which
    # lives on the cell [t_{k-1/2}, t_{k+1/2}]
    k = np.arange(1, n, dtype=float)
    c = _pos_pow(n - k + 0.5, e) - _pos_pow(n - k - 0.5, e)
    c[0] += _pos_pow(np.array(float(n)), e) - _pos_pow(np.array(n - 0.5), e)
    c[-1] += _pos_pow(np.array(0.5), e)
    c *= scale / dt**2

    w = np.zeros(n + 1)
    w[2:] += c
    w[1:-1] -= 2.0 * c
    w[:-2] += c
    return w


def caputo_weights(n: int, order: FracOrder, dt: float) -> CaputoWeights:
    """Weights of the discrete Caputo derivative at ``t_n`` for either order range."""
    if order.kind != "caputo":
        raise ValueError("caputo_weights needs a Caputo order")
    if order.beta < 1.0:
        w = l1_weights(n, order.beta, dt)
    else:
        w = caputo2_weights(n, order.beta, dt)
    return CaputoWeights(order, dt, w)


def caputo_apply(history: TimeSeries, order: FracOrder) -> float:
    """L1 approximation of the Caputo derivative (order in (0,1)) at the last sample."""
    if not 0.0 < order.beta < 1.0:
        raise ValueError(f"caputo_apply needs an order in (0,1), got {order.beta}")
    if len(history) < 2:
        raise InsufficientHistoryError("caputo_apply needs at least 2 samples")
    n = len(history) - 1
    return float(l1_weights(n, order.beta, history.dt) @ history.values)


def caputo2_apply(history: TimeSeries, order: FracOrder) -> float:
    """Caputo derivative of order in (1,2) at the last sample."""
    if not 1.0 < order.beta < 2.0:
        raise ValueError(f"caputo2_apply needs an order in (1,2), got {order.beta}")
    if len(history) < 3:
        raise InsufficientHistoryError("caputo2_apply needs at least 3 samples")
    n = len(history) - 1
    return float(caputo2_weights(n, order.beta, history.dt) @ history.values)


# }}}


# {{{ Riemann-Liouville integral


def rl_weights(n: int, beta: float, dt: float) -> np.ndarray:
    r"""Product-trapezoidal weights for :math:`D_t^{-\beta}` at ``t_n``.

    The integrand is interpolated piecewise linearly and integrated exactly
    against :math:`(t_n - \tau)^{\beta - 1}/\Gamma(\beta)`. For ``beta = 1``
    these are the trapezoidal weights.
    """
    w = np.zeros(n + 1)
    if n == 0:
        return w
    b1 = beta + 1.0
    k = n - np.arange(n + 1, dtype=float)  # distance to t_n in steps
    w[1:n] = (k[1:n] + 1) ** b1 - 2 * k[1:n] ** b1 + (k[1:n] - 1) ** b1
    w[0] = (n - 1.0) ** b1 - (n - beta - 1.0) * n**beta
    w[n] = 1.0
    return w * dt**beta / math.gamma(beta + 2.0)


def rl_integral(history: TimeSeries, order: FracOrder) -> float:
    """Riemann-Liouville integral of order in (0,1] at the last sample."""
    if order.beta > 1.0:
        raise ValueError(f"rl_integral needs an order in (0,1], got {order.beta}")
    n = len(history) - 1
    return float(rl_weights(n, order.beta, history.dt) @ history.values)


def rl_integral_series(history: TimeSeries, order: FracOrder) -> TimeSeries:
    """Riemann-Liouville integral evaluated at every sample time."""
    if order.beta > 1.0:
        raise ValueError(f"rl_integral needs an order in (0,1], got {order.beta}")
    v = history.values
    out = np.array([rl_weights(n, order.beta, history.dt) @ v[: n + 1]
                    for n in range(len(history))])
    return TimeSeries(out, history.dt)


# }}}

# vim: fdm=marker
