"""Viscoelastic relaxation kernels and the memory convolution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fraccalc import InsufficientHistoryError

__all__ = [
    "KernelAdmissibilityError",
    "KernelSpec",
    "MemoryKernel",
    "KernelReport",
    "validate_kernel",
    "memory_weights",
    "memory_convolution",
]

KINDS = ("zero", "exponential")


class KernelAdmissibilityError(ValueError):
    """The kernel violates positivity, monotone decay or the margin ``l > 0``."""


@dataclass(frozen=True)
class KernelSpec:
    """Analytic kernel ``m(t) = m0 * exp(-lam * t)`` (or the zero kernel)."""

    kind: str = "zero"
    m0: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kernel.kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "exponential" and not (self.m0 > 0 and self.lam > 0):
            raise ValueError("exponential kernel needs m0 > 0 and lambda > 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        return self.m0 * np.exp(-self.lam * t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        return -self.lam * self.m0 * np.exp(-self.lam * t)

    def sample(self, dt: float, n_steps: int) -> "MemoryKernel":
        t = dt * np.arange(n_steps + 1)
        return MemoryKernel(self(t), self.derivative(t), dt, self.kind)


@dataclass(frozen=True)
class MemoryKernel:
    """Kernel values and derivative sampled on the solver time grid."""

    values: np.ndarray
    derivative_values: np.ndarray
    dt: float
    kind: str = "exponential"

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"


@dataclass(frozen=True)
class KernelReport:
    l_margin: float
    min_decay: float     # min over [0, T] of -m'
    sup_m2: float
    sup_dm2: float
    m_at_0: float


def validate_kernel(kernel: MemoryKernel, kappa2: float, horizon: float) -> KernelReport:
    """Check positivity, strict decay and ``kappa2 - int_0^T m > 0``.

    Raises :class:`KernelAdmissibilityError` naming the first failed
    condition; the zero kernel is exempt from the positivity and decay
    tests.
    """
    m = np.asarray(kernel.values, dtype=float)
    dm = np.asarray(kernel.derivative_values, dtype=float)
    n = m.shape[0] - 1
    if n < 1 or not math.isclose(n * kernel.dt, horizon, rel_tol=1e-12):
        raise KernelAdmissibilityError(
            f"kernel must be sampled on [0, {horizon}], got {n} steps of {kernel.dt}")

    if not kernel.is_zero:
        if np.any(m <= 0):
            raise KernelAdmissibilityError("kernel must be strictly positive: m(t) > 0")
        if np.any(dm >= 0):
            raise KernelAdmissibilityError("kernel must be strictly decreasing: m'(t) < 0")

    integral = kernel.dt * (m.sum() - 0.5 * (m[0] + m[-1]))
    l_margin = kappa2 - integral
    if not l_margin > 0:
        raise KernelAdmissibilityError(
            f"kappa2 - int_0^T m dt = {l_margin:.6g} must be positive")

    return KernelReport(
        l_margin=float(l_margin),
        min_decay=float(np.min(-dm)),
        sup_m2=float(np.max(m**2)),
        sup_dm2=float(np.max(dm**2)),
        m_at_0=float(m[0]),
    )


def memory_weights(kernel: MemoryKernel, step_index: int) -> np.ndarray:
    """Trapezoidal weights ``w_k`` with ``int_0^{t_n} m(t_n - s) u(s) ds ~ sum w_k u_k``."""
    n = step_index
    if n < 0 or n >= kernel.values.shape[0]:
        raise InsufficientHistoryError(f"kernel not sampled up to step {n}")
    if n == 0:
        return np.zeros(1)
    w = kernel.dt * kernel.values[n::-1].copy()
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def memory_convolution(field_history, kernel: MemoryKernel, step_index: int) -> np.ndarray:
    """``int_0^{t_n} m(t_n - s) u(., s) ds`` by the trapezoidal rule.

    ``field_history[k]`` holds the spatial field (usually ``phi_xx``) at step
    ``k``; only steps ``0..step_index`` are used.
    """
    hist = np.asarray(field_history, dtype=float)
    if hist.shape[0] < step_index + 1:
        raise InsufficientHistoryError(
            f"history has {hist.shape[0]} steps, need {step_index + 1}")
    if kernel.is_zero:
        return np.zeros(hist.shape[1:])
    w = memory_weights(kernel, step_index)
    return np.tensordot(w, hist[: step_index + 1], axes=1)
