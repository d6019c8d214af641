"""Problem data for the registered scenarios, with exact solutions where known.

The spatial profile ``p(x) = x^2 - L x + L^2/6`` has vanishing zeroth and
first moments on (0, L), so ``t^k p(x)`` satisfies both integral
constraints for every ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .solver import BeamConfig, ProblemData
from .spatial import project_constraints

__all__ = [
    "Scenario",
    "profile_p",
    "manufactured_poly",
    "zero",
    "random_smooth",
    "random_direction",
    "classical_limit",
    "build",
]


@dataclass(frozen=True)
class Scenario:
    name: str
    data: ProblemData
    # exact(times, nodes) -> (theta, phi), each (n_times, n_nodes)
    exact: Callable | None = None


def profile_p(x, length):
    return x**2 - length * x + length**2 / 6.0


def _exp_moment(k: int, lam: float, t):
    """``int_0^t exp(-lam (t - s)) s^k ds`` by the upward recursion."""
    t = np.asarray(t, dtype=float)
    j = -np.expm1(-lam * t) / lam
    for i in range(1, k + 1):
        j = t**i / lam - i / lam * j
    return j


def manufactured_poly(config: BeamConfig, time_power: int = 2) -> Scenario:
    """``theta = phi = t^k p(x)`` with the forcing obtained by substitution."""
    k = int(time_power)
    if k < 2:
        raise ValueError("time_power must be at least 2 (zero initial rates)")
    c = config
    L, order = c.length, c.alpha + 1.0
    frac_coef = math.gamma(k + 1) / math.gamma(k + 1 - order)
    kern = c.kernel

    def p(x):
        return profile_p(x, L)

    def dp(x):
        return 2 * x - L

    def F(x, t):
        return (c.rho1 * frac_coef * t ** (k - order) * p(x)
                - c.kappa1 * t**k * (2.0 + dp(x)) + k * t ** (k - 1) * p(x))

    def G(x, t):
        out = (c.rho2 * frac_coef * t ** (k - order) * p(x) - 2.0 * c.kappa2 * t**k
               + c.kappa1 * t**k * (dp(x) + p(x)))
        if kern.kind == "exponential":
            out = out + 2.0 * kern.m0 * _exp_moment(k, kern.lam, t)
        return out

    def exact(times, nodes):
        u = np.asarray(times)[:, None] ** k * p(np.asarray(nodes))[None, :]
        return u, u.copy()

    return Scenario("manufactured_poly", ProblemData.from_functions(c, F=F, G=G), exact)


def zero(config: BeamConfig) -> Scenario:
    def exact(times, nodes):
        return np.zeros((len(times), len(nodes))), np.zeros((len(times), len(nodes)))

    return Scenario("zero", ProblemData.zeros(config), exact)


def _fourier(rng, x, length, modes, amplitude):
    u = np.zeros_like(x)
    for m in range(1, modes + 1):
        a, b = rng.normal(size=2) * amplitude / m
        u = u + a * np.cos(m * np.pi * x / length) + b * np.sin(m * np.pi * x / length)
    return u


def random_direction(config: BeamConfig, rng: np.random.Generator, *, modes: int = 3,
                     amplitude: float = 1.0) -> ProblemData:
    """Smooth random data: Fourier modes in x times a quadratic in t, projected."""
    g = config.grid
    x, t = g.nodes, config.times / config.horizon

    def forcing():
        total = np.zeros((t.shape[0], x.shape[0]))
        for power in range(3):
            total += np.outer(t**power, _fourier(rng, x, g.length, modes, amplitude))
        return project_constraints(total, g)

    def initial():
        return project_constraints(_fourier(rng, x, g.length, modes, amplitude), g)

    F, G = forcing(), forcing()
    return ProblemData(F, G, initial(), initial(), initial(), initial())


def random_smooth(config: BeamConfig, seed: int, *, modes: int = 3,
                  amplitude: float = 1.0) -> Scenario:
    rng = np.random.default_rng(seed)
    return Scenario("random_smooth",
                    random_direction(config, rng, modes=modes, amplitude=amplitude))


def classical_limit(config: BeamConfig) -> Scenario:
    """Unforced release from rest of the moment-free profile ``p``."""
    p = profile_p(config.grid.nodes, config.length)
    z = np.zeros_like(p)
    nt, nx = config.n_steps + 1, config.grid.n_nodes
    data = ProblemData(np.zeros((nt, nx)), np.zeros((nt, nx)), p, z, p, z)
    return Scenario("classical_limit", data)


def build(name: str, config: BeamConfig, seed: int = 0, params: dict | None = None
          ) -> Scenario:
    """Scenario by registry name; ``perturb_pair`` returns its base data."""
    params = params or {}
    if name == "zero":
        return zero(config)
    if name in ("manufactured_poly", "perturb_pair"):
        return manufactured_poly(config, int(float(params.get("time_power", 2))))
    if name == "random_smooth":
        return random_smooth(config, seed, modes=int(float(params.get("modes", 3))),
                             amplitude=float(params.get("amplitude", 1.0)))
    if name == "classical_limit":
        return classical_limit(config)
    raise ValueError(f"unknown scenario {name!r}")
