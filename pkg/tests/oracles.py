"""Independent reference computations used by several test modules."""

import math

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad

from fractimo.spatial import d1x_matrix, d2x_matrix


def constrained_reduction(grid):
    """Map interior values to full fields satisfying both trapezoidal moments."""
    n = grid.n_nodes
    w, x = grid.weights, grid.nodes
    moments = np.stack([w, w * x])
    inner, ends = np.arange(1, n - 1), [0, n - 1]
    T = np.zeros((n, n - 2))
    T[inner, np.arange(n - 2)] = 1.0
    T[ends, :] = -np.linalg.solve(moments[:, ends], moments[:, inner])
    return T, inner


def classical_system(config):
    """First-order form ``y' = A y`` of the undamped-memory classical system.

    Unknowns are interior values and interior rates of both fields; end
    values follow from the moment conditions.
    """
    g = config.grid
    T, inner = constrained_reduction(g)
    D1, D2 = d1x_matrix(g), d2x_matrix(g)
    k1, k2, r1, r2 = config.kappa1, config.kappa2, config.rho1, config.rho2
    m = T.shape[1]
    Z, I = np.zeros((m, m)), np.eye(m)
    th_th = (k1 * D2 @ T)[inner] / r1
    th_ph = (k1 * D1 @ T)[inner] / r1
    ph_th = (-k1 * D1 @ T)[inner] / r2
    ph_ph = (k2 * D2 @ T - k1 * T)[inner] / r2
    A = np.block([[Z, Z, I, Z], [Z, Z, Z, I],
                  [th_th, th_ph, -I / r1, Z], [ph_th, ph_ph, Z, Z]])
    return A, T, inner


def classical_crank_nicolson(config, theta0, phi0, n_steps):
    """Trapezoidal-rule (second order) solution at ``t = T`` from rest."""
    A, T, inner = classical_system(config)
    m = T.shape[1]
    dt = config.horizon / n_steps
    eye = np.eye(4 * m)
    lu = sla.lu_factor(eye - 0.5 * dt * A)
    rhs_op = eye + 0.5 * dt * A
    y = np.concatenate([theta0[inner], phi0[inner], np.zeros(2 * m)])
    for _ in range(n_steps):
        y = sla.lu_solve(lu, rhs_op @ y)
    return T @ y[:m], T @ y[m:2 * m]


def classical_exact(config, theta0, phi0):
    """Matrix-exponential solution of the same semi-discrete system at ``t = T``."""
    A, T, inner = classical_system(config)
    m = T.shape[1]
    y = sla.expm(A * config.horizon) @ np.concatenate(
        [theta0[inner], phi0[inner], np.zeros(2 * m)])
    return T @ y[:m], T @ y[m:2 * m]


def mms_forcing_quadrature(config, x, t, k=2):
    """``F`` and ``G`` for ``theta = phi = t^k p(x)``, memory term by adaptive quadrature."""
    c, L, a = config, config.length, config.alpha
    p = x**2 - L * x + L**2 / 6
    dp = 2 * x - L
    frac = math.gamma(k + 1) / math.gamma(k - a) * t ** (k - 1 - a)
    F = c.rho1 * frac * p - c.kappa1 * t**k * (2 + dp) + k * t ** (k - 1) * p
    mem = quad(lambda s: c.kernel(t - s) * 2 * s**k, 0, t)[0] if t > 0 else 0.0
    G = c.rho2 * frac * p - 2 * c.kappa2 * t**k + c.kappa1 * t**k * (dp + p) + mem
    return F, G
