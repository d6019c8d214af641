"""Uniform grid on (0, L), difference operators, antiderivatives and moments.

Every quadrature here is the composite trapezoidal rule so that the discrete
inner product, the moments and the running antiderivative share a single
duality. Arrays may carry extra leading axes (e.g. time); the spatial axis is
always the last one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid

__all__ = [
    "Grid",
    "SpatialField",
    "ix",
    "ix2",
    "d1x",
    "d2x",
    "d1x_matrix",
    "d2x_matrix",
    "inner",
    "moment0",
    "moment1",
    "project_constraints",
    "projection_matrix",
    "solve_end_values",
]


@dataclass(frozen=True)
class Grid:
    length: float
    n_cells: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"beam length must be positive, got {self.length}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ValueError(f"n_cells must be an integer >= 8, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(0.0, self.length, self.n_nodes)
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights."""
        w = np.full(self.n_nodes, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        w.flags.writeable = False
        return w

    def field(self, values) -> "SpatialField":
        return SpatialField(values, self)

    def sample(self, fn) -> np.ndarray:
        return np.asarray(fn(self.nodes), dtype=float) * np.ones(self.n_nodes)


@dataclass(frozen=True)
class SpatialField:
    """Nodal values of a function on a :class:`Grid`."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[-1:] != (self.grid.n_nodes,):
            raise ValueError(
                f"field has {values.shape[-1:]} nodes, grid has {self.grid.n_nodes}")
        object.__setattr__(self, "values", values)


def _unwrap(field, grid):
    if isinstance(field, SpatialField):
        return field.values, field.grid
    if grid is None:
        raise TypeError("a grid is needed for raw arrays")
    return np.asarray(field, dtype=float), grid


def _wrap(like, values, grid):
    return SpatialField(values, grid) if isinstance(like, SpatialField) else values


def ix(field, grid: Grid | None = None):
    """Running antiderivative ``int_0^x field``; vanishes at ``x = 0``."""
    u, grid = _unwrap(field, grid)
    out = cumulative_trapezoid(u, dx=grid.dx, axis=-1, initial=0.0)
    return _wrap(field, out, grid)


def ix2(field, grid: Grid | None = None):
    """Double antiderivative, ``ix(ix(field))``."""
    u, grid = _unwrap(field, grid)
    return _wrap(field, ix(ix(u, grid), grid), grid)


def d1x_matrix(grid: Grid) -> np.ndarray:
    """Central first differences, second-order one-sided at the ends."""
    n, h = grid.n_nodes, grid.dx
    D = np.zeros((n, n))
    i = np.arange(1, n - 1)
    D[i, i - 1] = -0.5
    D[i, i + 1] = 0.5
    D[0, :3] = [-1.5, 2.0, -0.5]
    D[-1, -3:] = [0.5, -2.0, 1.5]
    return D / h


def d2x_matrix(grid: Grid) -> np.ndarray:
    """Central second differences, second-order one-sided at the ends."""
    n, h = grid.n_nodes, grid.dx
    if n < 4:
        raise ValueError("d2x needs at least 4 nodes")
    D = np.zeros((n, n))
    i = np.arange(1, n - 1)
    D[i, i - 1] = 1.0
    D[i, i] = -2.0
    D[i, i + 1] = 1.0
    D[0, :4] = [2.0, -5.0, 4.0, -1.0]
    D[-1, -4:] = [-1.0, 4.0, -5.0, 2.0]
    return D / h**2


def d1x(field, grid: Grid | None = None):
    u, grid = _unwrap(field, grid)
    h = grid.dx
    out = np.empty_like(u)
    out[..., 1:-1] = (u[..., 2:] - u[..., :-2]) / (2 * h)
    out[..., 0] = (-1.5 * u[..., 0] + 2.0 * u[..., 1] - 0.5 * u[..., 2]) / h
    out[..., -1] = (0.5 * u[..., -3] - 2.0 * u[..., -2] + 1.5 * u[..., -1]) / h
    return _wrap(field, out, grid)


def d2x(field, grid: Grid | None = None):
    u, grid = _unwrap(field, grid)
    if grid.n_nodes < 4:
        raise ValueError("d2x needs at least 4 nodes")
    h2 = grid.dx**2
    out = np.empty_like(u)
    out[..., 1:-1] = (u[..., 2:] - 2.0 * u[..., 1:-1] + u[..., :-2]) / h2
    out[..., 0] = (2 * u[..., 0] - 5 * u[..., 1] + 4 * u[..., 2] - u[..., 3]) / h2
    out[..., -1] = (2 * u[..., -1] - 5 * u[..., -2] + 4 * u[..., -3] - u[..., -4]) / h2
    return _wrap(field, out, grid)


def inner(u, v, grid: Grid | None = None):
    """Trapezoidal ``(u, v)`` on (0, L)."""
    a, grid = _unwrap(u, grid)
    b, _ = _unwrap(v, grid)
    return np.sum(a * b * grid.weights, axis=-1)


def moment0(field, grid: Grid | None = None):
    """Trapezoidal ``int_0^L field dx``."""
    u, grid = _unwrap(field, grid)
    return u @ grid.weights


def moment1(field, grid: Grid | None = None):
    """Trapezoidal ``int_0^L x field dx``."""
    u, grid = _unwrap(field, grid)
    return u @ (grid.weights * grid.nodes)


def projection_matrix(grid: Grid) -> np.ndarray:
    """Matrix of :func:`project_constraints` (acting on column vectors)."""
    x, w = grid.nodes, grid.weights
    basis = np.stack([np.ones_like(x), x], axis=1)           # (n, 2)
    functionals = np.stack([w, w * x], axis=0)                # (2, n)
    gram = functionals @ basis
    # continuous determinant is L^4/12
    assert np.linalg.det(gram) > 0.0
    return np.eye(grid.n_nodes) - basis @ np.linalg.solve(gram, functionals)


def project_constraints(field, grid: Grid | None = None):
    """Subtract the affine function that makes both moments vanish."""
    u, grid = _unwrap(field, grid)
    x, w = grid.nodes, grid.weights
    gram = np.array([[w.sum(), w @ x], [w @ x, w @ x**2]])
    assert np.linalg.det(gram) > 0.0
    rhs = np.stack([u @ w, u @ (w * x)], axis=-1)
    ab = np.linalg.solve(gram, rhs[..., None])[..., 0]
    out = u - ab[..., :1] - ab[..., 1:] * x
    return _wrap(field, out, grid)


def solve_end_values(field, grid: Grid | None = None):
    """Replace the two end values so that both moments vanish.

    Unlike :func:`project_constraints` the interior values are untouched.
    """
    u, grid = _unwrap(field, grid)
    x, w = grid.nodes, grid.weights
    out = np.array(u, dtype=float, copy=True)
    out[..., 0] = 0.0
    out[..., -1] = 0.0
    ends = np.array([[w[0], w[-1]], [w[0] * x[0], w[-1] * x[-1]]])
    rhs = np.stack([out @ w, out @ (w * x)], axis=-1)
    vals = np.linalg.solve(ends, -rhs[..., None])[..., 0]
    out[..., 0] = vals[..., 0]
    out[..., -1] = vals[..., 1]
    return _wrap(field, out, grid)
