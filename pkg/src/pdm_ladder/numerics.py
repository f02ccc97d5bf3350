"""Uniform grids, complex grid functions, finite differences and quadrature."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import GridError, NonFiniteError

__all__ = [
    "Grid", "GridFunction", "sample", "fd_weights", "derivative_matrix",
    "derivative", "cumulative_antiderivative_sqrt_m", "integrate",
    "bilinear_pair", "sesquilinear_pair", "norm",
]


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise GridError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n < 5:
            raise GridError(f"grid needs at least 5 points, got {self.n}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return _nodes(self.x_min, self.x_max, self.n)


@lru_cache(maxsize=64)
def _nodes(x_min, x_max, n):
    h = (x_max - x_min) / (n - 1)
    x = x_min + h * np.arange(n)
    x.setflags(write=False)
    return x


class GridFunction:
    """Complex samples of a function on a :class:`Grid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.n,):
            raise GridError(f"expected {grid.n} values, got shape {values.shape}")
        self.grid = grid
        self.values = values

    @property
    def x(self):
        return self.grid.x

    @property
    def real(self):
        return self.values.real

    @property
    def imag(self):
        return self.values.imag

    def conj(self):
        return GridFunction(self.grid, self.values.conj())

    def norm(self):
        return norm(self)

    def _other(self, other):
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __repr__(self):
        return f"GridFunction(n={self.grid.n}, [{self.grid.x_min:g}, {self.grid.x_max:g}])"


def _same_grid(f, g):
    if f.grid != g.grid:
        raise GridError("grid functions live on different grids")


def sample(f, grid: Grid) -> GridFunction:
    """Evaluate a vectorised callable at every grid node."""
    x = grid.x
    with np.errstate(all="ignore"):
        v = np.asarray(f(x), dtype=complex)
    v = np.broadcast_to(v, x.shape).copy()
    bad = np.flatnonzero(~np.isfinite(v))
    if bad.size:
        i = int(bad[0])
        raise NonFiniteError(f"non-finite value at node {i} (x = {x[i]:g})", index=i, x=float(x[i]))
    return GridFunction(grid, v)


# --- finite differences -------------------------------------------------------

def fd_weights(z: float, nodes, m: int) -> np.ndarray:
    """Fornberg weights for the ``m``-th derivative at ``z`` from ``nodes``.

    Returns an array of shape ``(m + 1, len(nodes))``; row ``k`` holds the
    weights of the ``k``-th derivative.
    """
    x = np.asarray(nodes, dtype=float)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c.T


@lru_cache(maxsize=32)
def _stencil_table(order, accuracy):
    """Integer-offset weights: central row plus one-sided rows per boundary node."""
    half = accuracy // 2 if order == 1 else (accuracy + 1) // 2
    width = 2 * half + 1
    central = fd_weights(0.0, np.arange(-half, half + 1), order)[order]
    one_sided_width = accuracy + order
    edge = []
    for i in range(half):
        offsets = np.arange(one_sided_width) - i
        edge.append((offsets, fd_weights(0.0, offsets, order)[order]))
    return half, width, central, edge


@lru_cache(maxsize=32)
def derivative_matrix(grid: Grid, order: int, accuracy: int) -> sp.csr_matrix:
    """Sparse matrix of the ``order``-th derivative at the given accuracy order.

    Central differences in the interior; one-sided stencils of the same
    accuracy order on the boundary nodes.
    """
    if order not in (1, 2):
        raise ValueError("derivative order must be 1 or 2")
    if accuracy not in (2, 4):
        raise ValueError("stencil order must be 2 or 4")
    half, width, central, edge = _stencil_table(order, accuracy)
    n = grid.n
    if n < max(accuracy + order, width):
        raise GridError(f"grid of {n} points too small for a stencil of order {accuracy}")
    rows, cols, vals = [], [], []
    interior = np.arange(half, n - half)
    for k, w in enumerate(central):
        rows.append(interior)
        cols.append(interior + k - half)
        vals.append(np.full(interior.size, w))
    for i, (offsets, w) in enumerate(edge):
        rows.append(np.full(offsets.size, i))
        cols.append(i + offsets)
        vals.append(w)
        # mirror image at the right boundary
        sign = -1.0 if order % 2 else 1.0
        rows.append(np.full(offsets.size, n - 1 - i))
        cols.append(n - 1 - i - offsets)
        vals.append(sign * w)
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return mat / grid.h ** order


def derivative(f: GridFunction, order: int = 1, stencil_order: int = 4) -> GridFunction:
    return GridFunction(f.grid, derivative_matrix(f.grid, order, stencil_order) @ f.values)


# --- quadrature ---------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _cell_integrals(fn, left, right):
    """Gauss-Legendre integrals of ``fn`` over the cells [left_i, right_i]."""
    mid = 0.5 * (left + right)
    half = 0.5 * (right - left)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return half * (fn(pts) @ _GL_WEIGHTS)


def cumulative_antiderivative_sqrt_m(profile, grid: Grid, anchor: float = 0.0) -> np.ndarray:
    """F(x) = integral of sqrt(m) from ``anchor`` to x, sampled on ``grid``.

    Each cell is integrated with 8-point Gauss-Legendre and the pieces are
    accumulated outward from the anchor; a cell containing a non-node anchor
    is split there.
    """
    x = grid.x
    if not grid.x_min <= anchor <= grid.x_max:
        raise GridError(f"anchor {anchor} outside [{grid.x_min}, {grid.x_max}]")

    def sqrt_m(pts):
        return np.sqrt(profile.check_positive(pts, where="quadrature node"))

    cells = _cell_integrals(sqrt_m, x[:-1], x[1:])
    k = min(int(np.floor((anchor - grid.x_min) / grid.h)), grid.n - 2)
    k = max(k, 0)
    F = np.empty(grid.n)
    # split cell k at the anchor
    if anchor == x[k]:
        left_piece, right_piece = 0.0, cells[k]
    elif anchor == x[k + 1]:
        left_piece, right_piece = cells[k], 0.0
    else:
        a = np.array([anchor])
        left_piece = float(_cell_integrals(sqrt_m, x[k:k + 1], a)[0])
        right_piece = float(_cell_integrals(sqrt_m, a, x[k + 1:k + 2])[0])
    F[k] = -left_piece
    F[k + 1] = right_piece
    if k + 2 < grid.n:
        F[k + 2:] = right_piece + np.cumsum(cells[k + 1:])
    if k > 0:
        F[:k] = -left_piece - np.cumsum(cells[:k][::-1])[::-1]
    return F


def _simpson_weights(n):
    w = np.zeros(n)
    intervals = n - 1
    if intervals % 2 == 0:
        w[0:n:2] = 2.0
        w[1:n:2] = 4.0
        w[0] = w[-1] = 1.0
        return w / 3.0
    # odd interval count: Simpson on the first n-3 intervals, 3/8 rule on the last 3
    m = n - 3
    w[:m] = _simpson_weights(m) if m >= 3 else 0.0
    if m == 1:
        w[:] = 0.0
    w[m - 1:] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


@lru_cache(maxsize=32)
def _weights(grid: Grid):
    w = _simpson_weights(grid.n) * grid.h
    w.setflags(write=False)
    return w


def integrate(f: GridFunction) -> complex:
    """Composite Simpson rule (3/8 correction for an odd interval count)."""
    return complex(_weights(f.grid) @ f.values)


def bilinear_pair(f: GridFunction, g: GridFunction) -> complex:
    """Unconjugated pairing: integral of f(x) g(x)."""
    _same_grid(f, g)
    return complex(_weights(f.grid) @ (f.values * g.values))


def sesquilinear_pair(f: GridFunction, g: GridFunction) -> complex:
    """Standard inner product: integral of conj(f(x)) g(x)."""
    _same_grid(f, g)
    return complex(_weights(f.grid) @ (f.values.conj() * g.values))


def norm(f) -> float:
    """Discrete 2-norm scaled by sqrt(h)."""
    v = f.values if isinstance(f, GridFunction) else np.asarray(f)
    h = f.grid.h if isinstance(f, GridFunction) else 1.0
    return float(np.linalg.norm(v) * np.sqrt(h))
