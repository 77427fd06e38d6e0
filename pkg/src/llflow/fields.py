"""Discrete fields on a truncated chart rectangle.

Arrays are shaped (n1, n2); axis 0 runs along x1 and axis 1 along x2.
Interior stencils are centered second order; the boundary ring uses
one-sided second-order formulas.  Maps into the target plane are stored
as two coordinate arrays (u1, u2); tangent fields along a map carry two
component arrays in the coordinate basis at u(x).
"""

from dataclasses import dataclass, field

import numpy as np

from . import geometry

__all__ = [
    "Grid",
    "MapField",
    "TangentField",
    "partial_i",
    "laplace_beltrami",
    "pullback_covariant_derivative",
    "tension_field",
    "second_fundamental_form",
    "energy_density",
    "lp_norm",
    "tangent_lp_norm",
    "sup_distance",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [x1_min,x1_max] x [x2_min,x2_max], n1 x n2 nodes."""

    x1_range: tuple
    x2_range: tuple
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 8 or self.n2 < 8:
            raise ValueError("grid needs at least 8 nodes per direction")
        if not (self.x1_range[1] > self.x1_range[0]
                and self.x2_range[1] > self.x2_range[0]):
            raise ValueError("empty coordinate range")

    @property
    def h1(self):
        return (self.x1_range[1] - self.x1_range[0]) / (self.n1 - 1)

    @property
    def h2(self):
        return (self.x2_range[1] - self.x2_range[0]) / (self.n2 - 1)

    @property
    def x1(self):
        return np.linspace(self.x1_range[0], self.x1_range[1], self.n1)

    @property
    def x2(self):
        return np.linspace(self.x2_range[0], self.x2_range[1], self.n2)

    @property
    def ex2(self):
        """Row vector exp(2*x2): inverse-metric coefficient h^11."""
        return np.exp(2.0 * self.x2)

    def mesh(self):
        """Node coordinate arrays X1, X2 of shape (n1, n2)."""
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def quad_weights(self):
        """Volume-element quadrature weights, trapezoid at the edges.

        w[i,j] = exp(-x2_j) * h1 * h2, halved on edge rows/columns.
        """
        w1 = np.full(self.n1, self.h1)
        w1[0] = w1[-1] = 0.5 * self.h1
        w2 = np.full(self.n2, self.h2)
        w2[0] = w2[-1] = 0.5 * self.h2
        return np.outer(w1, w2 * np.exp(-self.x2))

    def refined(self):
        """Grid with both spacings halved (node counts 2n-1)."""
        return Grid(self.x1_range, self.x2_range, 2 * self.n1 - 1,
                    2 * self.n2 - 1)

    def interior_mask(self, trim=1):
        m = np.zeros((self.n1, self.n2), dtype=bool)
        m[trim:-trim, trim:-trim] = True
        return m


@dataclass
class MapField:
    """Map of the truncated rectangle into the target chart plane."""

    grid: Grid
    u1: np.ndarray
    u2: np.ndarray

    def copy(self):
        return MapField(self.grid, self.u1.copy(), self.u2.copy())

    def boundary_ring(self):
        """Concatenated boundary values of (u1, u2), a fixed traversal."""
        ring = []
        for a in (self.u1, self.u2):
            ring.append(np.concatenate([a[0, :], a[-1, :], a[1:-1, 0],
                                        a[1:-1, -1]]))
        return np.stack(ring)

    def is_finite(self):
        return bool(np.isfinite(self.u1).all() and np.isfinite(self.u2).all())


@dataclass
class TangentField:
    """Section of the pulled-back tangent bundle along a map."""

    grid: Grid
    X1: np.ndarray
    X2: np.ndarray

    def copy(self):
        return TangentField(self.grid, self.X1.copy(), self.X2.copy())


def identity_map(grid):
    """The identity MapField u(x) = x."""
    X1, X2 = grid.mesh()
    return MapField(grid, X1.copy(), X2.copy())


def constant_map(grid, p):
    """Constant MapField with value p = (p1, p2)."""
    return MapField(grid, np.full((grid.n1, grid.n2), float(p[0])),
                    np.full((grid.n1, grid.n2), float(p[1])))


def partial_i(grid, f, i):
    """Discrete partial derivative along axis i (1 or 2).

    Centered in the interior, one-sided second order on the first and
    last line, so affine functions differentiate exactly everywhere.
    Complex fields are differentiated componentwise.
    """
    f = np.asarray(f)
    if f.dtype.kind != "c":
        f = f.astype(float)
    h = grid.h1 if i == 1 else grid.h2
    ax = i - 1
    g = np.moveaxis(f, ax, 0)
    out = np.empty_like(g)
    out[1:-1] = (g[2:] - g[:-2]) / (2.0 * h)
    out[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h)
    out[-1] = (3.0 * g[-1] - 4.0 * g[-2] + g[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, ax)


def _second_partial(grid, f, i):
    """Pure second derivative along axis i, one-sided at the edges."""
    f = np.asarray(f)
    if f.dtype.kind != "c":
        f = f.astype(float)
    h = grid.h1 if i == 1 else grid.h2
    ax = i - 1
    g = np.moveaxis(f, ax, 0)
    out = np.empty_like(g)
    out[1:-1] = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / (h * h)
    out[0] = (2.0 * g[0] - 5.0 * g[1] + 4.0 * g[2] - g[3]) / (h * h)
    out[-1] = (2.0 * g[-1] - 5.0 * g[-2] + 4.0 * g[-3] - g[-4]) / (h * h)
    return np.moveaxis(out, 0, ax)


def laplace_beltrami(grid, f):
    """Laplace-Beltrami operator of the chart metric applied to f.

    In these coordinates Delta f = exp(2*x2) d11 f + d22 f - d2 f, which
    is the divergence form (1/sqrt h) d_i (sqrt h h^{ij} d_j f) written
    out for h = diag(exp(-2*x2), 1).
    """
    return (grid.ex2[None, :] * _second_partial(grid, f, 1)
            + _second_partial(grid, f, 2) - partial_i(grid, f, 2))


def pullback_covariant_derivative(u, X, i):
    """Covariant derivative of X along coordinate direction i.

    Componentwise, with the target symbols evaluated at u(x):

        (D_i X)^1 = d_i X^1 - (d_i u^1 X^2 + d_i u^2 X^1)
        (D_i X)^2 = d_i X^2 + exp(-2 u^2) d_i u^1 X^1
    """
    g = u.grid
    du1 = partial_i(g, u.u1, i)
    du2 = partial_i(g, u.u2, i)
    dX1 = partial_i(g, X.X1, i)
    dX2 = partial_i(g, X.X2, i)
    E = np.exp(-2.0 * u.u2)
    return TangentField(g, dX1 - (du1 * X.X2 + du2 * X.X1),
                        dX2 + E * du1 * X.X1)


def tension_field(u, zero_ring=True):
    """Tension field of a map: trace of its second fundamental form.

    Interior values follow the component formula

        tau^1 = Lap u^1 - 2 (exp(2*x2) d1u1 d1u2 + d2u1 d2u2)
        tau^2 = Lap u^2 + exp(-2 u^2) (exp(2*x2) (d1u1)^2 + (d2u1)^2)

    and the boundary ring is zeroed (Dirichlet data stays pinned) unless
    zero_ring is False, in which case one-sided stencils are used there.
    """
    g = u.grid
    ex2 = g.ex2[None, :]
    d1u1 = partial_i(g, u.u1, 1)
    d2u1 = partial_i(g, u.u1, 2)
    d1u2 = partial_i(g, u.u2, 1)
    d2u2 = partial_i(g, u.u2, 2)
    E = np.exp(-2.0 * u.u2)
    t1 = laplace_beltrami(g, u.u1) - 2.0 * (ex2 * d1u1 * d1u2 + d2u1 * d2u2)
    t2 = laplace_beltrami(g, u.u2) + E * (ex2 * d1u1 * d1u1 + d2u1 * d2u1)
    if zero_ring:
        for a in (t1, t2):
            a[0, :] = a[-1, :] = 0.0
            a[:, 0] = a[:, -1] = 0.0
    return TangentField(g, t1, t2)


def second_fundamental_form(u):
    """Components N[i][j] = (nabla du)_{ij} as TangentFields.

    (nabla du)_{ij}^a = d_i d_j u^a + Gbar^a_{bc}(u) d_i u^b d_j u^c
                        - Gamma^k_{ij} d_k u^a,
    with the domain symbols Gamma^1_{12} = -1, Gamma^2_{11} = exp(-2*x2).
    """
    g = u.grid
    du = {i: (partial_i(g, u.u1, i), partial_i(g, u.u2, i)) for i in (1, 2)}
    E = np.exp(-2.0 * u.u2)
    em2x2 = np.exp(-2.0 * g.x2)[None, :]
    out = {}
    for i in (1, 2):
        for j in (1, 2):
            if j >= i:
                dij1 = (partial_i(g, du[j][0], i) if i != j
                        else _second_partial(g, u.u1, i))
                dij2 = (partial_i(g, du[j][1], i) if i != j
                        else _second_partial(g, u.u2, i))
                a1 = dij1 - (du[i][0] * du[j][1] + du[i][1] * du[j][0])
                a2 = dij2 + E * du[i][0] * du[j][0]
                if i == 1 and j == 2:
                    a1 = a1 + du[1][0]  # -Gamma^1_{12} d_1 u^1
                    a2 = a2 + du[1][1]
                if i == j == 1:
                    a1 = a1 - em2x2 * du[2][0]  # -Gamma^2_{11} d_2 u^1
                    a2 = a2 - em2x2 * du[2][1]
                out[(i, j)] = TangentField(g, a1, a2)
            else:
                out[(i, j)] = out[(j, i)]
    return out


def energy_density(u):
    """Pointwise Dirichlet energy density e(u) = |du|^2 / 2."""
    g = u.grid
    ex2 = g.ex2[None, :]
    d1u1 = partial_i(g, u.u1, 1)
    d2u1 = partial_i(g, u.u1, 2)
    d1u2 = partial_i(g, u.u2, 1)
    d2u2 = partial_i(g, u.u2, 2)
    E = np.exp(-2.0 * u.u2)
    return 0.5 * (ex2 * (d1u1 * d1u1 * E + d1u2 * d1u2)
                  + d2u1 * d2u1 * E + d2u2 * d2u2)


def lp_norm(grid, f, p, trim=0):
    """Weighted L^p norm of a scalar field, p in {1, 2, inf}.

    Quadrature uses the volume density exp(-x2) with trapezoid edge
    weights.  trim > 0 restricts to nodes at least trim layers from the
    boundary (weights re-trapezoided on the trimmed rectangle).
    """
    f = np.asarray(f)
    if f.dtype.kind == "c":
        f = np.abs(f)
    f = f.astype(float)
    if trim:
        sub = Grid((grid.x1[trim], grid.x1[grid.n1 - 1 - trim]),
                   (grid.x2[trim], grid.x2[grid.n2 - 1 - trim]),
                   grid.n1 - 2 * trim, grid.n2 - 2 * trim)
        return lp_norm(sub, f[trim:-trim, trim:-trim], p)
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(f)))
    w = grid.quad_weights()
    if p == 1:
        return float(np.sum(w * np.abs(f)))
    if p == 2:
        return float(np.sqrt(np.sum(w * np.abs(f) ** 2)))
    raise ValueError("p must be 1, 2 or inf")


def tangent_norm_field(u, X):
    """Pointwise metric length |X|_g at u(x)."""
    return np.sqrt(np.exp(-2.0 * u.u2) * X.X1 ** 2 + X.X2 ** 2)


def tangent_lp_norm(u, X, p, trim=0):
    """L^p norm of a tangent field, contracted with the metric at u."""
    return lp_norm(u.grid, tangent_norm_field(u, X), p, trim=trim)


def gradient_sq_density(u, X):
    """Pointwise |nabla X|^2 = h^{ii} |D_i X|_g^2 for a tangent field."""
    g = u.grid
    E = np.exp(-2.0 * u.u2)
    total = np.zeros((g.n1, g.n2))
    hii = (g.ex2[None, :], 1.0)
    for i in (1, 2):
        D = pullback_covariant_derivative(u, X, i)
        total += hii[i - 1] * (E * D.X1 ** 2 + D.X2 ** 2)
    return total


def sup_distance(u, q):
    """Max over nodes of the geodesic distance between image points."""
    if u.grid != q.grid:
        raise ValueError("fields live on different grids")
    d = geometry.geodesic_distance((u.u1, u.u2), (q.u1, q.u2))
    return float(np.max(d))
