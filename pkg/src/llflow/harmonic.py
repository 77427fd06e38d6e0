"""Holomorphic harmonic maps of the disk and chart-side initial data.

A polynomial f with sum of coefficient moduli below one maps the closed
disk strictly inside itself; such maps are harmonic between Poincare
disks and convert, node by node, into maps of the chart rectangle.
Perturbing a converted map inside a compact ball generates the initial
data class whose flows the rest of the package studies.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import fields as F
from . import geometry

__all__ = [
    "HolomorphicMapSpec",
    "AdmissibilityReport",
    "eval_holomorphic",
    "to_chart",
    "admissibility_report",
    "perturb",
]


@dataclass(frozen=True)
class HolomorphicMapSpec:
    """Polynomial f(z) = sum a_k z^k with complex coefficients.

    coefficient_sum() < 1 guarantees the closed disk maps strictly
    inside the open disk; validate() enforces it.  Construction itself
    does not, so that boundary cases (the identity) remain usable in
    diagnostics that do not rely on strict containment.
    """

    coefficients: tuple

    @staticmethod
    def from_pairs(pairs):
        """Build from a JSON-style list of [re, im] pairs."""
        return HolomorphicMapSpec(tuple(complex(p[0], p[1]) for p in pairs))

    @staticmethod
    def scaling(lam):
        """The map f(z) = lam * z."""
        return HolomorphicMapSpec((0j, complex(lam)))

    def coefficient_sum(self):
        return float(sum(abs(a) for a in self.coefficients))

    def validate(self):
        s = self.coefficient_sum()
        if not s < 1.0:
            raise ValueError(
                f"sum of |coefficients| is {s:.6g}; need < 1 for strict "
                "containment of the image in the disk")
        return self


def eval_holomorphic(spec, z):
    """Evaluate the polynomial at complex z (Horner form)."""
    z = np.asarray(z, dtype=complex)
    acc = np.zeros_like(z)
    for a in reversed(spec.coefficients):
        acc = acc * z + a
    return acc


def to_chart(spec, grid):
    """Convert the disk map into a MapField on the chart rectangle.

    Each node goes chart -> disk -> f -> disk -> chart; both conversions
    are isometries, so harmonicity of f carries over exactly.
    """
    X1, X2 = grid.mesh()
    re, im = geometry.chart_to_disk(X1, X2)
    w = eval_holomorphic(spec, re + 1j * im)
    u1, u2 = geometry.disk_to_chart(w.real, w.imag)
    return F.MapField(grid, u1, u2)


@dataclass
class AdmissibilityReport:
    d_l2: float          # ||dQ||_L2
    grad_d_l2: float     # ||nabla dQ||_L2
    grad2_d_l2: float    # ||nabla^2 dQ||_L2  (first-order accurate)
    range_radius: float  # geodesic radius of the image about Q(origin)
    weighted_sup: float  # max e^{r(x)} |dQ|(x)

    def all_finite(self):
        return all(map(math.isfinite, (self.d_l2, self.grad_d_l2,
                                       self.grad2_d_l2, self.range_radius,
                                       self.weighted_sup)))


def _sff_l2(u):
    g = u.grid
    sff = F.second_fundamental_form(u)
    hii = (g.ex2[None, :], np.ones((1, g.n2)))
    E = np.exp(-2.0 * u.u2)
    dens = np.zeros((g.n1, g.n2))
    for i in (1, 2):
        for j in (1, 2):
            N = sff[(i, j)]
            dens += hii[i - 1] * hii[j - 1] * (E * N.X1 ** 2 + N.X2 ** 2)
    return dens, sff


def _third_order_density(u, sff):
    """|nabla^2 du|^2 via one more covariant derivative of nabla du.

    Nested one-sided/centered differences: the result is first-order
    accurate, which suffices for finiteness and stability reports.
    """
    g = u.grid
    hii = (g.ex2[None, :], np.ones((1, g.n2)))
    E = np.exp(-2.0 * u.u2)
    em2x2 = np.exp(-2.0 * g.x2)[None, :]
    du = {i: (F.partial_i(g, u.u1, i), F.partial_i(g, u.u2, i))
          for i in (1, 2)}
    dens = np.zeros((g.n1, g.n2))
    for k in (1, 2):
        for i in (1, 2):
            for j in (1, 2):
                N = sff[(i, j)]
                # target-connection part on the vector index
                a1 = (F.partial_i(g, N.X1, k)
                      - (du[k][0] * N.X2 + du[k][1] * N.X1))
                a2 = F.partial_i(g, N.X2, k) + E * du[k][0] * N.X1
                # domain-connection part on the two covariant indices
                for (p, q), other in (((k, i), j), ((k, j), i)):
                    if p == 1 and q == 2 or p == 2 and q == 1:
                        # Gamma^1_{12} = -1 pulls in the (1, other) slot
                        M = sff[(1, other)]
                        a1 = a1 + M.X1
                        a2 = a2 + M.X2
                    elif p == 1 and q == 1:
                        # Gamma^2_{11} = exp(-2 x2)
                        M = sff[(2, other)]
                        a1 = a1 - em2x2 * M.X1
                        a2 = a2 - em2x2 * M.X2
                dens += (hii[k - 1] * hii[i - 1] * hii[j - 1]
                         * (E * a1 ** 2 + a2 ** 2))
    return dens


def admissibility_report(Q):
    """Discrete admissibility functionals of a chart map.

    The weight r(x) is the geodesic distance of the domain node to the
    chart origin; |dQ| is sqrt(2 e(Q)).
    """
    g = Q.grid
    e = F.energy_density(Q)
    d_l2 = math.sqrt(F.lp_norm(g, 2.0 * e, 1))
    sff_dens, sff = _sff_l2(Q)
    grad_d_l2 = math.sqrt(F.lp_norm(g, sff_dens, 1))
    grad2_d_l2 = math.sqrt(F.lp_norm(g, _third_order_density(Q, sff), 1))
    X1, X2 = g.mesh()
    r = geometry.geodesic_distance((X1, X2), (np.zeros_like(X1),
                                              np.zeros_like(X2)))
    weighted_sup = float(np.max(np.exp(r) * np.sqrt(2.0 * e)))
    ic, jc = g.n1 // 2, g.n2 // 2
    center = (Q.u1[ic, jc], Q.u2[ic, jc])
    radius = float(np.max(geometry.geodesic_distance(
        (Q.u1, Q.u2), (np.full_like(Q.u1, center[0]),
                       np.full_like(Q.u2, center[1])))))
    return AdmissibilityReport(d_l2=d_l2, grad_d_l2=grad_d_l2,
                               grad2_d_l2=grad2_d_l2, range_radius=radius,
                               weighted_sup=weighted_sup)


def bump_profile(grid, center, radius):
    """Smooth compactly supported bump, 1 at the center, 0 outside.

    Shape exp(1 - 1/(1 - (rho/R)^2)) in chart coordinates; support is
    the open coordinate ball of the given radius.
    """
    X1, X2 = grid.mesh()
    rho2 = ((X1 - center[0]) ** 2 + (X2 - center[1]) ** 2) / radius ** 2
    out = np.zeros_like(X1)
    inside = rho2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
    return out


def perturb(Q, center, radius, amplitude, direction=(0.0, 1.0)):
    """Add a compactly supported bump to Q in target coordinates.

    The support ball must stay strictly inside the interior of the
    rectangle (at least one full node layer away from the ring); the
    boundary ring is untouched by construction.
    """
    g = Q.grid
    if (center[0] - radius <= g.x1_range[0] + g.h1
            or center[0] + radius >= g.x1_range[1] - g.h1
            or center[1] - radius <= g.x2_range[0] + g.h2
            or center[1] + radius >= g.x2_range[1] - g.h2):
        raise ValueError("bump support touches the boundary ring")
    b = amplitude * bump_profile(g, center, radius)
    return F.MapField(g, Q.u1 + direction[0] * b, Q.u2 + direction[1] * b)
