"""Pointwise geometry of the hyperbolic plane in two models.

All computations use the global horocyclic chart (x1, x2) in which the
metric is ``exp(-2*x2) dx1^2 + dx2^2``, together with the hyperboloid
embedding in Minkowski 3-space and the Poincare disk model.  Functions
accept scalars or numpy arrays and broadcast elementwise; tangent vectors
are given by their components in the coordinate basis at the base point,
whose second coordinate is passed explicitly.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MetricData",
    "ChristoffelSymbols",
    "embed_iwasawa",
    "chart_from_hyperboloid",
    "minkowski_form",
    "metric_at",
    "metric_dot",
    "metric_norm",
    "christoffel_at",
    "geodesic_distance",
    "apply_J",
    "frame_theta",
    "disk_to_chart",
    "chart_to_disk",
    "disk_distance",
]


@dataclass(frozen=True)
class MetricData:
    """Metric components at a chart point: h11 = exp(-2*x2), h22 = 1."""

    h11: np.ndarray
    h22: np.ndarray
    inv11: np.ndarray
    inv22: np.ndarray
    sqrt_det: np.ndarray


@dataclass(frozen=True)
class ChristoffelSymbols:
    """Nonzero symbols of the chart metric.

    gamma[k-1][i-1][j-1] stores Gamma^k_{ij}.  The only nonzero entries
    are Gamma^1_{12} = Gamma^1_{21} = -1 and Gamma^2_{11} = exp(-2*x2).
    """

    g1_12: np.ndarray
    g2_11: np.ndarray

    def tensor(self):
        """Full 2x2x2 array gamma[k][i][j] (trailing axes broadcast)."""
        z = np.zeros_like(np.asarray(self.g2_11, dtype=float))
        o = z + self.g1_12
        return np.array([[[z, o], [o, z]], [[z + self.g2_11, z], [z, z]]])


def embed_iwasawa(x1, x2):
    """Map a chart point onto the unit hyperboloid in Minkowski space.

    Returns the three ambient components (v0, v1, v2); the image satisfies
    v0^2 - v1^2 - v2^2 = 1 with v0 > 0.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    emx2 = np.exp(-x2)
    q = 0.5 * emx2 * x1 * x1
    return np.cosh(x2) + q, np.sinh(x2) + q, emx2 * x1


def chart_from_hyperboloid(v0, v1, v2):
    """Invert the hyperboloid embedding.

    Uses v0 - v1 = exp(-x2), which is positive everywhere on the upper
    hyperboloid sheet.
    """
    gap = np.asarray(v0, dtype=float) - np.asarray(v1, dtype=float)
    return np.asarray(v2, dtype=float) / gap, -np.log(gap)


def minkowski_form(p, q):
    """Bilinear form [p, q] = p0*q0 - p1*q1 - p2*q2 on triples."""
    return p[0] * q[0] - p[1] * q[1] - p[2] * q[2]


def metric_at(x2):
    """Metric data of the chart at second coordinate x2."""
    x2 = np.asarray(x2, dtype=float)
    h11 = np.exp(-2.0 * x2)
    one = np.ones_like(h11)
    return MetricData(h11=h11, h22=one, inv11=1.0 / h11, inv22=one,
                      sqrt_det=np.exp(-x2))


def metric_dot(X, Y, x2):
    """Inner product of tangent components X=(X1,X2), Y=(Y1,Y2) at x2."""
    return X[0] * Y[0] * np.exp(-2.0 * np.asarray(x2, dtype=float)) + X[1] * Y[1]


def metric_norm(X, x2):
    """Pointwise metric length of a tangent vector."""
    return np.sqrt(metric_dot(X, X, x2))


def christoffel_at(x2):
    """Christoffel symbols of the chart metric at x2."""
    x2 = np.asarray(x2, dtype=float)
    return ChristoffelSymbols(g1_12=np.full_like(x2, -1.0),
                              g2_11=np.exp(-2.0 * x2))


def geodesic_distance(p, q):
    """Geodesic distance between chart points p=(x1,x2), q=(y1,y2).

    Computed through the hyperboloid model: with t = [P,Q] - 1 >= 0 the
    distance is arccosh(1 + t) = log1p(t + sqrt(t (2 + t))).  Writing
    t = ((D1)^2 + (D2)^2 - (D0)^2) / 2 in the coordinate differences D
    avoids the cancellation of the plain pairing near coincident points
    and makes d(p, p) exactly zero; t is clamped at 0 so rounding never
    leaves the domain.
    """
    P = embed_iwasawa(p[0], p[1])
    Q = embed_iwasawa(q[0], q[1])
    d0, d1, d2 = P[0] - Q[0], P[1] - Q[1], P[2] - Q[2]
    t = np.maximum(0.5 * (d1 * d1 + d2 * d2 - d0 * d0), 0.0)
    return np.log1p(t + np.sqrt(t * (2.0 + t)))


def apply_J(X, x2):
    """Rotate a tangent vector a quarter turn: the complex structure.

    In the coordinate basis, J maps (X1, X2) at a point with second
    coordinate x2 to (-X2*exp(x2), X1*exp(-x2)).  J is a pointwise
    isometry and J(J(X)) = -X.
    """
    x2 = np.asarray(x2, dtype=float)
    return -X[1] * np.exp(x2), X[0] * np.exp(-x2)


def frame_theta(x2):
    """Global orthonormal frame (Theta1, Theta2) at second coordinate x2.

    Theta1 = (exp(x2), 0) and Theta2 = (0, 1) in the coordinate basis;
    Theta2 equals J(Theta1).
    """
    x2 = np.asarray(x2, dtype=float)
    ex2 = np.exp(x2)
    zero = np.zeros_like(ex2)
    return (ex2, zero), (zero, np.ones_like(ex2))


def disk_to_chart(re, im):
    """Convert a Poincare-disk point to chart coordinates.

    The disk origin maps to the chart origin (hyperboloid apex) and the
    conversion is an orientation-preserving isometry.  Raises ValueError
    when any point lies on or outside the unit circle.
    """
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    r2 = re * re + im * im
    if np.any(r2 >= 1.0):
        raise ValueError("disk point must satisfy |z| < 1")
    denom = 1.0 - r2
    v0 = (1.0 + r2) / denom
    v1 = 2.0 * re / denom
    v2 = 2.0 * im / denom
    return chart_from_hyperboloid(v0, v1, v2)


def chart_to_disk(x1, x2):
    """Convert chart coordinates to the Poincare disk (inverse of above)."""
    v0, v1, v2 = embed_iwasawa(x1, x2)
    return v1 / (1.0 + v0), v2 / (1.0 + v0)


def disk_distance(z1, z2):
    """Closed-form hyperbolic distance between two disk points."""
    re1, im1 = np.asarray(z1[0], dtype=float), np.asarray(z1[1], dtype=float)
    re2, im2 = np.asarray(z2[0], dtype=float), np.asarray(z2[1], dtype=float)
    d2 = (re1 - re2) ** 2 + (im1 - im2) ** 2
    a = (1.0 - re1 * re1 - im1 * im1) * (1.0 - re2 * re2 - im2 * im2)
    return np.arccosh(np.maximum(1.0 + 2.0 * d2 / a, 1.0))
