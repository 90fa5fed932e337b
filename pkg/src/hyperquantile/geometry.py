"""Hyperboloid-model primitives for hyperbolic space.

Points live on the upper sheet ``<p, p>_M = -1, p[0] > 0`` of the
hyperboloid in Minkowski space of signature (-, +, ..., +). All functions
broadcast over leading axes, so a stack of points has shape ``(..., n + 1)``.

Points are always stored on the curvature -1 hyperboloid. A space of
curvature ``kappa < 0`` is handled through the scaled isometry
``d_kappa = d / sqrt(-kappa)``; exp and log are the same maps on model
vectors for every curvature, only norms and distances change.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

# Below this Minkowski norm a tangent vector is treated as zero.
TINY = 1e-300
# -<p, q> below this switches dist to the difference-vector formula.
_NEAR = 1.5


@functools.lru_cache(maxsize=None)
def _signature(m):
    s = np.ones(m)
    s[0] = -1.0
    s.flags.writeable = False
    return s


def _arr(x):
    return np.asarray(x, dtype=float)


def minkowski_inner(a, b):
    """Minkowski pseudo-inner product ``-a0 b0 + sum_j aj bj`` over the last axis."""
    a = _arr(a)
    b = _arr(b)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    if a.shape[-1] < 2:
        raise ValueError("Minkowski vectors need at least 2 components")
    return (a * b) @ _signature(a.shape[-1])


def minkowski_norm(v):
    """Norm of a tangent vector; negative round-off in ``<v, v>_M`` is clipped."""
    return np.sqrt(np.maximum(minkowski_inner(v, v), 0.0))


def tangent_inner(a, b, kappa=-1.0):
    """Riemannian inner product of model tangent vectors at curvature ``kappa``."""
    return minkowski_inner(a, b) / -kappa


def tangent_norm(v, kappa=-1.0):
    return minkowski_norm(v) / np.sqrt(-kappa)


def origin(n=2):
    p = np.zeros(n + 1)
    p[0] = 1.0
    return p


def project(x):
    """Rescale ``x`` so that ``<x, x>_M = -1`` and ``x[0] > 0``."""
    x = _arr(x)
    q = -minkowski_inner(x, x)
    if np.any(q <= 0):
        raise ValueError("vector is not timelike; cannot project onto the hyperboloid")
    x = x / np.sqrt(q)[..., None]
    return np.where(x[..., :1] < 0, -x, x)


def project_tangent(p, v):
    """Orthogonal projection of ambient ``v`` onto ``T_p``."""
    p = _arr(p)
    v = _arr(v)
    return v + minkowski_inner(p, v)[..., None] * p


def check_point(p, tol=1e-9):
    """Raise ``ValueError`` unless every row of ``p`` lies on the hyperboloid."""
    p = _arr(p)
    err = np.abs(minkowski_inner(p, p) + 1.0)
    if np.any(err > tol) or np.any(p[..., 0] <= 0):
        raise ValueError(f"point(s) off the hyperboloid (max |<p,p>+1| = {np.max(err):.3g})")
    return p


def check_tangent(p, v, tol=1e-9):
    err = np.abs(minkowski_inner(p, v))
    if np.any(err > tol):
        raise ValueError(f"vector not tangent at base point (|<p,v>| = {np.max(err):.3g})")
    return _arr(v)


def _sinhc(t):
    # sinh(t) / t without the 0/0 at t = 0
    small = t < 1e-4
    safe = np.where(small, 1.0, t)
    return np.where(small, 1.0 + t * t / 6.0, np.sinh(safe) / safe)


def exp_map(p, v):
    """Exponential map ``exp_p(v)``, re-projected onto the hyperboloid."""
    p = _arr(p)
    v = _arr(v)
    t = minkowski_norm(v)[..., None]
    out = np.cosh(t) * p + _sinhc(t) * v
    return project(out)


def dist(p, q, kappa=-1.0):
    """Geodesic distance, accurate for both near and far pairs.

    Far pairs use ``arccosh(max(1, -<p, q>))``. Near pairs use
    ``2 asinh(|q - p|_M / 2)``, which follows from
    ``<q - p, q - p>_M = 4 sinh^2(d / 2)`` and avoids the ill-conditioning
    of arccosh at 1.
    """
    p = _arr(p)
    q = _arr(q)
    c = -minkowski_inner(p, q)
    diff = q - p
    chord = np.sqrt(np.maximum(minkowski_inner(diff, diff), 0.0))
    near = 2.0 * np.arcsinh(chord / 2.0)
    far = np.arccosh(np.maximum(c, 1.0))
    d = np.where(c < _NEAR, near, far)
    return d / np.sqrt(-kappa)


def log_map(p, q):
    """Inverse exponential map ``log_p(q)``; zero when ``q == p``."""
    p = _arr(p)
    q = _arr(q)
    diff = q - p
    # q + <p,q> p written in terms of q - p, which is exact as q -> p
    w = diff + minkowski_inner(p, diff)[..., None] * p
    nw = minkowski_norm(w)[..., None]
    d = dist(p, q)[..., None]
    scale = np.where(nw > TINY, d / np.where(nw > TINY, nw, 1.0), 0.0)
    return scale * w


def to_ball(p):
    """Hyperboloid to Poincare ball: ``(p1, ..., pn) / (p0 + 1)``."""
    p = _arr(p)
    return p[..., 1:] / (p[..., :1] + 1.0)


def from_ball(b):
    b = _arr(b)
    sq = np.sum(b * b, axis=-1, keepdims=True)
    if np.any(sq >= 1.0):
        raise ValueError("Poincare ball coordinates must have Euclidean norm < 1")
    return np.concatenate([1.0 + sq, 2.0 * b], axis=-1) / (1.0 - sq)


def mobius_add(x, y):
    x = _arr(x)
    y = _arr(y)
    xy = np.sum(x * y, axis=-1, keepdims=True)
    xx = np.sum(x * x, axis=-1, keepdims=True)
    yy = np.sum(y * y, axis=-1, keepdims=True)
    num = (1 + 2 * xy + yy) * x + (1 - xx) * y
    return num / (1 + 2 * xy + xx * yy)


def ball_dist(a, b):
    """Poincare-ball distance ``2 artanh |(-a) (+) b|``."""
    m = mobius_add(-_arr(a), b)
    return 2.0 * np.arctanh(np.linalg.norm(m, axis=-1))


@dataclass(frozen=True)
class BoundaryDir:
    """A point at infinity, given by an anchor point and a unit tangent there.

    The boundary point is the endpoint of the ray ``t -> exp_anchor(t dir)``.
    Different (anchor, dir) pairs can name the same boundary point; use
    :func:`same_boundary` to compare.
    """

    anchor: np.ndarray
    dir: np.ndarray

    def __post_init__(self):
        a = check_point(np.array(self.anchor, dtype=float))
        v = check_tangent(a, np.array(self.dir, dtype=float))
        if abs(minkowski_norm(v) - 1.0) > 1e-9:
            raise ValueError("BoundaryDir.dir must have unit Minkowski norm")
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "dir", v)

    @classmethod
    def from_vector(cls, anchor, v):
        """Normalize ``v`` (projected to the tangent space) into a boundary direction."""
        anchor = _arr(anchor)
        v = project_tangent(anchor, v)
        return cls(anchor, v / minkowski_norm(v))

    @classmethod
    def from_angle(cls, theta, anchor=None):
        """Direction ``(0, cos t, sin t)`` at the origin, transported to ``anchor``."""
        v = np.array([0.0, np.cos(theta), np.sin(theta)])
        o = origin(2)
        if anchor is None:
            return cls(o, v)
        anchor = _arr(anchor)
        return cls.from_vector(anchor, parallel_transport(o, anchor, v))

    @property
    def null_vector(self):
        """``anchor + dir``: a future null vector whose ray identifies the boundary point."""
        return self.anchor + self.dir

    def transformed(self, G):
        """Image of this boundary point under the Lorentz isometry ``G``."""
        a = apply_isometry(G, self.anchor)
        v = project_tangent(a, np.asarray(G) @ self.dir)
        return BoundaryDir(a, v / minkowski_norm(v))


def radial_field_arrays(anchor, dir, p):
    """Unit tangent at ``p`` pointing toward the boundary point ``(anchor, dir)``."""
    z = _arr(anchor) + _arr(dir)
    p = _arr(p)
    w = z + minkowski_inner(p, z)[..., None] * p
    return w / minkowski_norm(w)[..., None]


def radial_field(xi: BoundaryDir, p):
    return radial_field_arrays(xi.anchor, xi.dir, p)


def same_boundary(a: BoundaryDir, b: BoundaryDir, ref=None, tol=1e-8):
    ref = origin(a.anchor.shape[-1] - 1) if ref is None else ref
    return bool(minkowski_norm(radial_field(a, ref) - radial_field(b, ref)) < tol)


def parallel_transport(p, q, v):
    """Transport ``v`` in ``T_p`` to ``T_q`` along the connecting geodesic."""
    p = _arr(p)
    q = _arr(q)
    v = _arr(v)
    coef = minkowski_inner(q, v) / (1.0 - minkowski_inner(p, q))
    return v + coef[..., None] * (p + q)


def minkowski_form(dim):
    J = np.eye(dim)
    J[0, 0] = -1.0
    return J


def lorentz_isometry(p_from, p_to):
    """Hyperbolic translation along the geodesic taking ``p_from`` to ``p_to``.

    ``G = I + (a + b)(a + b)^T J / (1 - <a, b>) - 2 b a^T J``. On ``T_a`` it
    acts as parallel transport.
    """
    a = _arr(p_from)
    b = _arr(p_to)
    J = minkowski_form(a.shape[-1])
    s = a + b
    G = np.eye(a.shape[-1]) + np.outer(s, s @ J) / (1.0 - minkowski_inner(a, b))
    G -= 2.0 * np.outer(b, a @ J)
    return G


def rotation_isometry(R):
    """Embed an orthogonal ``n x n`` matrix as an isometry fixing the origin."""
    R = _arr(R)
    G = np.eye(R.shape[0] + 1)
    G[1:, 1:] = R
    return G


def is_lorentz(G, tol=1e-9):
    G = _arr(G)
    J = minkowski_form(G.shape[0])
    return bool(np.max(np.abs(G.T @ J @ G - J)) < tol * max(1.0, np.max(np.abs(G)) ** 2)
                and G[0, 0] > 0)


def apply_isometry(G, x):
    """Apply ``G`` to points stacked on the last axis and re-project."""
    return project(_arr(x) @ np.asarray(G).T)


def tangent_basis(p):
    """Orthonormal basis of ``T_p`` as the rows of an ``(n, n + 1)`` array.

    Gram-Schmidt (Minkowski inner product) on the projections of the spatial
    unit vectors ``e_1, ..., e_n``, in that order.
    """
    p = _arr(p)
    m = p.shape[-1]
    basis = []
    for j in range(1, m):
        e = np.zeros(m)
        e[j] = 1.0
        v = project_tangent(p, e)
        for b in basis:
            v = v - minkowski_inner(b, v) * b
        # second pass keeps orthogonality at ~1e-16 for far-out base points
        for b in basis:
            v = v - minkowski_inner(b, v) * b
        basis.append(v / minkowski_norm(v))
    return np.array(basis)


def to_coords(basis, v):
    """Coordinates of tangent vector(s) ``v`` in ``basis``."""
    return minkowski_inner(_arr(v)[..., None, :], basis)


def from_coords(basis, c):
    return _arr(c) @ basis
