"""Synthetic data sets on the hyperbolic plane.

Four families, each with a level ``nu`` in 0..3 at which the named
characteristic shrinks as ``nu`` grows:

* dispersion: ``(v1, 4 * 2**-nu * v2)``
* skewness: ``(1 - nu/3) (v1**2, v2**2 / 2) + (nu/3) (v1, v2 / 2)``
* kurtosis: ``(1 - nu/3) (v1**3, v2**3 / 2) + (nu/3) (v1, v2 / 2)``
* spherical: ``(1 - nu/3) (v1**3, v2**3) + (nu/3) (v1, v2)``

with ``v ~ N(0, I/4)``. The 2-vectors are centred at their Euclidean
geometric median and pushed to the hyperboloid through ``exp`` at the
origin, which makes the origin the geometric median of every data set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .solver import Dataset

FAMILIES = ("dispersion", "skewness", "kurtosis", "spherical")


@dataclass(frozen=True)
class GenSpec:
    family: str
    nu: int
    n_points: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.nu not in (0, 1, 2, 3):
            raise ValueError("nu must be 0, 1, 2 or 3")
        if self.n_points < 1:
            raise ValueError("n_points must be positive")


def normal_pool(n, seed):
    """``n`` draws from N(0, I/4) via Box-Muller on PCG64 uniforms."""
    rng = np.random.Generator(np.random.PCG64(seed))
    u1 = 1.0 - rng.random(n)  # (0, 1], keeps log finite
    u2 = rng.random(n)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.column_stack([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return 0.5 * z


def family_vectors(v, family, nu):
    v1, v2 = v[:, 0], v[:, 1]
    t = nu / 3.0
    if family == "dispersion":
        return np.column_stack([v1, 4.0 * 2.0 ** (-nu) * v2])
    if family == "skewness":
        return (1 - t) * np.column_stack([v1 ** 2, v2 ** 2 / 2]) + t * np.column_stack([v1, v2 / 2])
    if family == "kurtosis":
        return (1 - t) * np.column_stack([v1 ** 3, v2 ** 3 / 2]) + t * np.column_stack([v1, v2 / 2])
    if family == "spherical":
        return (1 - t) * np.column_stack([v1 ** 3, v2 ** 3]) + t * np.column_stack([v1, v2])
    raise ValueError(f"unknown family {family!r}")


def geomedian_gradient(vectors, m):
    """Gradient of ``sum_j |w_j - m|``, with the standard subgradient rule at data points.

    Coincident points contribute a unit-ball subgradient; the minimal-norm
    element is returned, so zero means ``m`` is optimal.
    """
    diff = vectors - m
    r = np.linalg.norm(diff, axis=1)
    tie = r < 1e-14
    g = -np.sum(diff[~tie] / r[~tie, None], axis=0)
    k = int(np.sum(tie))
    ng = np.linalg.norm(g)
    if k and ng > 0:
        g = g * max(ng - k, 0.0) / ng
    elif k:
        g = np.zeros_like(g)
    return g


def euclidean_geomedian(vectors, tol=1e-10, max_iter=100_000):
    """Euclidean geometric median by Weiszfeld iteration.

    Uses the Vardi-Zhang modification when the iterate lands on a data
    point. Stops when the subgradient of the summed distance has norm
    below ``tol``; raises ``RuntimeError`` otherwise.
    """
    w = np.atleast_2d(np.asarray(vectors, dtype=float))
    if len(w) == 0:
        raise ValueError("need at least one vector")
    if len(w) == 1:
        return w[0].copy()
    m = np.median(w, axis=0)
    for _ in range(max_iter):
        if np.linalg.norm(geomedian_gradient(w, m)) <= tol:
            return m
        diff = w - m
        r = np.linalg.norm(diff, axis=1)
        tie = r < 1e-14
        inv = 1.0 / r[~tie]
        T = np.sum(w[~tie] * inv[:, None], axis=0) / inv.sum()
        k = int(np.sum(tie))
        if k == 0:
            m_new = T
        else:
            Rvec = np.sum(diff[~tie] * inv[:, None], axis=0)
            Rn = np.linalg.norm(Rvec)
            gamma = min(1.0, k / Rn) if Rn > 0 else 1.0
            m_new = (1 - gamma) * T + gamma * m
        if np.array_equal(m_new, m):
            break
        m = m_new
    if np.linalg.norm(geomedian_gradient(w, m)) <= tol:
        return m
    raise RuntimeError("Weiszfeld iteration did not converge")


def embed(w):
    """``exp`` at the origin of the tangent vectors ``(0, w_j)``."""
    w = np.atleast_2d(w)
    v = np.concatenate([np.zeros((len(w), 1)), w], axis=1)
    return geo.exp_map(geo.origin(w.shape[1]), v)


def centred_vectors(spec: GenSpec, pool=None):
    v = normal_pool(spec.n_points, spec.seed) if pool is None else pool
    w = family_vectors(v, spec.family, spec.nu)
    return w - euclidean_geomedian(w)


def generate(spec: GenSpec, pool=None):
    """Data set for ``spec``; ``pool`` overrides the N(0, I/4) draws."""
    return Dataset(embed(centred_vectors(spec, pool)))


def generate_all(seed=0, n_points=300):
    """All 16 data sets built from one shared pool of draws."""
    pool = normal_pool(n_points, seed)
    return {(f, nu): generate(GenSpec(f, nu, n_points, seed), pool)
            for f in FAMILIES for nu in range(4)}
