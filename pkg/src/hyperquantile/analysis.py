"""Contours, transformation-retransformation, outliers and quantile-based measures."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import geometry as geo
from .geometry import BoundaryDir
from .solver import (ConvergenceError, Dataset, SolveResult, SolverConfig, _as_points,
                     frechet_mean, frechet_median, sample_quantiles)

log = logging.getLogger(__name__)


@dataclass
class DirectionSet:
    """``K`` unit tangents at ``center``, antipodally paired: ``dirs[k + K/2] = -dirs[k]``."""

    center: np.ndarray
    dirs: np.ndarray

    def __post_init__(self):
        self.center = geo.check_point(np.asarray(self.center, dtype=float))
        self.dirs = np.atleast_2d(np.asarray(self.dirs, dtype=float))
        K = len(self.dirs)
        if K % 2:
            raise ValueError("the number of directions must be even")
        geo.check_tangent(self.center, self.dirs)
        if np.max(np.abs(geo.minkowski_norm(self.dirs) - 1.0)) > 1e-9:
            raise ValueError("directions must have unit norm")
        if np.max(np.abs(self.dirs + np.roll(self.dirs, K // 2, axis=0))) > 1e-9:
            raise ValueError("directions must be antipodally paired (dirs[k + K/2] == -dirs[k])")

    @classmethod
    def default(cls, center=None, K=24):
        """``(0, cos(2 pi k/K), sin(2 pi k/K))``, k = 1..K, transported from the origin to ``center``."""
        if K % 2:
            raise ValueError("the number of directions must be even")
        o = geo.origin(2)
        k = np.arange(1, K + 1)
        v = np.column_stack([np.zeros(K), np.cos(2 * np.pi * k / K), np.sin(2 * np.pi * k / K)])
        # exact antipodes, independent of trig round-off
        v[K // 2:] = -v[:K // 2]
        if center is None:
            return cls(o, v)
        center = np.asarray(center, dtype=float)
        if center.shape != (3,):
            raise ValueError("default directions are defined on the hyperbolic plane only")
        w = geo.parallel_transport(o, center, v)
        w = geo.project_tangent(center, w)
        w /= geo.minkowski_norm(w)[:, None]
        w[K // 2:] = -w[:K // 2]
        return cls(center, w)

    def __len__(self):
        return len(self.dirs)

    def boundary(self):
        return [BoundaryDir(self.center, v) for v in self.dirs]

    def mapped(self, G):
        """Directions transported by the isometry ``G``."""
        c = geo.apply_isometry(G, self.center)
        w = geo.project_tangent(c, self.dirs @ np.asarray(G).T)
        w /= geo.minkowski_norm(w)[:, None]
        K = len(w)
        w[K // 2:] = -w[:K // 2]
        return DirectionSet(c, w)


@dataclass
class Contour:
    beta: float
    xis: list
    points: np.ndarray
    results: list = field(default_factory=list, repr=False)

    @property
    def converged(self):
        return all(r.converged for r in self.results)

    @property
    def failed(self):
        return [k for k, r in enumerate(self.results) if not r.converged]


def _median_start(X, cfg):
    if not isinstance(cfg.init, str) or cfg.init == "data":
        return None
    return frechet_median(X, cfg).point


def isoquantile_contour(data, beta, dirs: DirectionSet, cfg: SolverConfig | None = None,
                        start=None) -> Contour:
    """The (beta, xi)-quantile for every direction in ``dirs``.

    A failed direction does not raise; inspect ``Contour.failed``.
    """
    cfg = cfg or SolverConfig()
    X = _as_points(data)
    xis = dirs.boundary()
    if start is None:
        start = _median_start(X, cfg)
    results = sample_quantiles(X, beta, xis, cfg, start=start)
    if any(not r.converged for r in results):
        log.warning("beta=%g: %d of %d directions did not converge", beta,
                    sum(not r.converged for r in results), len(results))
    return Contour(float(beta), xis, np.array([r.point for r in results]), results)


@dataclass
class TRFrame:
    base: np.ndarray
    A: np.ndarray
    indices: tuple
    basis: np.ndarray
    criterion: float = float("nan")

    @classmethod
    def identity(cls, base):
        base = np.asarray(base, dtype=float)
        n = base.shape[0] - 1
        return cls(base, np.eye(n), (), geo.tangent_basis(base), 1.0)

    @property
    def is_identity(self):
        return np.array_equal(self.A, np.eye(len(self.A)))

    def _coords(self, x):
        return geo.to_coords(self.basis, geo.log_map(self.base, x))

    def _point(self, c):
        return geo.exp_map(self.base, geo.from_coords(self.basis, c))

    def transform(self, x):
        """``exp_m(A^-1 log_m(x))`` in basis coordinates at ``m``."""
        if self.is_identity:
            return np.array(x, dtype=float)
        return self._point(np.linalg.solve(self.A, self._coords(x).T).T)

    def retransform(self, x):
        """``exp_m(A log_m(x))``."""
        if self.is_identity:
            return np.array(x, dtype=float)
        return self._point(self._coords(x) @ self.A.T)


def isotropy_criterion(C):
    """``(tr C / n) / det(C)^(1/n)`` for covariance matrices stacked on the leading axis."""
    C = np.asarray(C, dtype=float)
    n = C.shape[-1]
    tr = np.trace(C, axis1=-2, axis2=-1) / n
    det = np.linalg.det(C)
    return tr / np.power(np.maximum(det, 1e-300), 1.0 / n)


def _subsets(N, n, cap, seed):
    total = math.comb(N, n)
    if total <= cap:
        return np.array(list(combinations(range(N), n)), dtype=int).reshape(-1, n)
    rng = np.random.default_rng(seed)
    picks = {tuple(sorted(rng.choice(N, size=n, replace=False))) for _ in range(cap)}
    return np.array(sorted(picks), dtype=int)


def select_tr_frame(data, cfg: SolverConfig | None = None, search_cap=10 ** 6, seed=0) -> TRFrame:
    """Choose ``A`` from data-point logs at the Frechet mean to make the data most isotropic.

    Every index subset is tried when there are at most ``search_cap`` of
    them, otherwise ``search_cap`` random subsets (fixed ``seed``). Ties go
    to the lexicographically first subset.
    """
    cfg = cfg or SolverConfig()
    X = _as_points(data)
    N, m = X.shape
    n = m - 1
    if N < n + 1:
        raise ValueError(f"need at least {n + 1} points for a TR frame")
    base = frechet_mean(X, cfg).point
    basis = geo.tangent_basis(base)
    L = geo.to_coords(basis, geo.log_map(base, X))
    S = np.cov(L, rowvar=False).reshape(n, n)
    subsets = _subsets(N, n, search_cap, seed)
    best_val, best_idx = np.inf, None
    for lo in range(0, len(subsets), 100_000):
        chunk = subsets[lo:lo + 100_000]
        A = np.transpose(L[chunk], (0, 2, 1))  # columns are the chosen log vectors
        det = np.linalg.det(A)
        good = np.abs(det) > 1e-12
        if not good.any():
            continue
        Ainv = np.linalg.inv(A[good])
        C = Ainv @ S @ np.transpose(Ainv, (0, 2, 1))
        vals = isotropy_criterion(C)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_idx = float(vals[j]), chunk[good][j]
    if best_idx is None:
        raise ValueError("every candidate TR matrix is singular")
    A = L[best_idx].T.copy()
    return TRFrame(base, A, tuple(int(i) for i in best_idx), basis, best_val)


@dataclass
class TRContour:
    """A contour computed on transformed data together with its retransformed image."""

    contour: Contour           # in original coordinates
    transformed: Contour       # in transformed coordinates
    center: np.ndarray         # median of the transformed data
    frame: TRFrame


def tr_contour(data, beta, frame: TRFrame, dirs: DirectionSet | None = None,
               cfg: SolverConfig | None = None, center=None) -> TRContour:
    """TR beta-isoquantile contour.

    ``dirs`` are directions in the transformed space; by default the
    canonical ones transported to the transformed-data median.
    """
    cfg = cfg or SolverConfig()
    Y = frame.transform(_as_points(data))
    if center is None:
        center = frechet_median(Y, cfg).point
    if dirs is None:
        dirs = DirectionSet.default(center)
    inner = isoquantile_contour(Y, beta, dirs, cfg, start=center)
    outer = Contour(inner.beta, inner.xis, frame.retransform(inner.points), inner.results)
    return TRContour(outer, inner, center, frame)


def polar(center, x):
    """Angle and distance of ``x`` about ``center`` in the tangent basis there."""
    c = geo.to_coords(geo.tangent_basis(center), geo.log_map(center, x))
    return np.arctan2(c[..., 1], c[..., 0]), np.linalg.norm(c, axis=-1)


def dilate(center, x, factor):
    """``exp_c(factor * log_c(x))``."""
    return geo.exp_map(center, factor * geo.log_map(center, x))


def outside(center, boundary, x):
    """True where ``x`` lies beyond the star-shaped ``boundary`` about ``center``.

    The boundary radius at a point's angle is linearly interpolated (in
    angle, periodically) between boundary vertices.
    """
    th_b, r_b = polar(center, boundary)
    th_x, r_x = polar(center, x)
    order = np.argsort(th_b)
    r_at = np.interp(th_x, th_b[order], r_b[order], period=2 * np.pi)
    return r_x > r_at


@dataclass
class OutlierResult:
    labels: np.ndarray                # True = outlier
    boundary: np.ndarray              # retransformed boundary polyline
    transformed_boundary: np.ndarray
    center: np.ndarray                # transformed-data median
    contour: TRContour

    @property
    def outliers(self):
        return [int(i) for i in np.flatnonzero(self.labels)]


def _require(contour: Contour):
    if not contour.converged:
        raise ConvergenceError(f"beta={contour.beta}: directions {contour.failed} did not converge",
                               contour.failed)


def outliers_extreme(data, frame: TRFrame, dirs: DirectionSet | None = None, beta0=0.98,
                     cfg: SolverConfig | None = None) -> OutlierResult:
    """Flag points outside the TR ``beta0``-isoquantile contour."""
    X = _as_points(data)
    trc = tr_contour(X, beta0, frame, dirs, cfg)
    _require(trc.transformed)
    Y = frame.transform(X)
    labels = outside(trc.center, trc.transformed.points, Y)
    return OutlierResult(labels, trc.contour.points, trc.transformed.points, trc.center, trc)


def outliers_fence(data, frame: TRFrame, dirs: DirectionSet | None = None,
                   cfg: SolverConfig | None = None, factor=4.0) -> OutlierResult:
    """Flag points outside the fence: the transformed 0.5-contour dilated 4x about the median."""
    X = _as_points(data)
    trc = tr_contour(X, 0.5, frame, dirs, cfg)
    _require(trc.transformed)
    fence = dilate(trc.center, trc.transformed.points, factor)
    Y = frame.transform(X)
    labels = outside(trc.center, fence, Y)
    return OutlierResult(labels, frame.retransform(fence), fence, trc.center, trc)


@dataclass
class MeasuresReport:
    beta: float
    beta_lo: float
    beta_hi: float
    delta1: float
    delta2: float
    gamma1: float
    gamma2_norm: float
    kappa1: float
    kappa2: float
    alpha: float
    gamma2_vec: np.ndarray
    median: np.ndarray
    degenerate: bool = False

    def to_dict(self):
        return {
            "beta": self.beta, "beta_lo": self.beta_lo, "beta_hi": self.beta_hi,
            "delta1": self.delta1, "delta2": self.delta2,
            "gamma1": self.gamma1, "gamma2_norm": self.gamma2_norm,
            "kappa1": self.kappa1, "kappa2": self.kappa2, "alpha": self.alpha,
            "gamma2_vec": [float(v) for v in self.gamma2_vec],
            "median": [float(v) for v in self.median],
            "degenerate": self.degenerate,
        }


def _spread(m1, contour: Contour, scale):
    L = geo.log_map(m1, contour.points)
    K = len(L)
    opp = np.roll(L, K // 2, axis=0)
    diff = geo.minkowski_norm(L - opp) * scale
    summ = geo.minkowski_norm(L + opp) * scale
    return L, diff, summ


def _ratio(a, b):
    return a / b if b > 0 else 0.0


def measures_from_contours(median, contours, beta=0.5, beta_lo=0.2, beta_hi=0.8,
                           kappa=-1.0) -> MeasuresReport:
    """The seven measures from precomputed contours keyed by beta.

    Measures whose contours are absent come back as NaN, so callers that
    only need some of them can skip the other solves.
    """
    m1 = np.asarray(median, dtype=float)
    scale = 1.0 / np.sqrt(-kappa)
    nan = float("nan")
    d1 = d2 = g1 = g2 = a = nan
    k1 = k2 = nan
    g2vec = np.full_like(m1, nan)
    degenerate = False
    if beta in contours:
        L, diff, summ = _spread(m1, contours[beta], scale)
        d1, d2 = float(diff.max()), float(diff.mean())
        g1 = _ratio(float(summ.max()), d1)
        g2vec = L.mean(axis=0) * scale / d2 if d2 > 0 else np.zeros_like(m1)
        g2 = float(geo.minkowski_norm(g2vec))
        r = geo.dist(m1, contours[beta].points)
        degenerate = not r.min() > 0
        if degenerate:
            log.warning("quantiles coincide with the median; reporting alpha = 0")
            a = 0.0
        else:
            a = float(np.log(r.max() / r.min()))
    if beta_lo in contours and beta_hi in contours:
        _, diff_lo, _ = _spread(m1, contours[beta_lo], scale)
        _, diff_hi, _ = _spread(m1, contours[beta_hi], scale)
        k1 = _ratio(float(diff_hi.max()), float(diff_lo.max()))
        k2 = _ratio(float(diff_hi.mean()), float(diff_lo.mean()))
    return MeasuresReport(float(beta), float(beta_lo), float(beta_hi), d1, d2, g1, g2, k1, k2, a,
                          g2vec, m1, degenerate)


def measures(data, beta=0.5, beta_hi=0.8, dirs: DirectionSet | None = None,
             cfg: SolverConfig | None = None, beta_lo=0.2, kappa=-1.0, median=None,
             betas=None) -> MeasuresReport:
    """Dispersion, skewness, kurtosis and spherical-asymmetry measures.

    Dispersion (delta), skewness (gamma) and asymmetry (alpha) use
    ``beta``; kurtosis is ``delta(beta_hi) / delta(beta_lo)``. Sups over
    the tangent sphere become maxima over ``dirs`` and normalized integrals
    become means. Directions default to the canonical ones transported to
    the median. ``betas`` restricts which contours are solved (see
    ``measures_from_contours``).
    """
    cfg = cfg or SolverConfig()
    if not 0 < beta_lo < beta_hi < 1 or not 0 < beta < 1:
        raise ValueError("need 0 < beta_lo < beta_hi < 1 and 0 < beta < 1")
    X = _as_points(data)
    if median is None:
        med = frechet_median(X, cfg)
        if not med.converged:
            raise ConvergenceError("median did not converge")
        median = med.point
    m1 = np.asarray(median, dtype=float)
    if dirs is None:
        dirs = DirectionSet.default(m1, 24)
    if betas is None:
        betas = [beta, beta_lo, beta_hi]
    contours = {}
    for b in dict.fromkeys(betas):
        c = isoquantile_contour(X, b, dirs, cfg, start=m1)
        _require(c)
        contours[b] = c
    return measures_from_contours(m1, contours, beta, beta_lo, beta_hi, kappa)


def tangent_rank(data, p):
    """Mean unit vector from ``p`` toward the data, ignoring points at ``p``."""
    X = _as_points(data)
    p = np.asarray(p, dtype=float)
    L = geo.log_map(p, X)
    d = geo.dist(p, X)
    keep = d > 1e-10
    if not keep.any():
        raise ValueError("all data points coincide with p")
    return np.sum(L[keep] / d[keep, None], axis=0) / keep.sum()
