"""Geometric (beta, xi)-quantiles on hyperbolic space by Riemannian descent.

The loss for a data point ``x`` and candidate ``p`` is

    rho(x, p) = d(p, x) + beta * <xi_p, log_p(x)>

with ``xi_p`` the radial field of the boundary point ``xi``. The sample
quantile minimizes the mean of ``rho`` over the data; ``beta = 0`` gives the
geometric median for every ``xi``.

The descent kernel is batched: ``K`` independent problems sharing one data
set (typically one per direction of a contour) are advanced together.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import geometry as geo
from .geometry import BoundaryDir

log = logging.getLogger(__name__)

# Distances below this count as coincidence with a data point.
COINCIDENCE_TOL = 1e-10
_EPS = np.finfo(float).eps
_MAX_HALVINGS = 60
_MAX_INIT_CANDIDATES = 2000
_BB_CAP = 1e4
_NOISE = 64 * _EPS
# Trust region for one step. Trial points are evaluated in the frame of the
# current iterate, and beyond a few units the log map loses digits to
# cancellation; longer moves take several iterations.
_MAX_STEP = 4.0


class ConvergenceError(RuntimeError):
    """A solve (or one of a batch of solves) failed to meet its tolerance."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = list(failed)


class CoincidenceError(ValueError):
    """The loss gradient was requested at a data point, where it does not exist."""


@dataclass
class Dataset:
    points: np.ndarray
    labels: list[str] | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] == 0:
            raise ValueError("dataset is empty")
        geo.check_point(pts, tol=1e-9 * max(1.0, float(np.max(pts[:, 0])) ** 2))
        self.points = pts
        if self.labels is not None and len(self.labels) != len(pts):
            raise ValueError("labels and points differ in length")

    def __len__(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1] - 1

    def mapped(self, G):
        return Dataset(geo.apply_isometry(G, self.points), self.labels)


def _as_points(data):
    if isinstance(data, Dataset):
        return data.points
    return np.atleast_2d(np.asarray(data, dtype=float))


@dataclass(frozen=True)
class QuantileSpec:
    beta: float
    xi: BoundaryDir
    kappa: float = -1.0

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if not self.kappa < 0:
            raise ValueError(f"curvature must be negative, got {self.kappa}")


@dataclass
class SolverConfig:
    """Descent hyperparameters.

    The first step is ``step`` times the Weiszfeld length ``1 / mean(1/d)``;
    later trial steps use the Barzilai-Borwein length of the previous
    accepted step. A trial step is shrunk by ``step_shrink`` until the loss
    drops.
    ``init`` is ``"median"``, ``"data"`` or an explicit hyperboloid point.
    """

    step: float = 0.5
    max_iter: int = 10_000
    grad_tol: float = 1e-8
    step_shrink: float = 0.5
    init: Union[str, np.ndarray] = "median"

    def __post_init__(self):
        if self.step <= 0 or self.max_iter < 1 or self.grad_tol <= 0:
            raise ValueError("step, max_iter and grad_tol must be positive")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")
        if isinstance(self.init, str) and self.init not in ("median", "data"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class SolveResult:
    point: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool
    loss: float
    history: list[float] = field(default_factory=list, repr=False)


def _coth_times(z):
    # z * coth(z), equal to 1 at z = 0
    small = z < 1e-6
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z * z / 3.0, safe / np.tanh(safe))


def _null(anchors, dirs):
    """Boundary points as future null vectors scaled to ``z[..., 0] = 1``."""
    z = np.asarray(anchors, dtype=float) + np.asarray(dirs, dtype=float)
    return z / z[..., :1]


def _terms(X, P, beta, Z):
    """Per-point losses and gradient contributions for ``K`` candidates.

    ``X`` is (N, m) or per-candidate (K, N, m); ``P`` (K, m); ``Z`` (K, m)
    null vectors naming the boundary points. Works on the curvature -1
    hyperboloid. Returns ``rho`` (K, N), ``psi`` (K, N, m), distances
    (K, N) and the coincidence mask. ``psi`` is the loss gradient off
    coincidence and ``-beta xi_p`` on it.
    """
    Xk = X if X.ndim == 3 else X[None, :, :]
    D = Xk - P[:, None, :]
    W = D + geo.minkowski_inner(P[:, None, :], D)[..., None] * P[:, None, :]
    nw = geo.minkowski_norm(W)
    d = geo.dist(P[:, None, :], Xk)
    hit = d < COINCIDENCE_TOL
    U = W / np.where(hit, 1.0, nw)[..., None]
    U[hit] = 0.0
    xw = Z + geo.minkowski_inner(P, Z)[:, None] * P
    xip = xw / geo.minkowski_norm(xw)[:, None]
    c = geo.minkowski_inner(xip[:, None, :], U)
    rho = d * (1.0 + beta * c)
    rho[hit] = 0.0
    if beta == 0.0:
        psi = -U
    else:
        zc = _coth_times(d)
        a = (zc - d * c)[..., None]
        b = ((1.0 - zc) * c + d)[..., None]
        psi = -U - beta * (a * xip[:, None, :] + b * U)
        psi[hit] = -beta * np.broadcast_to(xip[:, None, :], psi.shape)[hit]
    return rho, psi, d, hit


def _residual(g, mult, N):
    # Stationarity residual from the first-order condition: an atom of
    # mass m/N at the candidate allows |mean psi| up to m/N.
    return np.maximum(geo.minkowski_norm(g) - mult / N, 0.0)


def _spec_null(spec):
    return _null(spec.xi.anchor, spec.xi.dir)[None]


def loss_rho(x, p, spec: QuantileSpec):
    """Quantile loss ``rho(x, p)`` in the units of curvature ``spec.kappa``."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    d = geo.dist(p, x)
    u = geo.log_map(p, x)
    nrm = geo.minkowski_norm(u)
    xip = geo.radial_field(spec.xi, p)
    c = geo.minkowski_inner(xip, u) / np.where(nrm > 0, nrm, 1.0)
    val = d * (1.0 + spec.beta * c)
    return np.where(d > 0, val, 0.0) / np.sqrt(-spec.kappa)


def grad_rho(x, p, spec: QuantileSpec):
    """Riemannian gradient in ``p`` of ``rho(x, p)`` at curvature ``spec.kappa``.

    Returned as a model tangent vector at ``p``; pair it with
    :func:`geometry.tangent_inner` using the same curvature.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(geo.dist(p, x) < COINCIDENCE_TOL):
        raise CoincidenceError("gradient of rho is undefined at x == p; use psi")
    return psi(x, p, spec)


def psi(x, p, spec: QuantileSpec):
    """Gradient of ``rho`` off coincidence, ``-beta xi_p`` at coincidence."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    _, g, _, _ = _terms(np.atleast_2d(x), np.atleast_2d(p), spec.beta, _spec_null(spec))
    g = g[0] * np.sqrt(-spec.kappa)
    return g[0] if x.ndim == 1 else g


def empirical_loss(data, p, spec: QuantileSpec):
    X = _as_points(data)
    rho, _, _, _ = _terms(X, np.atleast_2d(p), spec.beta, _spec_null(spec))
    return float(np.mean(rho[0])) / np.sqrt(-spec.kappa)


def mean_psi(data, p, spec: QuantileSpec):
    X = _as_points(data)
    _, g, _, _ = _terms(X, np.atleast_2d(p), spec.beta, _spec_null(spec))
    return np.mean(g[0], axis=0) * np.sqrt(-spec.kappa)


def _central_start(X):
    """Data point with the smallest summed distance to the data."""
    N = len(X)
    cand = X
    if N > _MAX_INIT_CANDIDATES:
        cand = X[np.linspace(0, N - 1, _MAX_INIT_CANDIDATES).astype(int)]
    totals = np.array([np.sum(geo.dist(c, X)) for c in cand])
    return cand[int(np.argmin(totals))].copy()


def _frames(P):
    """Lorentz translations taking each row of ``P`` to the origin, and back."""
    o = geo.origin(P.shape[1] - 1)
    to0 = np.array([geo.lorentz_isometry(p, o) for p in P])
    back = np.array([geo.lorentz_isometry(o, p) for p in P])
    return to0, back


def _descend(X, beta, Z, P0, cfg: SolverConfig, record=False):
    """Batched backtracking descent for ``K`` problems sharing data ``X``.

    Each iteration runs in the frame where the current iterate is the
    origin, so losses of the iterate and of its trial steps are compared
    without the cancellation that large ambient coordinates cause. A trial
    ``exp_o(-t * mean_psi)`` is accepted when it lowers the empirical loss;
    ``t`` starts at the Barzilai-Borwein length of the previous step (the
    Weiszfeld length ``cfg.step / mean(1/d)`` on the first iteration, and a
    cap of ``_BB_CAP`` times it) and is multiplied by ``cfg.step_shrink``
    until the loss drops. Trials whose loss change is below the round-off
    floor are also accepted if the loss is still decreasing along the step
    at the trial point or the stationarity residual dropped.
    """
    N = len(X)
    P = np.array(P0, dtype=float)
    K, m = P.shape
    o = geo.origin(m - 1)
    Z = np.asarray(Z, dtype=float)
    iters = np.zeros(K, dtype=int)
    loss = np.zeros(K)
    res = np.zeros(K)
    done = np.zeros(K, dtype=bool)
    stalled = np.zeros(K, dtype=bool)
    bb = np.full(K, np.nan)
    history = [[] for _ in range(K)]

    def evaluate(idx):
        to0, back = _frames(P[idx])
        Xf = np.einsum("kij,nj->kni", to0, X)
        Zf = np.einsum("kij,kj->ki", to0, Z[idx])
        Zf /= Zf[:, :1]
        Of = np.repeat(o[None], len(idx), axis=0)
        rho, psi_, d, hit = _terms(Xf, Of, beta, Zf)
        return Xf, Zf, back, rho.mean(axis=1), psi_.mean(axis=1), d, hit

    todo = np.arange(K)
    for it in range(cfg.max_iter + 1):
        if todo.size == 0:
            break
        Xf, Zf, back, l0, g0, d0, hit0 = evaluate(todo)
        loss[todo] = l0
        res[todo] = _residual(g0, hit0.sum(axis=1), N)
        if record:
            for j, k in enumerate(todo):
                history[k].append(float(l0[j]))
        done[todo] = res[todo] <= cfg.grad_tol
        keep = ~done[todo]
        if it == cfg.max_iter or not keep.any():
            break
        todo, Xf, Zf, back, l0, g0, d0, hit0 = (todo[keep], Xf[keep], Zf[keep], back[keep],
                                                 l0[keep], g0[keep], d0[keep], hit0[keep])
        r0 = res[todo]
        inv = np.where(hit0, 0.0, 1.0 / np.where(hit0, 1.0, d0))
        scale = inv.sum(axis=1) / N
        weisz = cfg.step / np.where(scale > 0, scale, 1.0)
        prev = bb[todo]
        alpha = np.where(np.isfinite(prev), np.minimum(prev, _BB_CAP * weisz), weisz)
        gn = geo.minkowski_norm(g0)
        alpha = np.minimum(alpha, _MAX_STEP / np.where(gn > 0, gn, 1.0))
        accepted = np.zeros(todo.size, dtype=bool)
        pending = np.arange(todo.size)
        for _h in range(_MAX_HALVINGS):
            step = -alpha[pending, None] * g0[pending]
            trial = geo.exp_map(o, step)
            t_rho, t_psi, _, t_hit = _terms(Xf[pending], trial, beta, Zf[pending])
            t_loss = t_rho.mean(axis=1)
            t_g = t_psi.mean(axis=1)
            t_res = _residual(t_g, t_hit.sum(axis=1), N)
            # noise floor of the loss: round-off in terms of size ~d
            band = _NOISE * np.mean(d0[pending], axis=1)
            s_all = geo.parallel_transport(o, trial, step)
            slope = geo.minkowski_inner(t_g, s_all)
            flat = (t_loss <= l0[pending] + band) & ((slope < 0) | (t_res < r0[pending]))
            ok = (t_loss < l0[pending]) | flat
            if ok.any():
                loc = pending[ok]
                s = s_all[ok]
                y = t_g[ok] - geo.parallel_transport(o, trial[ok], g0[loc])
                sy = geo.minkowski_inner(s, y)
                ss = geo.minkowski_inner(s, s)
                ks = todo[loc]
                bb[ks] = np.where(sy > 0, ss / np.where(sy > 0, sy, 1.0), np.nan)
                P[ks] = geo.project(np.einsum("kij,kj->ki", back[loc], trial[ok]))
                iters[ks] += 1
                accepted[loc] = True
            pending = pending[~ok]
            if pending.size == 0:
                break
            alpha[pending] *= cfg.step_shrink
        stalled[todo[~accepted]] = True
        todo = todo[accepted]

    out = []
    for k in range(K):
        out.append(SolveResult(P[k].copy(), float(res[k]), int(iters[k]), bool(res[k] <= cfg.grad_tol),
                               float(loss[k]), history[k]))
    return out


def _initial_point(X, cfg: SolverConfig):
    if isinstance(cfg.init, str):
        if cfg.init == "data":
            return _central_start(X)
        return _median_point(X, cfg)
    p = geo.check_point(np.asarray(cfg.init, dtype=float), tol=1e-8)
    return geo.project(p)


def _median_point(X, cfg: SolverConfig):
    o = geo.origin(X.shape[1] - 1)
    e = np.zeros_like(o)
    e[1] = 1.0
    res = _descend(X, 0.0, _null(o, e)[None], _central_start(X)[None], cfg)[0]
    return res.point


def _scale_result(r: SolveResult, kappa):
    r.loss /= np.sqrt(-kappa)
    r.history = [h / np.sqrt(-kappa) for h in r.history]
    return r


def sample_quantiles(data, beta, xis: Sequence[BoundaryDir], cfg: SolverConfig | None = None,
                     kappa=-1.0, start=None):
    """Solve the (beta, xi)-quantile for every ``xi`` in ``xis`` in one batch.

    All problems start from ``start`` (default: per ``cfg.init``). Results
    come back in the order of ``xis``; check ``converged`` on each.
    """
    cfg = cfg or SolverConfig()
    QuantileSpec(beta, xis[0], kappa)
    X = _as_points(data)
    if start is None:
        start = _initial_point(X, cfg)
    Z = np.array([_null(xi.anchor, xi.dir) for xi in xis])
    P0 = np.repeat(np.asarray(start, dtype=float)[None], len(xis), axis=0)
    res = _descend(X, float(beta), Z, P0, cfg)
    return [_scale_result(r, kappa) for r in res]


def sample_quantile(data, spec: QuantileSpec, cfg: SolverConfig | None = None, record=False):
    """Sample (beta, xi)-quantile by Riemannian gradient descent.

    Non-convergence within ``cfg.max_iter`` is reported through
    ``converged=False``, never raised.
    """
    cfg = cfg or SolverConfig()
    X = _as_points(data)
    start = _initial_point(X, cfg)
    r = _descend(X, spec.beta, _spec_null(spec), start[None], cfg, record)[0]
    return _scale_result(r, spec.kappa)


def multistart_quantile(data, spec: QuantileSpec, cfg: SolverConfig | None = None, restarts=1, seed=0):
    """Best-loss result over the default start plus ``restarts - 1`` random data-point starts."""
    cfg = cfg or SolverConfig()
    X = _as_points(data)
    best = sample_quantile(X, spec, cfg)
    rng = np.random.default_rng(seed)
    for i in rng.choice(len(X), size=min(max(restarts - 1, 0), len(X)), replace=False):
        alt = SolverConfig(cfg.step, cfg.max_iter, cfg.grad_tol, cfg.step_shrink, X[i])
        r = sample_quantile(X, spec, alt)
        if (r.converged, -r.loss) > (best.converged, -best.loss):
            best = r
    return best


def frechet_median(data, cfg: SolverConfig | None = None, kappa=-1.0):
    cfg = cfg or SolverConfig()
    X = _as_points(data)
    o = geo.origin(X.shape[1] - 1)
    e = np.zeros_like(o)
    e[1] = 1.0
    start = _central_start(X) if isinstance(cfg.init, str) else _initial_point(X, cfg)
    return sample_quantile(X, QuantileSpec(0.0, BoundaryDir(o, e), kappa),
                           SolverConfig(cfg.step, cfg.max_iter, cfg.grad_tol, cfg.step_shrink, start))


def frechet_mean(data, cfg: SolverConfig | None = None, kappa=-1.0):
    """Minimizer of the mean squared distance (Karcher flow with backtracking).

    The gradient of the mean squared distance is ``-2 mean log_p(X_i)``, so
    ``step = 0.5`` is the classical Karcher step.
    """
    cfg = cfg or SolverConfig()
    X = _as_points(data)
    p = _central_start(X) if isinstance(cfg.init, str) else _initial_point(X, cfg)

    def evaluate(q):
        L = geo.log_map(q, X)
        return float(np.mean(geo.dist(q, X) ** 2)), -2.0 * L.mean(axis=0)

    loss, g = evaluate(p)
    gn = float(geo.minkowski_norm(g))
    it = 0
    while it < cfg.max_iter and gn > cfg.grad_tol:
        alpha = cfg.step
        for _ in range(_MAX_HALVINGS):
            trial = geo.exp_map(p, -alpha * g)
            t_loss, t_g = evaluate(trial)
            t_gn = float(geo.minkowski_norm(t_g))
            if t_loss < loss or (t_loss <= loss + 8 * _EPS * loss and t_gn < gn):
                break
            alpha *= cfg.step_shrink
        else:
            break
        p, loss, g, gn = trial, t_loss, t_g, t_gn
        it += 1
    # squared distances scale by 1/(-kappa); the gradient norm by 1/sqrt(-kappa)
    return SolveResult(p, gn / np.sqrt(-kappa), it, gn <= cfg.grad_tol, loss / -kappa)
