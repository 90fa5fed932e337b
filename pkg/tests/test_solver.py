import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperquantile import geometry as geo
from hyperquantile.geometry import BoundaryDir
from hyperquantile.solver import (CoincidenceError, Dataset, QuantileSpec, SolverConfig,
                                  empirical_loss, frechet_mean, frechet_median, grad_rho, loss_rho,
                                  mean_psi, multistart_quantile, psi, sample_quantile, sample_quantiles)

from conftest import angles, point_from_polar, points, random_points
from oracles import direct_loss, fd_gradient_coords, grid_argmin


def test_spec_validation():
    xi = BoundaryDir.from_angle(0.0)
    with pytest.raises(ValueError):
        QuantileSpec(1.0, xi)
    with pytest.raises(ValueError):
        QuantileSpec(-0.1, xi)
    with pytest.raises(ValueError):
        QuantileSpec(0.5, xi, kappa=0.0)
    with pytest.raises(ValueError):
        SolverConfig(step_shrink=1.0)
    with pytest.raises(ValueError):
        SolverConfig(init="centre")


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[1.0, 0.5, 0.0]]))
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        Dataset(np.array([geo.origin()]), labels=["a", "b"])


@given(points(3.0), points(3.0), angles, st.sampled_from([0.0, 0.3, 0.7, 0.95]),
       st.sampled_from([-1.0, -0.25, -3.0]))
def test_gradient_matches_finite_differences(x, p, theta, beta, kappa):
    if geo.dist(x, p) < 1e-2:
        return
    spec = QuantileSpec(beta, BoundaryDir.from_angle(theta), kappa)
    B, fd = fd_gradient_coords(lambda q: loss_rho(x, q, spec), p)
    g = grad_rho(x, p, spec)
    # d/dt f(exp(t e)) = <grad, e>_kappa
    analytic = np.array([geo.tangent_inner(g, e, kappa) for e in B])
    np.testing.assert_allclose(analytic, fd, atol=1e-6)


def test_loss_closed_form():
    p = geo.origin()
    x = point_from_polar(2.0, 0.0)
    xi = BoundaryDir.from_angle(np.pi / 2)
    # log_p(x) is orthogonal to xi_p, so rho = d
    assert loss_rho(x, p, QuantileSpec(0.8, xi)) == pytest.approx(2.0)
    # along xi: rho = d (1 + beta)
    assert loss_rho(x, p, QuantileSpec(0.5, BoundaryDir.from_angle(0.0))) == pytest.approx(3.0)
    assert loss_rho(x, p, QuantileSpec(0.5, BoundaryDir.from_angle(0.0), -4.0)) == pytest.approx(1.5)


def test_coincidence():
    p = point_from_polar(0.4, 1.0)
    xi = BoundaryDir.from_angle(0.3)
    spec = QuantileSpec(0.6, xi)
    with pytest.raises(CoincidenceError):
        grad_rho(p, p, spec)
    np.testing.assert_allclose(psi(p, p, spec), -0.6 * geo.radial_field(xi, p), atol=1e-14)
    assert loss_rho(p, p, spec) == 0.0


def test_single_point_is_its_own_quantile():
    x = point_from_polar(1.1, 0.5)
    for beta in (0.0, 0.4, 0.9):
        r = sample_quantile([x], QuantileSpec(beta, BoundaryDir.from_angle(2.0)))
        assert r.converged
        np.testing.assert_allclose(r.point, x, atol=1e-12)


def test_median_ignores_xi(rng):
    X = random_points(rng, 40)
    a = sample_quantile(X, QuantileSpec(0.0, BoundaryDir.from_angle(0.1))).point
    b = sample_quantile(X, QuantileSpec(0.0, BoundaryDir.from_angle(2.9))).point
    assert geo.dist(a, b) < 1e-7


def test_median_of_symmetric_configuration():
    X = np.array([point_from_polar(1.5, k * np.pi / 3) for k in range(6)])
    r = frechet_median(X)
    assert r.converged
    assert geo.dist(r.point, geo.origin()) < 1e-8


def test_median_of_three_collinear_is_middle():
    X = np.array([point_from_polar(1.0, np.pi), point_from_polar(0.2, 0.0), point_from_polar(2.0, 0.0)])
    r = frechet_median(X)
    assert r.converged
    assert geo.dist(r.point, X[1]) < 1e-8


def test_frechet_mean_of_two_is_midpoint():
    a, b = point_from_polar(1.0, 0.3), point_from_polar(2.5, 2.0)
    mid = geo.exp_map(a, 0.5 * geo.log_map(a, b))
    r = frechet_mean(np.stack([a, b]))
    assert r.converged
    assert geo.dist(r.point, mid) < 1e-8


def test_frechet_mean_stationary(rng):
    X = random_points(rng, 50)
    r = frechet_mean(X)
    assert r.converged
    assert geo.minkowski_norm(geo.log_map(r.point, X).mean(axis=0)) < 1e-8


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.5, 0.9]), angles)
def test_first_order_condition(seed, beta, theta):
    X = random_points(np.random.default_rng(seed), 25)
    spec = QuantileSpec(beta, BoundaryDir.from_angle(theta))
    r = sample_quantile(X, spec)
    assert r.converged
    assert r.grad_norm <= 1e-8
    # no neighbour has a smaller loss
    here = empirical_loss(X, r.point, spec)
    B = geo.tangent_basis(r.point)
    for e in np.concatenate([B, -B]):
        assert empirical_loss(X, geo.exp_map(r.point, 1e-4 * e), spec) >= here - 1e-12


def test_matches_grid_oracle():
    rng = np.random.default_rng(3)
    r = 0.8 * np.sqrt(rng.random(20))
    t = 2 * np.pi * rng.random(20)
    X = geo.from_ball(np.column_stack([r * np.cos(t), r * np.sin(t)]))
    for beta in (0.0, 0.5):
        xi = BoundaryDir.from_angle(1.0)
        s = sample_quantile(X, QuantileSpec(beta, xi))
        assert geo.dist(s.point, grid_argmin(X, beta, xi)) < 2e-3


def test_loss_agrees_with_direct_formula(rng):
    X = random_points(rng, 30)
    xi = BoundaryDir.from_angle(0.7, point_from_polar(0.5, 0.2))
    spec = QuantileSpec(0.4, xi)
    p = point_from_polar(0.9, 2.0)
    assert empirical_loss(X, p, spec) == pytest.approx(direct_loss(p, X, 0.4, xi)[0], abs=1e-12)


def test_curvature_rescales_loss_not_minimizer(rng):
    X = random_points(rng, 30)
    xi = BoundaryDir.from_angle(1.3)
    a = sample_quantile(X, QuantileSpec(0.6, xi, -1.0))
    b = sample_quantile(X, QuantileSpec(0.6, xi, -0.25))
    assert geo.dist(a.point, b.point) < 1e-7
    assert b.loss == pytest.approx(2.0 * a.loss, rel=1e-10)


def test_equivariance_under_isometry(rng):
    X = random_points(rng, 40)
    xi = BoundaryDir.from_angle(0.2)
    G = geo.lorentz_isometry(point_from_polar(0.4, 0.0), point_from_polar(1.5, 2.5))
    q = sample_quantile(X, QuantileSpec(0.7, xi)).point
    qG = sample_quantile(geo.apply_isometry(G, X), QuantileSpec(0.7, xi.transformed(G))).point
    assert geo.dist(geo.apply_isometry(G, q), qG) < 1e-7


def test_batch_matches_single(rng):
    X = random_points(rng, 30)
    xis = [BoundaryDir.from_angle(t) for t in (0.0, 1.0, 4.0)]
    batch = sample_quantiles(X, 0.5, xis)
    for xi, r in zip(xis, batch):
        assert geo.dist(r.point, sample_quantile(X, QuantileSpec(0.5, xi)).point) < 1e-7


def test_high_beta_converges(rng):
    X = random_points(rng, 200)
    xis = [BoundaryDir.from_angle(2 * np.pi * k / 8) for k in range(8)]
    res = sample_quantiles(X, 0.98, xis)
    assert all(r.converged for r in res)


def test_nonconvergence_is_reported(rng):
    X = random_points(rng, 50)
    r = sample_quantile(X, QuantileSpec(0.9, BoundaryDir.from_angle(0.0)),
                        SolverConfig(max_iter=1, grad_tol=1e-14))
    assert not r.converged
    assert r.iterations <= 1


def test_history_is_monotone(rng):
    X = random_points(rng, 50)
    r = sample_quantile(X, QuantileSpec(0.5, BoundaryDir.from_angle(0.0)), record=True)
    h = np.array(r.history)
    assert len(h) == r.iterations + 1
    assert np.all(np.diff(h) <= 1e-12 * max(1.0, h[0]))


def test_mean_psi_vanishes_at_solution(rng):
    X = random_points(rng, 50)
    spec = QuantileSpec(0.3, BoundaryDir.from_angle(5.0))
    r = sample_quantile(X, spec)
    assert geo.minkowski_norm(mean_psi(X, r.point, spec)) < 1e-8


def test_multistart_not_worse(rng):
    X = random_points(rng, 40)
    spec = QuantileSpec(0.8, BoundaryDir.from_angle(1.0))
    one = sample_quantile(X, spec)
    best = multistart_quantile(X, spec, restarts=5, seed=1)
    assert best.converged
    assert best.loss <= one.loss + 1e-12


def test_explicit_and_data_init(rng):
    X = random_points(rng, 30)
    spec = QuantileSpec(0.5, BoundaryDir.from_angle(0.5))
    ref = sample_quantile(X, spec).point
    for cfg in (SolverConfig(init="data"), SolverConfig(init=X[3])):
        assert geo.dist(sample_quantile(X, spec, cfg).point, ref) < 1e-7


def test_atoms_at_solution():
    # 3 copies at the origin dominate: the median is the atom
    X = np.array([geo.origin()] * 3 + [point_from_polar(1.0, 0.0), point_from_polar(1.0, 2.0)])
    r = frechet_median(X)
    assert r.converged
    assert geo.dist(r.point, geo.origin()) < 1e-9


def test_higher_dimension():
    rng = np.random.default_rng(5)
    V = rng.normal(size=(40, 3))
    X = geo.exp_map(geo.origin(3), np.column_stack([np.zeros(40), V]))
    G = geo.lorentz_isometry(geo.origin(3), geo.exp_map(geo.origin(3), np.array([0, 0.5, -0.2, 0.3])))
    e = np.array([0.0, 0.0, 0.0, 1.0])
    xi = BoundaryDir(geo.origin(3), e)
    q = sample_quantile(X, QuantileSpec(0.5, xi))
    assert q.converged
    qG = sample_quantile(geo.apply_isometry(G, X), QuantileSpec(0.5, xi.transformed(G)))
    assert geo.dist(geo.apply_isometry(G, q.point), qG.point) < 1e-7
