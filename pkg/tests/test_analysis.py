import warnings
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperquantile import geometry as geo
from hyperquantile.analysis import (DirectionSet, TRFrame, dilate, isoquantile_contour,
                                    isotropy_criterion, measures, measures_from_contours,
                                    outliers_extreme, outliers_fence, outside, polar,
                                    select_tr_frame, tangent_rank, tr_contour)
from hyperquantile.datagen import GenSpec, generate
from hyperquantile.solver import ConvergenceError, SolverConfig, frechet_median

from conftest import point_from_polar, random_points


def rotate(X, t):
    R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    return geo.apply_isometry(geo.rotation_isometry(R), X)


def test_direction_set_default():
    d = DirectionSet.default(None, 24)
    assert len(d) == 24
    np.testing.assert_allclose(d.dirs[0], [0, np.cos(2 * np.pi / 24), np.sin(2 * np.pi / 24)], atol=1e-15)
    np.testing.assert_allclose(d.dirs[23], [0, 1, 0], atol=1e-15)
    np.testing.assert_array_equal(d.dirs[12:], -d.dirs[:12])


def test_direction_set_transported():
    c = point_from_polar(1.2, 0.7)
    d = DirectionSet.default(c, 8)
    o = geo.origin()
    ref = geo.parallel_transport(o, c, DirectionSet.default(None, 8).dirs)
    np.testing.assert_allclose(d.dirs, ref, atol=1e-12)


def test_direction_set_validation():
    with pytest.raises(ValueError):
        DirectionSet.default(None, 7)
    d = DirectionSet.default(None, 4)
    with pytest.raises(ValueError):
        DirectionSet(d.center, d.dirs[[0, 1, 3, 2]])
    with pytest.raises(ValueError):
        DirectionSet(d.center, 2 * d.dirs)


def test_contour_rotates_with_data(rng):
    X = random_points(rng, 60, 2.0)
    K = 12
    dirs = DirectionSet.default(None, K)
    c = isoquantile_contour(X, 0.5, dirs, start=geo.origin())
    # rotating the data by one direction step shifts the contour by one index
    cr = isoquantile_contour(rotate(X, 2 * np.pi / K), 0.5, dirs, start=geo.origin())
    assert c.converged and cr.converged
    np.testing.assert_allclose(np.roll(rotate(c.points, 2 * np.pi / K), 1, axis=0), cr.points, atol=1e-7)


def test_contour_reports_failures(rng):
    X = random_points(rng, 60)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = isoquantile_contour(X, 0.9, DirectionSet.default(None, 4),
                                SolverConfig(max_iter=1, grad_tol=1e-15))
    assert not c.converged
    assert c.failed == [0, 1, 2, 3]


def test_isotropy_criterion():
    assert isotropy_criterion(np.eye(3)) == pytest.approx(1.0)
    assert isotropy_criterion(np.diag([4.0, 1.0])) == pytest.approx(2.5 / 2.0)
    C = np.random.default_rng(0).normal(size=(50, 2, 2))
    C = C @ np.transpose(C, (0, 2, 1)) + 1e-3 * np.eye(2)
    assert np.all(isotropy_criterion(C) >= 1.0 - 1e-12)


def test_tr_frame_matches_brute_force(rng):
    X = random_points(rng, 15, 1.5)
    f = select_tr_frame(X)
    L = geo.to_coords(f.basis, geo.log_map(f.base, X))
    S = np.cov(L, rowvar=False)
    best, arg = np.inf, None
    for i, j in combinations(range(len(X)), 2):
        A = L[[i, j]].T
        if abs(np.linalg.det(A)) <= 1e-12:
            continue
        Ai = np.linalg.inv(A)
        val = isotropy_criterion(Ai @ S @ Ai.T)
        if val < best:
            best, arg = val, (i, j)
    assert f.indices == arg
    assert f.criterion == pytest.approx(best, rel=1e-12)


def test_tr_roundtrip(rng):
    X = random_points(rng, 30)
    f = select_tr_frame(X)
    np.testing.assert_allclose(f.retransform(f.transform(X)), X, atol=1e-9)


def test_identity_frame_is_exact(rng):
    X = random_points(rng, 30)
    f = TRFrame.identity(frechet_median(X).point)
    assert f.is_identity
    np.testing.assert_array_equal(f.transform(X), X)
    c = tr_contour(X, 0.4, f, DirectionSet.default(f.base, 8))
    # identity TR is the plain contour
    plain = isoquantile_contour(X, 0.4, DirectionSet.default(f.base, 8), start=c.center)
    np.testing.assert_array_equal(c.contour.points, plain.points)


def test_polar_and_outside():
    c = geo.origin()
    ring = np.array([point_from_polar(1.0, t) for t in np.linspace(0, 2 * np.pi, 24, endpoint=False)])
    th, r = polar(c, point_from_polar(0.5, 1.0))
    assert (th, r) == pytest.approx((1.0, 0.5))
    pts = np.array([point_from_polar(0.9, 0.3), point_from_polar(1.1, 4.0), point_from_polar(0.99, 6.2)])
    assert outside(c, ring, pts).tolist() == [False, True, False]


def test_dilate_scales_distances():
    c = point_from_polar(0.5, 1.0)
    x = point_from_polar(1.0, 2.0)
    assert geo.dist(c, dilate(c, x, 4.0)) == pytest.approx(4 * geo.dist(c, x))


def _with_far_point(seed=0):
    d = generate(GenSpec("dispersion", 2, 150, seed))
    far = point_from_polar(6.0, 0.7)
    return np.vstack([d.points, far])


def test_far_point_flagged_by_both_methods():
    X = _with_far_point()
    f = select_tr_frame(X)
    ext = outliers_extreme(X, f)
    fen = outliers_fence(X, f)
    assert len(X) - 1 in ext.outliers
    assert len(X) - 1 in fen.outliers


def test_fence_is_four_times_contour(rng):
    X = random_points(rng, 80, 1.5)
    f = select_tr_frame(X)
    res = outliers_fence(X, f)
    r_contour = geo.dist(res.center, res.contour.transformed.points)
    r_fence = geo.dist(res.center, res.transformed_boundary)
    np.testing.assert_allclose(r_fence, 4 * r_contour, rtol=1e-9)


def test_outliers_need_converged_contour(rng):
    X = random_points(rng, 40)
    f = TRFrame.identity(frechet_median(X).point)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ConvergenceError):
            outliers_fence(X, f, cfg=SolverConfig(max_iter=1, grad_tol=1e-15))


def _explicit_measures(m1, lo, mid, hi):
    # loop-level restatement of the seven measures
    def spread(P):
        L = [geo.log_map(m1, q) for q in P]
        K = len(L)
        diff = [geo.minkowski_norm(L[k] - L[(k + K // 2) % K]) for k in range(K)]
        summ = [geo.minkowski_norm(L[k] + L[(k + K // 2) % K]) for k in range(K)]
        return L, diff, summ
    L, diff, summ = spread(mid)
    d1, d2 = max(diff), sum(diff) / len(diff)
    g1 = max(summ) / d1
    g2 = geo.minkowski_norm(sum(L) / len(L) / d2)
    k1 = max(spread(hi)[1]) / max(spread(lo)[1])
    k2 = np.mean(spread(hi)[1]) / np.mean(spread(lo)[1])
    r = [geo.dist(m1, q) for q in mid]
    return [d1, d2, g1, g2, k1, k2, np.log(max(r) / min(r))]


def test_measures_match_explicit_formulas():
    X = generate(GenSpec("skewness", 1, 200, 4)).points
    rep = measures(X, 0.5, 0.8, beta_lo=0.2)
    dirs = DirectionSet.default(rep.median, 24)
    cs = {b: isoquantile_contour(X, b, dirs, start=rep.median).points for b in (0.2, 0.5, 0.8)}
    want = _explicit_measures(rep.median, cs[0.2], cs[0.5], cs[0.8])
    got = [rep.delta1, rep.delta2, rep.gamma1, rep.gamma2_norm, rep.kappa1, rep.kappa2, rep.alpha]
    np.testing.assert_allclose(got, want, rtol=1e-9)


def test_point_reflection_symmetry_zeroes_skewness(rng):
    Y = random_points(rng, 40, 1.5)
    X = np.vstack([Y, rotate(Y, np.pi)])
    rep = measures(X)
    assert rep.gamma1 < 1e-6
    assert rep.gamma2_norm < 1e-6
    assert rep.delta1 > 0


def test_rotational_symmetry_zeroes_alpha(rng):
    Y = random_points(rng, 10, 1.5)
    X = np.vstack([rotate(Y, 2 * np.pi * j / 24) for j in range(24)])
    rep = measures(X, median=geo.origin())
    assert rep.alpha < 1e-6


def test_point_mass_gives_zero_report():
    X = np.repeat(point_from_polar(0.8, 1.0)[None], 10, axis=0)
    rep = measures(X)
    assert rep.degenerate
    for v in (rep.delta1, rep.delta2, rep.gamma1, rep.gamma2_norm, rep.kappa1, rep.kappa2, rep.alpha):
        assert v == 0.0


def test_measures_invariant_under_isometry():
    X = generate(GenSpec("spherical", 0, 150, 3)).points
    G = geo.lorentz_isometry(geo.origin(), point_from_polar(1.3, 2.0))
    dirs = DirectionSet.default(None, 24)
    a = measures(X, dirs=dirs, median=geo.origin())
    b = measures(geo.apply_isometry(G, X), dirs=dirs.mapped(G), median=geo.apply_isometry(G, geo.origin()))
    np.testing.assert_allclose([a.delta1, a.gamma1, a.kappa1, a.alpha],
                               [b.delta1, b.gamma1, b.kappa1, b.alpha], rtol=1e-6)


def test_measures_curvature_scaling():
    X = generate(GenSpec("dispersion", 1, 150, 3)).points
    a = measures(X)
    b = measures(X, kappa=-4.0)
    assert b.delta1 == pytest.approx(a.delta1 / 2, rel=1e-9)
    assert b.gamma1 == pytest.approx(a.gamma1, rel=1e-9)
    assert b.kappa1 == pytest.approx(a.kappa1, rel=1e-9)


def test_partial_measures_are_nan():
    X = generate(GenSpec("dispersion", 1, 100, 3)).points
    dirs = DirectionSet.default(None, 8)
    c = {0.5: isoquantile_contour(X, 0.5, dirs, start=geo.origin())}
    rep = measures_from_contours(geo.origin(), c)
    assert np.isfinite(rep.delta1) and np.isnan(rep.kappa1)


def test_measures_validation():
    with pytest.raises(ValueError):
        measures(random_points(np.random.default_rng(0), 10), beta_lo=0.9, beta_hi=0.8)


def test_tangent_rank_vanishes_at_median(rng):
    X = random_points(rng, 50)
    m = frechet_median(X).point
    assert geo.minkowski_norm(tangent_rank(X, m)) < 1e-8
    far = point_from_polar(6.0, 0.0)
    assert geo.minkowski_norm(tangent_rank(X, far)) > 0.9


@settings(max_examples=10)
@given(st.floats(0.1, 6.0))
def test_rotation_equivariance_of_directions(t):
    c = point_from_polar(0.9, 0.4)
    d = DirectionSet.default(c, 6)
    G = geo.rotation_isometry(np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]))
    m = d.mapped(G)
    np.testing.assert_allclose(m.center, G @ c, atol=1e-12)
    np.testing.assert_allclose(m.dirs, d.dirs @ G.T, atol=1e-10)
