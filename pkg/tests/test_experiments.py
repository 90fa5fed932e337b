import numpy as np
import pytest

from hyperquantile import geometry as geo
from hyperquantile.analysis import DirectionSet, measures
from hyperquantile.datagen import GenSpec, generate
from hyperquantile.experiments import (DESIGNATED, MEASURES, MonteCarloConfig, TableConfig, TableReport,
                                       montecarlo, parse_generator, real_data_pipeline, seed_table)


def test_parse_generator():
    assert parse_generator("kurtosis:3") == ("kurtosis", 3)
    for bad in ("kurtosis", "kurtosis:7", "other:1", "a:b:c"):
        with pytest.raises(ValueError):
            parse_generator(bad)


def test_seed_table_matches_full_measures():
    tc = TableConfig(n_points=80, directions=8)
    table = seed_table(4, tc)
    assert table.shape == (4, 7)
    for j, m in enumerate(MEASURES):
        family = DESIGNATED[m]
        X = generate(GenSpec(family, 2, 80, 4)).points
        rep = measures(X, dirs=DirectionSet.default(None, 8), median=geo.origin())
        assert table[2, j] == pytest.approx(rep.to_dict()[m], rel=1e-9)


def test_table_report_statistics():
    per = np.ones((3, 4, 7))
    per[:, :, 0] = [3.0, 2.0, 1.0, 0.5]      # decreasing in every seed
    per[:, :, 1] = [3.0, 2.0, 1.0, 0.5]
    per[1, :, 1] = [1.0, 2.0, 1.0, 0.5]      # one seed breaks monotonicity
    ref = np.ones((4, 7))
    rep = TableReport(TableConfig(), [1, 2, 3], per, ref)
    counts = rep.monotone_counts()
    assert counts[0] == 3
    assert counts[1] == 2
    assert counts[2] == 0                    # constant in nu
    np.testing.assert_allclose(rep.relative_error()[:, 2], 0.0)
    d = rep.to_dict()
    assert d["measures"] == list(MEASURES) and len(d["mean"]) == 4


def test_montecarlo_small():
    rep = montecarlo(MonteCarloConfig(sizes=(30, 120), reps=6, reference_factor=4, seed=1))
    assert rep.failures == 0
    assert len(rep.median_error) == 2 and len(rep.scaled_sd) == 2
    assert rep.errors.shape == (2, 6)
    same = montecarlo(MonteCarloConfig(sizes=(30, 120), reps=6, reference_factor=4, seed=1))
    np.testing.assert_array_equal(rep.errors, same.errors)


def test_real_pipeline_on_synthetic_stand_in():
    X = generate(GenSpec("dispersion", 1, 120, 3)).points
    out = real_data_pipeline(X, directions=8)
    assert set(out["contours"]) == {0.2, 0.4, 0.6, 0.8}
    # nested contours: mean radius about the TR median grows with beta
    radii = [np.mean(geo.dist(out["tr_median"], c.contour.points)) for c in out["contours"].values()]
    assert all(b > a for a, b in zip(radii, radii[1:]))
    assert np.isfinite(out["moderate"].kappa1) and np.isfinite(out["extreme"].alpha)
