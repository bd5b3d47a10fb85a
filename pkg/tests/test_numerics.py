import math

import numpy as np
import pytest
from scipy import integrate, stats

from netmisfit.errors import InvalidArgument, NonFiniteEvaluation
from netmisfit.numerics import (
    SingularityReport,
    chi2_cdf,
    chi2_quantile,
    chi2_sf,
    finite_diff_gradient,
    guarded_inverse,
    pivot_condition,
)


@pytest.mark.parametrize("df", [1, 2, 3, 6, 10])
def test_cdf_at_zero(df):
    assert chi2_cdf(0.0, df) == 0.0
    assert chi2_sf(0.0, df) == 1.0


@pytest.mark.parametrize("x,df", [(3.8415, 1), (12.5916, 6)])
def test_cdf_matches_quadrature(x, df):
    oracle, _ = integrate.quad(lambda t: stats.chi2.pdf(t, df), 0.0, x)
    assert chi2_cdf(x, df) == pytest.approx(0.95, abs=1e-3)
    assert chi2_cdf(x, df) == pytest.approx(oracle, abs=1e-8)


@pytest.mark.parametrize("df,expected", [(1, 3.8415), (6, 12.5916)])
def test_quantile(df, expected):
    assert chi2_quantile(0.95, df) == pytest.approx(expected, abs=1e-3)


@pytest.mark.parametrize("df", [1, 4, 6])
@pytest.mark.parametrize("p", [0.01, 0.5, 0.95, 0.999])
def test_quantile_inverts_cdf(p, df):
    assert chi2_cdf(chi2_quantile(p, df), df) == pytest.approx(p, abs=1e-9)


def test_sf_is_complement_and_handles_infinity():
    assert chi2_sf(5.0, 3) == pytest.approx(1.0 - chi2_cdf(5.0, 3), abs=1e-12)
    assert chi2_sf(math.inf, 1) == 0.0


def test_chi2_rejects_bad_arguments():
    with pytest.raises(InvalidArgument):
        chi2_cdf(-1.0, 1)
    with pytest.raises(InvalidArgument):
        chi2_cdf(1.0, 0)
    with pytest.raises(InvalidArgument):
        chi2_cdf(1.0, 1.5)
    with pytest.raises(InvalidArgument):
        chi2_quantile(1.0, 1)


def test_guarded_inverse_identity():
    inv = guarded_inverse(np.eye(6))
    assert np.array_equal(inv, np.eye(6))


def test_guarded_inverse_reports_singular_coordinate():
    report = guarded_inverse(np.diag([1.0, 1, 1, 1, 1, 0]))
    assert isinstance(report, SingularityReport)
    assert report.near_null == [6]
    assert report.condition == math.inf


def test_guarded_inverse_residual(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 7))
        x = rng.standard_normal((d, d))
        m = x @ x.T + np.eye(d)
        inv = guarded_inverse(m)
        assert not isinstance(inv, SingularityReport)
        assert np.max(np.abs(m @ inv - np.eye(d))) <= 1e-9


def test_guarded_inverse_respects_limit():
    m = np.diag([1.0, 1e-9])
    assert isinstance(guarded_inverse(m, cond_limit=1e6), SingularityReport)
    assert not isinstance(guarded_inverse(m), SingularityReport)
    assert pivot_condition(m) == pytest.approx(1e9)


def test_guarded_inverse_rejects_bad_shapes():
    with pytest.raises(InvalidArgument):
        guarded_inverse(np.ones((2, 3)))
    with pytest.raises(InvalidArgument):
        guarded_inverse(np.eye(9))
    with pytest.raises(InvalidArgument):
        guarded_inverse([[np.nan]])


def test_finite_diff_quadratic():
    grad = finite_diff_gradient(lambda x: x[0] ** 2, 3.0)
    assert grad[0] == pytest.approx(6.0, abs=1e-8)


def test_finite_diff_erg_log_density():
    from netmisfit.ergm import erg_log_density

    grad = finite_diff_gradient(lambda x: erg_log_density(1.0, x[0]), math.log(2.0))
    assert grad[0] == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_finite_diff_sbm_eta_slot():
    from netmisfit.sbm import log_density

    grad = finite_diff_gradient(lambda x: log_density(1.0, 1.0, 1.0, 0.5, 0.5, x[0]), 1.0 / 3.0)
    assert grad[0] == pytest.approx(3.0, abs=1e-5)


def test_finite_diff_non_finite():
    with pytest.raises(NonFiniteEvaluation):
        finite_diff_gradient(lambda x: math.log(x[0]) if x[0] > 0 else math.nan, 0.0)
