import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from lipvol.profile import (
    ProfileParams,
    bad_pair_Q,
    cdf,
    entropy_H,
    inverse_cdf,
    log_rho,
    neighbor_extremes,
    norm_defect,
    profile_gain,
    rho,
    sample,
    sample_matrix,
)
from oracles import bisect_root

PI2 = math.pi**2


def rho_direct(d, x):
    return (1 - math.exp(-d)) / ((1 + math.exp(-d * x)) * (1 + math.exp(d * (x - 1))))


def test_params_validation_and_warning():
    with pytest.raises(ValueError):
        ProfileParams(1.5)
    with pytest.raises(ValueError):
        ProfileParams(10, -1.0)
    with pytest.warns(UserWarning, match="T\\^2/d"):
        ProfileParams(10)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p = ProfileParams(100)
    assert p.T == pytest.approx(math.log(100))
    assert p.window == (-p.T / 100, 1 + p.T / 100)


def test_rho_values():
    p = ProfileParams(100)
    assert abs(rho(p, 0.5) - 1.0) < 1e-20
    for x in (-0.3, 0.0, 0.01, 0.4, 0.97, 1.2):
        assert rho(p, x) == pytest.approx(rho_direct(100, x), rel=1e-12)
    # far tails stay finite and nonnegative
    vals = rho(ProfileParams(200), np.array([-5.0, -3.5, 4.5, 6.0]))
    assert np.all(vals >= 0) and np.all(np.isfinite(vals))


@pytest.mark.parametrize("truncated", [False, True])
def test_rho_symmetry(truncated):
    p = ProfileParams(50)
    x = np.linspace(-0.05, 1.05, 301)
    a, b = rho(p, x, truncated), rho(p, 1 - x, truncated)
    assert np.max(np.abs(a - b)) < 1e-12


def test_rho_integrates_to_one_d20():
    p = ProfileParams(20, 2.0)
    val = sum(integrate.quad(lambda x: rho(p, x), a, b, epsabs=1e-14, limit=200)[0]
              for a, b in ((-np.inf, 0), (0, 1), (1, np.inf)))
    assert abs(val - 1) < 1e-10
    assert norm_defect(p) < 1e-10
    assert norm_defect(p, truncated=True) < 1e-10


def test_cdf_values():
    for d in (10, 50, 200):
        p = ProfileParams(d, 2.0)
        assert cdf(p, 0.5) == pytest.approx(0.5, abs=1e-15)
        assert cdf(p, 50.0) == pytest.approx(1.0, abs=1e-15)
        assert cdf(p, -50.0) == pytest.approx(0.0, abs=1e-15)


def test_cdf_against_quadrature():
    p = ProfileParams(30, 2.0)
    for x in (-0.1, 0.0, 0.2, 0.5, 0.9, 1.05):
        val, _ = integrate.quad(lambda t: rho(p, t), -np.inf, x, epsabs=1e-13)
        assert cdf(p, x) == pytest.approx(val, abs=1e-11)


@pytest.mark.parametrize("truncated", [False, True])
def test_inverse_cdf_roundtrip(truncated):
    p = ProfileParams(50)
    a, b = p.window
    x = np.linspace(a + 1e-9, b - 1e-9, 400)
    u = cdf(p, x, truncated)
    assert np.max(np.abs(inverse_cdf(p, u, truncated) - x)) < 1e-9


def test_inverse_cdf_matches_bisection():
    p = ProfileParams(80)
    for u in (1e-6, 0.01, 0.3, 0.5, 0.77, 0.999):
        ref = bisect_root(lambda x: cdf(p, x) - u, -2.0, 3.0)
        assert inverse_cdf(p, u) == pytest.approx(ref, abs=1e-12)
    with pytest.raises(ValueError):
        inverse_cdf(p, 1.0)


def test_sample_in_window_and_symmetric():
    p = ProfileParams(50)
    x = sample(p, 100_000, seed=1)
    a, b = p.window
    assert np.all((x >= a) & (x <= b))
    assert abs(x.mean() - 0.5) < 4 * x.std() / math.sqrt(x.size)


def test_sample_ks_distance():
    p = ProfileParams(50)
    x = np.sort(sample(p, 100_000, seed=2))
    ecdf = np.arange(1, x.size + 1) / x.size
    assert np.max(np.abs(ecdf - cdf(p, x, truncated=True))) < 0.01


def test_sample_deterministic():
    p = ProfileParams(40)
    assert np.array_equal(sample(p, 1000, 7), sample(p, 1000, 7))
    assert np.array_equal(sample_matrix(p, (3, 4), 9), sample_matrix(p, (3, 4), 9))


def test_profile_constants():
    p = ProfileParams(100)
    assert abs(100 * entropy_H(p) - PI2 / 3) <= 0.04
    assert abs(100**2 * bad_pair_Q(p) - PI2 / 3) <= 0.2
    s = profile_gain(ProfileParams(200))
    assert abs(200 * s.gain - PI2 / 6) <= 0.02
    assert 0 <= s.Q <= 1
    assert s.norm_defect < 1e-10
    assert s.gain == s.H - 100 * s.Q


def test_entropy_against_direct_quadrature():
    p = ProfileParams(25)

    def f(x):
        r = rho_direct(25, x)
        return -r * math.log(r) if r > 0 else 0.0

    val = sum(integrate.quad(f, a, b, limit=400, epsabs=1e-14)[0]
              for a, b in ((-2, 0), (0, 0.5), (0.5, 1), (1, 3)))
    assert entropy_H(p) == pytest.approx(val, abs=1e-10)


def test_bad_pair_Q_two_dim_monte_carlo():
    p = ProfileParams(50)
    rng = np.random.default_rng(5)
    u = rng.random((2, 10**6))
    x, y = inverse_cdf(p, u[0]), inverse_cdf(p, u[1])
    hit = (np.abs(x - y) > 1).astype(float)
    se = hit.std() / math.sqrt(hit.size)
    assert abs(hit.mean() - bad_pair_Q(p)) < 4 * se


def test_truncated_Q_two_dim_monte_carlo():
    p = ProfileParams(30, 2.0)
    x = sample_matrix(p, (2, 10**6), 6)
    hit = (np.abs(x[0] - x[1]) > 1).astype(float)
    se = hit.std() / math.sqrt(hit.size)
    assert abs(hit.mean() - bad_pair_Q(p, truncated=True)) < 4 * se


def test_truncation_mass_tail():
    for T in (3, 5, 8):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # T = 8 trips the T^2/d diagnostic
            p = ProfileParams(50, T)
        assert 1 - p.window_mass <= 2 * math.exp(-T)


def test_entropy_trend():
    ds = (25, 50, 100, 200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = [ProfileParams(d) for d in ds]
    # untruncated: deviations are exponentially small in d, already at rounding level
    for p in params:
        assert abs(p.d * entropy_H(p) - PI2 / 3) < 1e-9
    # truncated to I: deviation shrinks monotonically
    dev = [abs(p.d * entropy_H(p, truncated=True) - PI2 / 3) for p in params]
    assert all(b < a for a, b in zip(dev, dev[1:]))


def test_log_rho_truncated_outside_window():
    p = ProfileParams(50)
    a, b = p.window
    assert log_rho(p, a - 1e-6, truncated=True) == -np.inf
    assert np.isfinite(log_rho(p, b, truncated=True))


def test_neighbor_extremes_d200():
    p = ProfileParams(200)
    out = neighbor_extremes(p, replicas=20000, seed=3)
    assert out["d_neighbors"] == 200
    assert abs(out["mean_R"]) * 200 < 0.3
    assert out["mean_R2"] * 200**2 < 8
    assert abs(out["p_scaled_max_le_0"] - 0.5) <= 4 * out["stderr_p_scaled_max_le_0"]
    assert out["mean_log1pR"] >= out["mean_R"] - out["mean_R2"] - 4 * out["stderr_log1pR"]


def test_neighbor_extremes_scaled_max_is_logistic():
    p = ProfileParams(200)
    out = neighbor_extremes(p, replicas=20000, seed=4, return_samples=True)
    s = np.sort(out["scaled_max"])
    ecdf = np.arange(1, s.size + 1) / s.size
    # window truncation at T = log d caps d(M - 1) at T
    logistic = 1 / (1 + np.exp(-s))
    assert np.max(np.abs(ecdf - logistic)[s < p.T - 1]) < 0.03
