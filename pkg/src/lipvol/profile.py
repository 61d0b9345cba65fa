"""The logistic boundary-layer profile and its entropy / violating-pair balance.

    rho_d(x) = (1 - e^-d) / ((1 + e^-dx)(1 + e^(d(x-1))))
    F_d(x)   = (1/d) log((1 + e^dx) / (1 + e^(d(x-1))))

Everything is evaluated through softplus(z) = log(1 + e^z) (``np.logaddexp``)
and expm1/log1p, never through a raw exponential of d*x.  The truncated profile
lives on the window I = [-T/d, 1 + T/d] and is rho_d / (F(1+T/d) - F(-T/d)).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from lipvol.rng import make_rng

_QUAD = dict(epsabs=1e-15, epsrel=1e-13, limit=400)


@dataclass(frozen=True)
class ProfileParams:
    d: float
    T: float | None = None

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"profile needs d >= 2, got {self.d}")
        if self.T is None:
            object.__setattr__(self, "T", math.log(self.d))
        if self.T <= 0:
            raise ValueError("window padding T must be positive")
        if self.T_sq_over_d > 0.5:
            warnings.warn(
                f"T^2/d = {self.T_sq_over_d:.3f} > 0.5: window padding is not small against the layer scale",
                stacklevel=2,
            )

    @property
    def T_sq_over_d(self) -> float:
        return self.T**2 / self.d

    @property
    def window(self) -> tuple[float, float]:
        return -self.T / self.d, 1.0 + self.T / self.d

    @property
    def window_length(self) -> float:
        return 1.0 + 2.0 * self.T / self.d

    @property
    def window_mass(self) -> float:
        """F(1 + T/d) - F(-T/d), computed as 1 - 2 F(-T/d) by symmetry."""
        return 1.0 - 2.0 * float(cdf(self, self.window[0]))


@dataclass(frozen=True)
class ProfileSummary:
    H: float
    Q: float
    gain: float
    norm_defect: float
    d: float
    T: float
    truncated: bool


def _softplus(z):
    return np.logaddexp(0.0, z)


def log_rho(p: ProfileParams, x, truncated: bool = False):
    x = np.asarray(x, dtype=np.float64)
    d = p.d
    out = math.log(-math.expm1(-d)) - _softplus(-d * x) - _softplus(d * (x - 1.0))
    if truncated:
        a, b = p.window
        out = np.where((x >= a) & (x <= b), out - math.log(p.window_mass), -np.inf)
    return out


def rho(p: ProfileParams, x, truncated: bool = False):
    out = np.exp(log_rho(p, x, truncated))
    return float(out) if out.ndim == 0 else out


def cdf(p: ProfileParams, x, truncated: bool = False):
    x = np.asarray(x, dtype=np.float64)
    d = p.d
    # use the smaller tail for accuracy: 1 - F(x) = F(1 - x)
    left = (_softplus(d * x) - _softplus(d * (x - 1.0))) / d
    right = 1.0 - (_softplus(d * (1.0 - x)) - _softplus(-d * x)) / d
    out = np.where(x <= 0.5, left, right)
    if truncated:
        a, b = p.window
        Fa = (_softplus(d * a) - _softplus(d * (a - 1.0))) / d
        out = np.clip((out - Fa) / p.window_mass, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _log_expm1(z):
    z = np.asarray(z, dtype=np.float64)
    big = z > 30.0
    safe = np.where(big, 1.0, z)
    return np.where(big, z + np.log1p(-np.exp(-np.where(big, z, 30.0))), np.log(np.expm1(safe)))


def inverse_cdf(p: ProfileParams, u, truncated: bool = False):
    """Solve F(x) = u.

    (1 + e^dx) = e^du (1 + e^(d(x-1))) is linear in e^dx, giving
    x = (log expm1(du) - log(-expm1(d(u-1)))) / d; one Newton step polishes the
    rounding.  With ``truncated`` u is first mapped into [F(-T/d), F(1+T/d)].
    """
    u = np.asarray(u, dtype=np.float64)
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise ValueError("u must lie strictly inside (0, 1)")
    d = p.d
    if truncated:
        Fa = float(cdf(p, p.window[0]))
        u = Fa + u * p.window_mass
    x = (_log_expm1(d * u) - np.log(-np.expm1(d * (u - 1.0)))) / d
    dens = np.exp(log_rho(p, x))
    step = np.where(dens > 1e-300, (cdf(p, x) - u) / np.maximum(dens, 1e-300), 0.0)
    x = x - step
    if truncated:
        a, b = p.window
        x = np.clip(x, a, b)
    return float(x) if x.ndim == 0 else x


def sample(p: ProfileParams, count: int, seed) -> np.ndarray:
    """i.i.d. draws from the truncated, renormalised profile (inverse CDF)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = make_rng(seed)
    u = rng.random(count)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return inverse_cdf(p, u, truncated=True)


def sample_matrix(p: ProfileParams, shape: tuple[int, int], rng) -> np.ndarray:
    rng = make_rng(rng)
    u = rng.random(shape)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return inverse_cdf(p, u, truncated=True)


def _neg_rho_log_rho(p: ProfileParams, x: float) -> float:
    lr = float(log_rho(p, x))
    return -math.exp(lr) * lr


def entropy_H(p: ProfileParams, truncated: bool = False) -> float:
    """-int rho log rho, integrated on the left half in the layer variable t = d x
    and doubled (rho is symmetric about 1/2)."""
    d = p.d

    def g(t):
        return _neg_rho_log_rho(p, t / d)

    lo = -p.T if truncated else -np.inf
    pieces = [(lo, 0.0), (0.0, min(60.0, d / 2)), (min(60.0, d / 2), d / 2)]
    raw = 0.0
    for a, b in pieces:
        if b > a:
            val, _ = integrate.quad(g, a, b, **_QUAD)
            raw += val
    raw *= 2.0 / d
    if not truncated:
        return raw
    Z = p.window_mass
    return raw / Z + math.log(Z)


def bad_pair_Q(p: ProfileParams, truncated: bool = False) -> float:
    """P(|X - Y| > 1) for X, Y i.i.d. from the profile, as 2 int rho(x) F(x - 1) dx.

    With x = 1 + t/d the integrand lives on t = O(1).
    """
    d = p.d
    if not truncated:
        def g(t):
            x = 1.0 + t / d
            return math.exp(float(log_rho(p, x))) * float(cdf(p, t / d))

        total = 0.0
        for a, b in ((-np.inf, -d), (-d, 0.0), (0.0, np.inf)):
            val, _ = integrate.quad(g, a, b, **_QUAD)
            total += val
        return 2.0 * total / d

    a_w, b_w = p.window
    Fa = float(cdf(p, a_w))
    Z = p.window_mass

    def gt(t):
        x = 1.0 + t / d
        return math.exp(float(log_rho(p, x))) * (float(cdf(p, t / d)) - Fa)

    # x - 1 >= a_w  <=>  t >= -T ; x <= b_w  <=>  t <= T
    total = 0.0
    for a, b in ((-p.T, 0.0), (0.0, p.T)):
        val, _ = integrate.quad(gt, a, b, **_QUAD)
        total += val
    return 2.0 * total / (d * Z * Z)


def norm_defect(p: ProfileParams, truncated: bool = False) -> float:
    """|int rho - 1| by quadrature, independent of the CDF closed form except for
    the truncation constant."""
    d = p.d

    def g(t):
        return float(rho(p, t / d))

    if truncated:
        pieces = [(-p.T, 0.0), (0.0, d / 2)]
    else:
        pieces = [(-np.inf, 0.0), (0.0, d / 2)]
    half = sum(integrate.quad(g, a, b, **_QUAD)[0] for a, b in pieces)
    total = 2.0 * half / d
    if truncated:
        total /= p.window_mass
    return abs(total - 1.0)


def profile_gain(p: ProfileParams, truncated: bool = False) -> ProfileSummary:
    H = entropy_H(p, truncated)
    Q = bad_pair_Q(p, truncated)
    return ProfileSummary(
        H=H,
        Q=Q,
        gain=H - 0.5 * p.d * Q,
        norm_defect=norm_defect(p, truncated),
        d=p.d,
        T=p.T,
        truncated=truncated,
    )


def neighbor_extremes(
    p: ProfileParams,
    d_neighbors: int | None = None,
    replicas: int = 20000,
    seed=0,
    return_samples: bool = False,
) -> dict:
    """Statistics of R = min + 1 - max over ``d_neighbors`` truncated-profile draws.

    ``p_scaled_max_le_0`` estimates P(d (max - 1) <= 0), whose limit is the
    logistic median 1/2.
    """
    if d_neighbors is None:
        d_neighbors = round(p.d)
    if d_neighbors < 1:
        raise ValueError("need at least one neighbour")
    rng = make_rng(seed)
    x = sample_matrix(p, (replicas, d_neighbors), rng)
    M = x.max(axis=1)
    m = x.min(axis=1)
    R = m + 1.0 - M
    scaled = p.d * (M - 1.0)
    root = math.sqrt(replicas)

    def stat(v):
        return float(v.mean()), float(v.std(ddof=1) / root)

    mean_R, se_R = stat(R)
    mean_R2, se_R2 = stat(R * R)
    mean_l, se_l = stat(np.log1p(R))
    p0, se_p0 = stat((scaled <= 0.0).astype(np.float64))
    out = {
        "d": p.d,
        "T": p.T,
        "d_neighbors": d_neighbors,
        "replicas": replicas,
        "mean_R": mean_R,
        "stderr_R": se_R,
        "mean_R2": mean_R2,
        "stderr_R2": se_R2,
        "mean_log1pR": mean_l,
        "stderr_log1pR": se_l,
        "p_scaled_max_le_0": p0,
        "stderr_p_scaled_max_le_0": se_p0,
    }
    if return_samples:
        out["scaled_max"] = scaled
    return out
