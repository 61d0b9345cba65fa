"""q-Pochhammer products, Gaussian binomials and the tail sums built from them.

Identities at rational q are checked in exact arithmetic (``fractions.Fraction``);
floating point is only used for q = 1 - d/n asymptotics, where the quantities
are carried in log form because (q;q)_inf underflows long before n/d = 1000.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy import integrate

from lipvol.rng import make_rng

ExactRational = Fraction

BRUTEFORCE_MAX = 22
REL_TOL_INF = 1e-14
Q_MAX = 1.0 - 1e-12
MAX_TWO_TAIL_WORK = 10**9


@dataclass(frozen=True)
class QValue:
    """``value`` with a rigorous bound ``err`` on |true - value|.

    ``log_value`` is kept separately since ``value`` may underflow to 0.
    """

    value: float
    err: float
    log_value: float
    terms: int = 0


def _check_q(q: float) -> None:
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")


def q_pochhammer(q: float, r: int) -> float:
    """(q;q)_r = prod_{j=1}^r (1 - q^j)."""
    _check_q(q)
    if r < 0:
        raise ValueError("r must be nonnegative")
    out = 1.0
    for j in range(1, r + 1):
        out *= 1.0 - q**j
    return out


def log_q_pochhammer_prefix(q: float, r_max: int) -> np.ndarray:
    """log (q;q)_r for r = 0..r_max."""
    j = np.arange(1, r_max + 1, dtype=np.float64)
    terms = np.log1p(-np.exp(j * math.log(q)))
    return np.concatenate([[0.0], np.cumsum(terms)])


def q_pochhammer_inf(q: float) -> QValue:
    """(q;q)_inf truncated at the first J whose tail bound is below 1e-14 (relative).

    The tail satisfies 0 <= -log prod_{j>J}(1 - q^j) <= tau with
    tau = q^(J+1) / ((1-q)(1-q^(J+1))), so the partial product overestimates the
    limit by a factor of at most e^tau.
    """
    _check_q(q)
    if q >= Q_MAX:
        raise ValueError(f"q = {q} too close to 1: truncation length explodes")
    lq = math.log(q)
    one_minus_q = -math.expm1(lq)

    def tail(J: int) -> float:
        qj = math.exp((J + 1) * lq)
        return qj / (one_minus_q * -math.expm1((J + 1) * lq))

    # q^(J+1) < 1e-14 (1-q)^2 is sufficient; then step down to the smallest J
    J = max(1, math.ceil(math.log(REL_TOL_INF * one_minus_q**2) / lq))
    while J > 1 and tail(J - 1) < REL_TOL_INF:
        J -= 1
    while tail(J) >= REL_TOL_INF:
        J += 1
    j = np.arange(1, J + 1, dtype=np.float64)
    log_terms = np.log1p(-np.exp(j * lq))
    log_value = math.fsum(log_terms)
    value = math.exp(log_value)
    tau = tail(J)
    return QValue(value, value * -math.expm1(-tau), log_value, J)


def gaussian_binomial_poly(n_top: int, r: int) -> list[int]:
    """Coefficients of the Gaussian binomial [n_top choose r]_q as a polynomial in q
    (the inversion generating function of binary words)."""
    if r < 0 or n_top < 0 or r > n_top:
        raise ValueError(f"need 0 <= r <= n_top, got r={r}, n_top={n_top}")
    # row[k] = [m choose k]_q, built with [m,k] = [m-1,k-1] + q^k [m-1,k]
    rows: list[list[int]] = [[1]]
    for m in range(1, n_top + 1):
        new = [[1]]
        for k in range(1, min(m, r) + 1):
            a = rows[k - 1]
            b = rows[k] if k < len(rows) else []
            size = max(len(a), len(b) + k) if b else len(a)
            poly = [0] * size
            for i, c in enumerate(a):
                poly[i] += c
            for i, c in enumerate(b):
                poly[i + k] += c
            new.append(poly)
        rows = new
    return rows[r]


def eval_poly(coeffs: list[int], q) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * q + c
    return acc


def gaussian_binomial(n_top: int, r: int, q: Fraction | int) -> Fraction:
    """[n_top choose r]_q in exact arithmetic.  At q = 1 the polynomial form is
    evaluated (giving the ordinary binomial); otherwise the product formula."""
    if r < 0 or n_top < 0 or r > n_top:
        raise ValueError(f"need 0 <= r <= n_top, got r={r}, n_top={n_top}")
    q = Fraction(q)
    if q == 1:
        return eval_poly(gaussian_binomial_poly(n_top, r), q)
    N = n_top - r
    out = Fraction(1)
    for j in range(1, r + 1):
        out *= (1 - q ** (N + j)) / (1 - q**j)
    return out


def one_tail_A(N: int, r: int, q: Fraction | int) -> Fraction:
    """A_{N,r}(q) = binom(N+r, r)^-1 [N+r choose r]_q."""
    if N < 0 or r < 0:
        raise ValueError("N and r must be nonnegative")
    return gaussian_binomial(N + r, r, q) / math.comb(N + r, r)


def one_tail_A_bruteforce(N: int, r: int, q: Fraction | int) -> Fraction:
    """Average of q^inv over the binom(N+r, r) binary words.

    A word lists the N + r variables in increasing order; an inversion is a
    (t, y) pair with y above t, i.e. the number of t's before each y.
    """
    if N < 0 or r < 0:
        raise ValueError("N and r must be nonnegative")
    if N + r > BRUTEFORCE_MAX:
        raise ValueError(f"N + r = {N + r} exceeds the enumeration guard {BRUTEFORCE_MAX}")
    q = Fraction(q)
    hist: dict[int, int] = {}
    for ys in combinations(range(N + r), r):
        inv = sum(pos - k for k, pos in enumerate(ys))
        hist[inv] = hist.get(inv, 0) + 1
    total = sum(c * q**k for k, c in hist.items())
    return total / math.comb(N + r, r)


def one_tail_A_upper(N: int, r: int, q: Fraction) -> Fraction:
    """binom(N+r, r)^-1 prod_{j<=r} 1/(1 - q^j), which dominates A_{N,r}(q)."""
    q = Fraction(q)
    out = Fraction(1, math.comb(N + r, r))
    for j in range(1, r + 1):
        out /= 1 - q**j
    return out


def _level_integral(t: np.ndarray, q: float) -> np.ndarray:
    """int_0^1 q^{#{i : t_i < y}} dy for each row of ``t`` (shape samples x N)."""
    S, N = t.shape
    edges = np.concatenate([np.zeros((S, 1)), np.sort(t, axis=1), np.ones((S, 1))], axis=1)
    gaps = np.diff(edges, axis=1)
    return gaps @ (q ** np.arange(N + 1, dtype=np.float64))


def monotone_correlation_check(
    N: int, r: int, s: int, q: Fraction | float, samples: int = 10**5, seed: int = 0
) -> dict:
    """Monte Carlo estimate of int B_r(t) C_s(t) dt against the exact A_{N,r} A_{N,s}.

    Given t, the y-integral in B_r factorises over the r tail variables, and each
    factor is a piecewise-constant 1-d integral between consecutive sorted t's;
    C_s is the same with t replaced by 1 - t.  If r = 0 or s = 0 one factor is 1
    and the left side is the other A exactly.
    """
    if samples < 10**4:
        raise ValueError("need at least 10^4 samples")
    qf = Fraction(q).limit_denominator(10**12) if isinstance(q, float) else Fraction(q)
    rhs = one_tail_A(N, r, qf) * one_tail_A(N, s, qf)
    if r == 0 or s == 0 or N == 0:
        lhs = one_tail_A(N, s, qf) if r == 0 else one_tail_A(N, r, qf)
        if N == 0:
            lhs = Fraction(1)
        return {"lhs_estimate": float(lhs), "lhs_exact": lhs, "rhs": rhs, "stderr": 0.0,
                "exact": True, "pass": lhs <= rhs}
    rng = make_rng(seed)
    qv = float(qf)
    t = rng.random((samples, N))
    b = _level_integral(t, qv) ** r
    c = _level_integral(1.0 - t, qv) ** s
    prod = b * c
    mean = float(prod.mean())
    se = float(prod.std(ddof=1) / math.sqrt(samples))
    return {"lhs_estimate": mean, "rhs": rhs, "stderr": se, "exact": False,
            "pass": mean <= float(rhs) + 4.0 * se}


def _logsumexp_sorted(logs: np.ndarray) -> float:
    """log sum exp with the terms added in descending order by fsum."""
    if logs.size == 0:
        return -math.inf
    top = float(logs.max())
    vals = np.exp(np.sort(logs - top)[::-1])
    return top + math.log(math.fsum(vals.tolist()))


def two_tail_log_sum(q: float, R: int) -> float:
    """log of sum_{0<=r,s<=R} q^{rs} / ((q;q)_r (q;q)_s).

    The table is symmetric, so it is summed one level m = min(r, s) at a time as
    the diagonal entry plus twice the entries right of it.  Each level is reduced
    to a log-sum on the spot (NumPy pairwise summation after a max shift) and the
    level sums are combined largest first with ``math.fsum``.

    Once q^m < 1 - q^(m+1), level m decreases along s from its diagonal and the
    diagonals decrease in m, so the sweep stops at the first such level whose
    diagonal is below 1e-18 / (R+1)^2 of the (0, R) entry.
    """
    _check_q(q)
    if R < 0:
        raise ValueError("R must be nonnegative")
    if R > 10**6:
        raise ValueError("R above 10^6 is not supported")
    lq = math.log(q)
    lp = log_q_pochhammer_prefix(q, R)
    cutoff = -float(lp[R]) + math.log(1e-18) - 2.0 * math.log(R + 1)
    idx = np.arange(R + 1, dtype=np.float64)
    work = 0
    level_logs = []
    for m in range(R + 1):
        row = m * idx[m:] * lq - lp[m] - lp[m:]
        work += row.size
        if work > MAX_TWO_TAIL_WORK:
            raise ValueError(f"two-tail sum needs more than {MAX_TWO_TAIL_WORK} terms; reduce R or q")
        top = float(row.max())
        shifted = np.exp(row - top)
        level_logs.append(top + math.log(shifted[0] + 2.0 * shifted[1:].sum()))
        decreasing = m * lq < math.log1p(-math.exp((m + 1) * lq))
        if decreasing and row[0] < cutoff:
            break
    return _logsumexp_sorted(np.array(level_logs))


def two_tail_sum(q: float, R: int) -> float:
    log_total = two_tail_log_sum(q, R)
    if log_total > 709.0:
        raise OverflowError(f"two-tail sum for q={q}, R={R} overflows a double (log = {log_total:.1f})")
    return math.exp(log_total)


def two_tail_sum_table(q: Fraction | float, R: int):
    """Direct (R+1) x (R+1) table; exact when q is a Fraction."""
    poch = [Fraction(1)] if isinstance(q, Fraction) else [1.0]
    for j in range(1, R + 1):
        poch.append(poch[-1] * (1 - q**j))
    return sum(q ** (r * s) / (poch[r] * poch[s]) for r in range(R + 1) for s in range(R + 1))


def two_tail_prefactor_bound(q: float, R: int) -> float:
    """(R + 1 + R/(1-q)) / (q;q)_inf: row 0 contributes at most (R+1)/(q;q)_inf and
    every other row at most 1/((q;q)_inf (1-q^r)) <= 1/((q;q)_inf (1-q))."""
    inf = q_pochhammer_inf(q)
    return (R + 1 + R / (1.0 - q)) / (inf.value - inf.err)


def two_tail_log_prefactor_bound(q: float, R: int) -> float:
    inf = q_pochhammer_inf(q)
    return math.log(R + 1 + R / (1.0 - q)) - inf.log_value


def row_sum(q: float, r: int, tol: float = 1e-17) -> float:
    """sum_{s>=0} q^{rs} / (q;q)_s, summed until the geometric tail bound is below tol."""
    _check_q(q)
    z = q**r
    if z >= 1.0:
        raise ValueError("row sum diverges for r = 0")
    term = 1.0
    parts = [term]
    s = 0
    while True:
        s += 1
        ratio = z / (1.0 - q**s)
        term *= ratio
        parts.append(term)
        if ratio < 1.0 and term * ratio / (1.0 - ratio) < tol * math.fsum(parts):
            break
    return math.fsum(parts)


def inv_shifted_pochhammer_inf(q: float, r: int) -> float:
    """1 / (q^r; q)_inf = 1 / prod_{j>=r} (1 - q^j) for r >= 1."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return q_pochhammer(q, r - 1) / q_pochhammer_inf(q).value


def zeta_integral() -> float:
    """-int_0^inf log(1 - e^-t) dt.

    On [0, 1] the -log t singularity is integrated analytically (it contributes
    exactly 1) and the smooth remainder -log((1 - e^-t)/t) by quadrature.  On
    [1, A] plain quadrature, and past A = 40 the series sum_k e^{-kA}/k^2.
    """
    def smooth(t: float) -> float:
        if t == 0.0:
            return 0.0
        return -math.log(-math.expm1(-t) / t)

    def body(t: float) -> float:
        return -math.log1p(-math.exp(-t))

    head, _ = integrate.quad(smooth, 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    mid, _ = integrate.quad(body, 1.0, 40.0, epsabs=1e-14, epsrel=1e-14, limit=200)
    A = 40.0
    tail = math.fsum(math.exp(-k * A) / k**2 for k in range(1, 6))
    return 1.0 + head + mid + tail
