"""
Numerical kernel: weighted least squares, Student-t tail probabilities,
medians/quantiles and keyed (counter-based) normal sampling.

Everything in here is pure and deterministic; the rest of the package
builds on these primitives so that repeated runs are bit-identical.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularDesign",
    "WlsSolution",
    "wls_solve",
    "t_sf",
    "t_ppf",
    "normal_sf",
    "median",
    "quantile",
    "keyed_generator",
    "keyed_normals",
    "keyed_uniforms",
]


class SingularDesign(ValueError):
    """Raised when the weighted design matrix is rank deficient."""


@dataclass(frozen=True)
class WlsSolution:
    """Result of a weighted least-squares solve.

    ``covariance`` is the inverse weighted normal matrix scaled by the
    residual variance (weighted RSS / residual_df), so with weights equal
    to inverse error variances and a correct model it estimates the
    sampling covariance of the coefficients.
    """

    coefficients: np.ndarray
    covariance: np.ndarray
    residual_df: int

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def wls_solve(design, response, weights) -> WlsSolution:
    """Minimize sum_i w_i (y_i - x_i' b)^2 via QR of the weighted design.

    Parameters
    ----------
    design : (n, k) array_like
    response : (n,) array_like
    weights : (n,) array_like, strictly positive

    Raises
    ------
    SingularDesign
        if the weighted design has numerical rank < k (tolerance 1e-12
        on the scaled diagonal of R).
    """
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(response, dtype=float)
    w = np.asarray(weights, dtype=float)
    n, k = X.shape
    if y.shape != (n,) or w.shape != (n,):
        raise ValueError("design, response and weights have mismatched shapes")
    if k < 1 or n < k:
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and > 0")

    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    yw = y * sw
    Q, R = np.linalg.qr(Xw)
    diag = np.abs(np.diag(R))
    scale = np.max(np.abs(Xw), axis=0)
    scale[scale == 0.0] = 1.0
    if np.any(diag <= 1e-12 * np.sqrt(n) * scale):
        raise SingularDesign("weighted design matrix is rank deficient")

    coef = np.linalg.solve(R, Q.T @ yw)
    resid = yw - Xw @ coef
    df = n - k
    rss = float(resid @ resid)
    s2 = rss / df if df > 0 else 0.0
    Rinv = np.linalg.solve(R, np.eye(k))
    cov = s2 * (Rinv @ Rinv.T)
    return WlsSolution(coefficients=coef, covariance=cov, residual_df=df)


# ---------------------------------------------------------------------------
# Student-t tail probabilities via the regularized incomplete beta function.


def _betacf(a: float, b: float, x: float) -> float:
    # Modified Lentz continued fraction for the incomplete beta function.
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 500):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b), precision ~1e-10."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Two-sided Student-t survival probability 2 P(T > |t|)."""
    if df <= 0:
        raise ValueError("df must be > 0")
    t = float(t)
    if t == 0.0:
        return 1.0
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return betainc_reg(df / 2.0, 0.5, x)


def normal_sf(z: float) -> float:
    """One-sided standard normal survival probability P(Z > z)."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def t_ppf(p: float, df: float) -> float:
    """One-sided Student-t quantile: t with P(T <= t) = p."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_ppf(1.0 - p, df)
    # P(T <= t) = 1 - t_sf(t, df) / 2 for t >= 0; bisect on that.
    target = 2.0 * (1.0 - p)
    lo, hi = 0.0, 1.0
    while t_sf(hi, df) > target:
        hi *= 2.0
        if hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_sf(mid, df) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Medians and quantiles.


def median(values) -> float:
    """Median; the mean of the two middle values for an even count."""
    vs = sorted(float(v) for v in values)
    if not vs:
        raise ValueError("median of empty input")
    n = len(vs)
    mid = n // 2
    if n % 2:
        return vs[mid]
    return 0.5 * (vs[mid - 1] + vs[mid])


def quantile(values, q: float) -> float:
    """Quantile by linear interpolation between order statistics."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must be in [0, 1]")
    vs = sorted(float(v) for v in values)
    if not vs:
        raise ValueError("quantile of empty input")
    if len(vs) == 1:
        return vs[0]
    pos = q * (len(vs) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(vs) - 1)
    frac = pos - lo
    return vs[lo] * (1.0 - frac) + vs[hi] * frac


# ---------------------------------------------------------------------------
# Keyed counter-based randomness (Philox). Streams are identified by small
# integer keys, so values never depend on the order streams are consumed in.

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def keyed_generator(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for the stream identified by (seed, *stream)."""
    acc = seed & _MASK64
    for part in stream:
        acc = _splitmix64(acc ^ (part & _MASK64))
    key = (acc, _splitmix64(acc))
    return np.random.Generator(np.random.Philox(key=key))


def keyed_normals(seed: int, *stream: int, n: int) -> np.ndarray:
    return keyed_generator(seed, *stream).standard_normal(n)


def keyed_uniforms(seed: int, *stream: int, n: int) -> np.ndarray:
    return keyed_generator(seed, *stream).random(n)
