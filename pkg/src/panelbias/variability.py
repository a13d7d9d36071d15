"""
Intrinsic judging error variability and per-judge marking scores.

The standard deviation of an average judge's error shrinks as performance
quality rises; it is modeled as sigma(c) = alpha + beta * exp(gamma * c)
and fitted per discipline (per apparatus for trampoline) against the
empirical error spread of each observed control-score level, weighted by
how often that level occurs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ingest import Discipline
from .stats import wls_solve, SingularDesign

__all__ = [
    "SIGMA_FLOOR",
    "FitUnderdetermined",
    "SigmaModel",
    "JudgeProfile",
    "sigma_group_key",
    "error_bins",
    "fit_sigma_curve",
    "fit_sigma",
    "evaluate_sigma",
    "marking_scores",
]

# Lower bound on sigma(c): one fifth of a 0.1 mark step. Keeps normalized
# errors finite where the fitted curve is extrapolated toward zero.
SIGMA_FLOOR = 0.02

# |gamma| search range; both signs are allowed so the fit covers curves
# that flatten out toward high scores (beta > 0, gamma < 0) as well as
# curves whose decline accelerates (beta < 0, gamma > 0).
_GAMMA_MIN_MAG, _GAMMA_MAX_MAG = 0.05, 3.0
_GAMMA_GRID_SIZE = 512


class FitUnderdetermined(ValueError):
    """Fewer than 3 distinct control-score values in the fit group."""


@dataclass(frozen=True)
class SigmaModel:
    """Fitted heteroscedasticity curve for one discipline/apparatus group."""

    group_key: tuple
    alpha: float
    beta: float
    gamma: float
    c_min: float
    c_max: float
    weighted_rmse: float


@dataclass(frozen=True)
class JudgeProfile:
    """Per-judge tendency and accuracy, both in units of sigma(c)."""

    judge_id: str
    group_key: tuple
    mu_hat: float
    marking_score: float
    n_marks: int


def sigma_group_key(mark_or_perf) -> tuple:
    """Variability fit group: per apparatus for trampoline, else per discipline."""
    disc = mark_or_perf.discipline
    if disc is Discipline.TRAMPOLINE:
        return (disc, mark_or_perf.apparatus)
    return (disc, None)


def error_bins(control_scores, errors):
    """Empirical error SD per distinct control-score value (0.05 grid).

    Returns (c, sd, weight) arrays; bins with a single mark carry no SD
    estimate and are dropped. The SD uses the n-1 denominator; the weight
    is the bin's mark count.
    """
    buckets: dict = {}
    for c, e in zip(control_scores, errors):
        buckets.setdefault(round(float(c) * 20), []).append(float(e))
    cs, sds, ws = [], [], []
    for key in sorted(buckets):
        vals = buckets[key]
        n = len(vals)
        if n < 2:
            continue
        mean = math.fsum(vals) / n
        var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
        cs.append(key / 20.0)
        sds.append(math.sqrt(var))
        ws.append(float(n))
    return np.array(cs), np.array(sds), np.array(ws)


def _weighted_exp_objective(gamma, c, sd, w):
    basis = np.column_stack([np.ones_like(c), np.exp(gamma * c)])
    try:
        sol = wls_solve(basis, sd, w)
    except SingularDesign:
        return np.inf, (float(np.average(sd, weights=w)), 0.0)
    alpha, beta = sol.coefficients
    resid = sd - basis @ sol.coefficients
    return float(np.sum(w * resid**2)), (float(alpha), float(beta))


def fit_sigma_curve(control_scores, errors, group_key) -> SigmaModel:
    """Fit sigma(c) = alpha + beta * exp(gamma * c) to binned error SDs.

    The model is linear given gamma, so gamma is profiled over a
    deterministic log-spaced grid and the best grid point refined by
    golden-section search; (alpha, beta) come from a weighted linear
    solve at each gamma. Same input yields bit-identical output.
    """
    c, sd, w = error_bins(control_scores, errors)
    if len(c) < 3:
        raise FitUnderdetermined(
            f"group {group_key}: {len(c)} usable control-score bins, need >= 3"
        )
    c_min = float(np.min(control_scores))
    c_max = float(np.max(control_scores))

    if np.all(sd == 0.0):
        return SigmaModel(group_key, SIGMA_FLOOR, 0.0, -1.0, c_min, c_max, 0.0)

    # Profile gamma on a log-spaced grid; the 2x2 solve is vectorized.
    mags = np.exp(
        np.linspace(math.log(_GAMMA_MIN_MAG), math.log(_GAMMA_MAX_MAG),
                    _GAMMA_GRID_SIZE)
    )
    grid = np.sort(np.concatenate([-mags, mags]))
    E = np.exp(np.outer(grid, c))  # (G, B)
    s11 = np.sum(w)
    s1e = E @ w
    see = (E * E) @ w
    sy1 = np.sum(w * sd)
    sye = E @ (w * sd)
    det = s11 * see - s1e**2
    ok = det > 1e-300
    alpha_g = np.where(ok, (sy1 * see - sye * s1e) / np.where(ok, det, 1.0), 0.0)
    beta_g = np.where(ok, (s11 * sye - s1e * sy1) / np.where(ok, det, 1.0), 0.0)
    fit = alpha_g[:, None] + beta_g[:, None] * E
    obj = np.where(ok, np.sum(w * (sd - fit) ** 2, axis=1), np.inf)
    best = int(np.argmin(obj))

    # Refine within the neighboring grid points, staying on the winning
    # sign of gamma (the basis degenerates at gamma = 0).
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    if grid[best] > 0:
        lo = max(lo, _GAMMA_MIN_MAG)
    else:
        hi = min(hi, -_GAMMA_MIN_MAG)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, p1 = _weighted_exp_objective(x1, c, sd, w)
    f2, p2 = _weighted_exp_objective(x2, c, sd, w)
    while b - a > 1e-6:
        if f1 <= f2:
            b, x2, f2, p2 = x2, x1, f1, p1
            x1 = b - invphi * (b - a)
            f1, p1 = _weighted_exp_objective(x1, c, sd, w)
        else:
            a, x1, f1, p1 = x1, x2, f2, p2
            x2 = a + invphi * (b - a)
            f2, p2 = _weighted_exp_objective(x2, c, sd, w)
    if f1 <= f2:
        gamma, obj_best, (alpha, beta) = x1, f1, p1
    else:
        gamma, obj_best, (alpha, beta) = x2, f2, p2
    # Keep the grid optimum if refinement did not improve on it.
    if obj[best] < obj_best:
        gamma, obj_best = float(grid[best]), float(obj[best])
        alpha, beta = float(alpha_g[best]), float(beta_g[best])

    rmse = math.sqrt(obj_best / float(np.sum(w)))
    return SigmaModel(group_key, float(alpha), float(beta), float(gamma),
                      c_min, c_max, rmse)


def fit_sigma(marks, group_key) -> SigmaModel:
    """Fit the variability curve from labeled marks of one group."""
    cs = [m.control_score for m in marks]
    errors = [m.base.mark - m.control_score for m in marks]
    return fit_sigma_curve(cs, errors, group_key)


def evaluate_sigma(model: SigmaModel, c: float) -> float:
    """sigma(c), floored at SIGMA_FLOOR so it is always positive."""
    raw = model.alpha + model.beta * math.exp(model.gamma * c)
    return max(raw, SIGMA_FLOOR)


def marking_scores(marks, model: SigmaModel, exclude_sn: bool = False) -> list:
    """Per-judge tendency mu_hat and RMS marking score.

    Each error is normalized by sigma(c) of its performance; mu_hat is the
    mean and the marking score the root-mean-square of those normalized
    errors. With ``exclude_sn`` same-nationality marks are left out of the
    profiles. Judges with zero marks are never emitted.
    """
    per_judge: dict = {}
    for m in marks:
        if exclude_sn and m.is_same_nationality:
            continue
        norm = (m.base.mark - m.control_score) / evaluate_sigma(model, m.control_score)
        per_judge.setdefault(m.base.judge_id, []).append(norm)

    profiles = []
    for judge_id in sorted(per_judge):
        ms = per_judge[judge_id]
        n = len(ms)
        mu = math.fsum(ms) / n
        score = math.sqrt(math.fsum(v * v for v in ms) / n)
        profiles.append(JudgeProfile(judge_id, model.group_key, mu, score, n))
    return profiles
