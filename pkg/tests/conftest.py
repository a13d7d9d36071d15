"""Shared builders and independent oracles used across the test suite."""

import functools
import math

import numpy as np
import pytest

from panelbias.ingest import (
    Discipline,
    JudgeRole,
    MarkKind,
    MarkRecord,
    Performance,
    Stage,
)
from panelbias.stats import median


def make_mark(performance_id="p1", judge_id="j1", mark=8.0,
              gymnast_country="AAA", judge_country="BBB",
              competition_id="C1", stage=Stage.QUALIFICATION,
              discipline=Discipline.ARTISTICS_M, apparatus="FX",
              gymnast_id=None, judge_role=JudgeRole.PANEL,
              mark_kind=MarkKind.EXECUTION):
    return MarkRecord(
        competition_id=competition_id,
        stage=stage,
        discipline=discipline,
        apparatus=apparatus,
        performance_id=performance_id,
        gymnast_id=gymnast_id or f"g_{performance_id}",
        gymnast_country=gymnast_country,
        judge_id=judge_id,
        judge_country=judge_country,
        judge_role=judge_role,
        mark_kind=mark_kind,
        mark=mark,
    )


def make_performance(performance_id, marks, **kwargs):
    """Performance from (judge_id, judge_country, mark) tuples or floats."""
    records = []
    for i, m in enumerate(marks):
        if isinstance(m, tuple):
            judge_id, judge_country, value = m
        else:
            judge_id, judge_country, value = f"j{i}", f"J{i:02d}X"[:3], m
        records.append(make_mark(performance_id=performance_id,
                                 judge_id=judge_id,
                                 judge_country=judge_country,
                                 mark=value, **kwargs))
    control = median(r.mark for r in records)
    return Performance(performance_id, control,
                       tuple(sorted(records, key=lambda r: r.judge_id)))


# ---------------------------------------------------------------------------
# Independent oracles


@functools.lru_cache(maxsize=8)
def _leggauss(nodes):
    s, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (s + 1.0), 0.5 * w


def t_sf_quadrature(t, df, nodes=800):
    """Two-sided Student-t tail probability by Gauss-Legendre quadrature.

    Integrates the density over [|t|, inf) with the substitution
    x = |t| + s/(1-s), independent of the incomplete-beta route.
    """
    t = abs(float(t))
    if t == 0.0:
        return 1.0
    ln_norm = (math.lgamma((df + 1) / 2.0) - math.lgamma(df / 2.0)
               - 0.5 * math.log(df * math.pi))

    def logpdf(x):
        return ln_norm - (df + 1) / 2.0 * np.log1p(x * x / df)

    s, w = _leggauss(nodes)
    x = t + s / (1.0 - s)
    jac = 1.0 / (1.0 - s) ** 2
    tail = float(np.sum(w * np.exp(logpdf(x)) * jac))
    return min(2.0 * tail, 1.0)


def wls_normal_equations(X, y, w):
    """Brute-force weighted normal equations with an explicit inverse.

    Returns (coefficients, standard errors) using the residual-variance
    scaled covariance.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 1 and X.shape[1] > 1 and np.asarray(y).size == X.shape[1]:
        X = X.T
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    W = np.diag(w)
    XtWX = X.T @ W @ X
    beta = np.linalg.inv(XtWX) @ (X.T @ W @ y)
    resid = y - X @ beta
    df = X.shape[0] - X.shape[1]
    s2 = float(resid @ (w * resid)) / df if df > 0 else 0.0
    cov = s2 * np.linalg.inv(XtWX)
    return beta, np.sqrt(np.diag(cov))


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
