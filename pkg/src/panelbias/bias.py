"""
National-bias estimation via generalized least squares.

The response is the judging error corrected for the judge's tendency,
d = s - c - mu_hat * sigma(c). Same-nationality and direct-competitor
indicators enter scaled by sigma(c), so the coefficients express the bias
as a multiple of the intrinsic judging error variability. With the known
diagonal error covariance sigma(c)^2 * M^2, GLS reduces to weighted least
squares without an intercept.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ingest import Stage, event_key
from .stats import wls_solve, t_sf, t_ppf
from .variability import evaluate_sigma, sigma_group_key

__all__ = [
    "M_FLOOR",
    "Scope",
    "StageFilter",
    "NoTreatedObservations",
    "RegressionRow",
    "BiasEstimate",
    "build_rows",
    "estimate",
    "estimate_by_group",
    "top8_filter",
    "weighted_ecdf",
]

log = logging.getLogger(__name__)

# Judges whose marking score is below this floor would get near-infinite
# GLS weight; their variance is computed with the floor instead.
M_FLOOR = 0.1

# Nation/judge estimates with fewer same-nationality marks than this are
# still computed but flagged low_support.
MIN_SN_SUPPORT = 3


class Scope(Enum):
    DISCIPLINE = "discipline"
    NATION = "nation"
    JUDGE = "judge"


class StageFilter(Enum):
    ALL_GYMNASTS = "all"
    TOP8_FINALISTS = "finals"


class NoTreatedObservations(ValueError):
    """No row with a nonzero same-nationality regressor."""


@dataclass(frozen=True)
class RegressionRow:
    d_pj: float
    x_sn: float
    x_comp: float
    variance: float
    judge_id: str
    performance_id: str


@dataclass(frozen=True)
class BiasEstimate:
    scope: Scope
    key: tuple
    stage_filter: "StageFilter"
    beta_sn: float
    se_sn: float
    t_sn: float
    p_sn: float
    ci95_sn: tuple
    beta_comp: float | None
    se_comp: float | None
    t_comp: float | None
    p_comp: float | None
    n_obs: int
    n_sn_marks: int
    low_support: bool


def build_rows(marks, model, profiles) -> list:
    """Turn labeled marks into regression rows for one sigma group.

    ``profiles`` maps judge_id -> JudgeProfile (or is a list of them).
    """
    if not isinstance(profiles, dict):
        profiles = {p.judge_id: p for p in profiles}
    rows = []
    for m in marks:
        prof = profiles[m.base.judge_id]
        sigma = evaluate_sigma(model, m.control_score)
        d = m.base.mark - m.control_score - prof.mu_hat * sigma
        accuracy = max(prof.marking_score, M_FLOOR)
        rows.append(
            RegressionRow(
                d_pj=d,
                x_sn=sigma if m.is_same_nationality else 0.0,
                x_comp=sigma if m.is_direct_competitor else 0.0,
                variance=sigma * sigma * accuracy * accuracy,
                judge_id=m.base.judge_id,
                performance_id=m.base.performance_id,
            )
        )
    return rows


def estimate(rows, include_comp: bool, scope: Scope = Scope.DISCIPLINE,
             key: tuple = (), stage_filter: StageFilter = StageFilter.ALL_GYMNASTS,
             ) -> BiasEstimate:
    """Weighted least squares on the regression rows, with t inference."""
    n_sn = sum(1 for r in rows if r.x_sn != 0.0)
    if n_sn == 0:
        raise NoTreatedObservations(f"group {key}: no same-nationality rows")
    if include_comp and not any(r.x_comp != 0.0 for r in rows):
        raise NoTreatedObservations(f"group {key}: no direct-competitor rows")

    y = np.array([r.d_pj for r in rows])
    w = 1.0 / np.array([r.variance for r in rows])
    if include_comp:
        X = np.array([[r.x_sn, r.x_comp] for r in rows])
    else:
        X = np.array([[r.x_sn] for r in rows])
    sol = wls_solve(X, y, w)
    se = sol.standard_errors
    df = sol.residual_df

    def infer(b, s):
        if s > 0.0:
            t = b / s
            p = t_sf(t, df)
        else:
            t = math.inf if b > 0 else (-math.inf if b < 0 else 0.0)
            p = 0.0 if b != 0.0 else 1.0
        return t, p

    beta_sn = float(sol.coefficients[0])
    se_sn = float(se[0])
    t_sn, p_sn = infer(beta_sn, se_sn)
    crit = t_ppf(0.975, df) if df > 0 else math.inf
    ci = (beta_sn - crit * se_sn, beta_sn + crit * se_sn)

    if include_comp:
        beta_comp = float(sol.coefficients[1])
        se_comp = float(se[1])
        t_comp, p_comp = infer(beta_comp, se_comp)
    else:
        beta_comp = se_comp = t_comp = p_comp = None

    return BiasEstimate(
        scope=scope,
        key=tuple(key),
        stage_filter=stage_filter,
        beta_sn=beta_sn,
        se_sn=se_sn,
        t_sn=t_sn,
        p_sn=p_sn,
        ci95_sn=ci,
        beta_comp=beta_comp,
        se_comp=se_comp,
        t_comp=t_comp,
        p_comp=p_comp,
        n_obs=len(rows),
        n_sn_marks=n_sn,
        low_support=n_sn < MIN_SN_SUPPORT,
    )


def top8_filter(marks) -> list:
    """Keep final-stage marks of gymnasts ranked top 8 within their final.

    Ranking is by control score within (competition, stage, apparatus);
    ties at rank 8 include all tied gymnasts.
    """
    finals = [m for m in marks if m.base.stage is not Stage.QUALIFICATION]
    events: dict = {}
    for m in finals:
        events.setdefault(event_key(m.base), {})[
            (m.base.gymnast_id, m.base.performance_id)
        ] = m.control_score
    cutoffs = {}
    for key, gymnasts in events.items():
        best_by_gymnast: dict = {}
        for (gym, _), score in gymnasts.items():
            best_by_gymnast[gym] = max(best_by_gymnast.get(gym, -math.inf), score)
        scores = sorted(best_by_gymnast.values(), reverse=True)
        cutoffs[key] = scores[7] if len(scores) > 8 else -math.inf
    kept = []
    for m in finals:
        key = event_key(m.base)
        if m.control_score >= cutoffs[key]:
            kept.append(m)
    return kept


def _stage_subset(marks, stage_filter: StageFilter) -> list:
    if stage_filter is StageFilter.TOP8_FINALISTS:
        return top8_filter(marks)
    return list(marks)


def estimate_by_group(marks, models, profiles, scope: Scope,
                      stage_filter: StageFilter = StageFilter.ALL_GYMNASTS,
                      ) -> list:
    """Estimate bias per discipline, nation or judge.

    ``models`` maps sigma group key -> SigmaModel and ``profiles`` maps
    (sigma group key, judge_id) -> JudgeProfile. Discipline scope includes
    the direct-competitor coefficient; nation and judge scopes drop it.
    Groups failing preconditions are skipped with a logged reason.
    """
    subset = _stage_subset(marks, stage_filter)

    # Rows are built per sigma group, then pooled under the scope key.
    grouped: dict = {}
    for m in subset:
        grouped.setdefault(sigma_group_key(m.base), []).append(m)

    all_rows: dict = {}  # scope key -> rows
    for sg_key, group_marks in sorted(grouped.items(),
                                      key=lambda kv: (kv[0][0].value, kv[0][1] or "")):
        model = models[sg_key]
        prof_map = {jid: p for (gk, jid), p in profiles.items() if gk == sg_key}
        by_mark = build_rows(group_marks, model, prof_map)
        for m, row in zip(group_marks, by_mark):
            disc = m.base.discipline
            if scope is Scope.DISCIPLINE:
                key = (disc.value,)
            elif scope is Scope.NATION:
                key = (disc.value, m.base.judge_country)
            else:
                key = (disc.value, m.base.judge_id)
            all_rows.setdefault(key, []).append(row)

    include_comp = scope is Scope.DISCIPLINE
    estimates = []
    for key in sorted(all_rows):
        try:
            estimates.append(
                estimate(all_rows[key], include_comp, scope, key, stage_filter)
            )
        except (NoTreatedObservations, ValueError) as exc:
            log.info("skipping %s group %s: %s", scope.value, key, exc)
    return estimates


def weighted_ecdf(estimates) -> list:
    """wECDF of the same-nationality coefficients, weighted by SN mark count.

    Returns (x, F) step points over the sorted distinct beta_sn values;
    F is non-decreasing and reaches 1 at the largest value. All-zero
    weights fall back to uniform weighting.
    """
    if not estimates:
        raise ValueError("no estimates for wECDF")
    pairs = sorted((e.beta_sn, float(e.n_sn_marks)) for e in estimates)
    total = math.fsum(wt for _, wt in pairs)
    if total == 0.0:
        pairs = [(x, 1.0) for x, _ in pairs]
        total = float(len(pairs))
    points = []
    acc = 0.0
    for x, wt in pairs:
        acc += wt
        if points and points[-1][0] == x:
            points[-1] = (x, acc / total)
        else:
            points.append((x, acc / total))
    return points
