"""
Score aggregation and ranking distortion from same-nationality marks.

Recomputes each event's aggregated scores and competition ranks twice,
with and without the marks given by same-nationality judges, and flags
events whose ranking (or podium) changes.
"""

import math
from dataclasses import dataclass
from enum import Enum

from .ingest import JudgeRole, Performance, event_key
from .stats import median

__all__ = [
    "ReferenceHandling",
    "AggregationRule",
    "GymnastStanding",
    "RankingOutcome",
    "PanelTooSmall",
    "aggregate",
    "competition_ranks",
    "ranking_impact",
]


class PanelTooSmall(ValueError):
    """Panel cannot support the configured trim after exclusions."""


class ReferenceHandling(Enum):
    AVERAGE_OF_REFERENCES = "average"
    NONE = "none"


@dataclass(frozen=True)
class AggregationRule:
    """Execution-panel aggregation procedure.

    ``panel_trim`` highest and lowest panel marks are dropped before
    averaging (or the median is taken with ``use_median``). Reference
    judges, when handled, are averaged separately and combined with the
    panel aggregate as (panel + ref_weight * reference) / (1 + ref_weight).
    """

    panel_trim: int = 1
    reference_handling: ReferenceHandling = ReferenceHandling.NONE
    use_median: bool = False
    ref_weight: float = 1.0


def _trimmed_mean(values, trim: int) -> float:
    vs = sorted(values)
    if trim > 0:
        vs = vs[trim:-trim]
    return math.fsum(vs) / len(vs)


def aggregate(performance: Performance, rule: AggregationRule,
              exclude_sn: bool = False) -> float:
    """Aggregate one performance's marks into a final score.

    With ``exclude_sn``, marks from judges sharing the gymnast's
    nationality are discarded first; if a discarded mark came from a
    reference judge, the reference average becomes the remaining
    reference judge's mark.
    """
    marks = list(performance.marks)
    if exclude_sn:
        marks = [m for m in marks
                 if m.judge_country != performance.gymnast_country]

    if rule.reference_handling is ReferenceHandling.AVERAGE_OF_REFERENCES:
        panel = [m.mark for m in marks if m.judge_role is JudgeRole.PANEL]
        refs = [m.mark for m in marks if m.judge_role is JudgeRole.REFERENCE]
    else:
        panel = [m.mark for m in marks]
        refs = []

    if rule.use_median:
        if not panel:
            raise PanelTooSmall(f"{performance.performance_id}: empty panel")
        panel_score = median(panel)
    else:
        if len(panel) < 2 * rule.panel_trim + 1:
            raise PanelTooSmall(
                f"{performance.performance_id}: panel size {len(panel)} "
                f"cannot support trim {rule.panel_trim}"
            )
        panel_score = _trimmed_mean(panel, rule.panel_trim)

    if refs:
        ref_score = math.fsum(refs) / len(refs)
        return (panel_score + rule.ref_weight * ref_score) / (1.0 + rule.ref_weight)
    return panel_score


def competition_ranks(scores: dict) -> dict:
    """Competition ("1224") ranks: equal scores share the smaller rank."""
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    ranks = {}
    for idx, (name, score) in enumerate(ordered):
        if idx > 0 and score == ordered[idx - 1][1]:
            ranks[name] = ranks[ordered[idx - 1][0]]
        else:
            ranks[name] = idx + 1
    return ranks


@dataclass(frozen=True)
class GymnastStanding:
    gymnast_id: str
    score_with_sn: float
    score_without_sn: float
    rank_with_sn: int
    rank_without_sn: int


@dataclass(frozen=True)
class RankingOutcome:
    event_key: tuple
    standings: tuple
    changed: bool
    podium_changed: bool
    incomplete: bool


def ranking_impact(performances, rule: AggregationRule) -> list:
    """Per-event score and rank comparison with vs without SN marks.

    A gymnast's event score is the sum of their aggregated performance
    scores within the event. Performances failing the panel-size
    precondition flag the event incomplete rather than aborting the run.
    Output is sorted by event key.
    """
    events: dict = {}
    for perf in performances:
        events.setdefault(event_key(perf), []).append(perf)

    outcomes = []
    for key in sorted(events, key=lambda k: (k[0], k[1].value, k[2])):
        with_sn: dict = {}
        without_sn: dict = {}
        incomplete = False
        for perf in events[key]:
            try:
                s_with = aggregate(perf, rule, exclude_sn=False)
                s_without = aggregate(perf, rule, exclude_sn=True)
            except PanelTooSmall:
                incomplete = True
                continue
            with_sn[perf.gymnast_id] = with_sn.get(perf.gymnast_id, 0.0) + s_with
            without_sn[perf.gymnast_id] = (
                without_sn.get(perf.gymnast_id, 0.0) + s_without
            )
        if not with_sn:
            outcomes.append(RankingOutcome(key, (), False, False, incomplete))
            continue
        ranks_with = competition_ranks(with_sn)
        ranks_without = competition_ranks(without_sn)
        standings = tuple(
            GymnastStanding(
                gymnast_id=g,
                score_with_sn=with_sn[g],
                score_without_sn=without_sn[g],
                rank_with_sn=ranks_with[g],
                rank_without_sn=ranks_without[g],
            )
            for g in sorted(with_sn)
        )
        changed = any(s.rank_with_sn != s.rank_without_sn for s in standings)
        podium_changed = any(
            s.rank_with_sn != s.rank_without_sn
            and (s.rank_with_sn <= 3 or s.rank_without_sn <= 3)
            for s in standings
        )
        outcomes.append(RankingOutcome(key, standings, changed, podium_changed,
                                       incomplete))
    return outcomes
