"""
panelbias: national bias of sports judges from panel-mark data.

The library models the heteroscedastic intrinsic judging error, estimates
same-nationality and direct-competitor bias coefficients via generalized
least squares, and measures the impact of biased marks on competition
rankings. A synthetic generator with known ground truth validates every
estimator.
"""

__version__ = "0.1.0"

from .bias import (
    BiasEstimate,
    RegressionRow,
    Scope,
    StageFilter,
    build_rows,
    estimate,
    estimate_by_group,
    weighted_ecdf,
)
from .ingest import (
    Discipline,
    JudgeRole,
    LabeledMark,
    MarkKind,
    MarkRecord,
    Performance,
    PreprocessConfig,
    Stage,
    label_marks,
    parse_dataset,
    preprocess,
)
from .pipeline import fit_sigma_models, judge_profiles, load_labeled
from .ranking import (
    AggregationRule,
    RankingOutcome,
    ReferenceHandling,
    aggregate,
    ranking_impact,
)
from .synth import DisciplineConfig, GeneratorConfig, JudgeSpec, generate
from .variability import (
    JudgeProfile,
    SigmaModel,
    evaluate_sigma,
    fit_sigma,
    marking_scores,
    sigma_group_key,
)

__all__ = [name for name in dir() if not name.startswith("_")]
