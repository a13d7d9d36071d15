"""
Convenience wrappers chaining ingest -> variability -> bias.

These are the same steps the command line runs; they are exposed here so
scripts and tests can drive the pipeline directly.
"""

from .ingest import PreprocessConfig, label_marks, parse_dataset, preprocess
from .variability import fit_sigma, marking_scores, sigma_group_key

__all__ = ["load_labeled", "fit_sigma_models", "judge_profiles"]


def load_labeled(source, config: PreprocessConfig = PreprocessConfig()):
    """Parse, preprocess and label a mark CSV.

    Returns (performances, labeled_marks).
    """
    records = parse_dataset(source)
    performances = preprocess(records, config)
    return performances, label_marks(performances)


def _group_marks(labeled):
    groups: dict = {}
    for m in labeled:
        groups.setdefault(sigma_group_key(m.base), []).append(m)
    return groups


def fit_sigma_models(labeled) -> dict:
    """Fit one variability curve per discipline/apparatus group."""
    return {
        key: fit_sigma(marks, key)
        for key, marks in sorted(
            _group_marks(labeled).items(),
            key=lambda kv: (kv[0][0].value, kv[0][1] or ""),
        )
    }


def judge_profiles(labeled, models, exclude_sn: bool = False) -> dict:
    """Marking scores for every judge, keyed by (sigma group, judge_id)."""
    profiles = {}
    for key, marks in _group_marks(labeled).items():
        for prof in marking_scores(marks, models[key], exclude_sn=exclude_sn):
            profiles[(key, prof.judge_id)] = prof
    return profiles
