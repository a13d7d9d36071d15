"""
Parsing, preprocessing and labeling of raw competition mark data.

Input is a flat CSV of individual judge marks. Preprocessing groups marks
into performances, merges reference judges into the panel, drops noisy
low-median routines, and computes the panel-median control score. Labeling
flags same-nationality marks and marks given to direct competitors of a
judge's compatriots.
"""

import csv
import io
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .stats import median

__all__ = [
    "Stage",
    "Discipline",
    "JudgeRole",
    "MarkKind",
    "MarkRecord",
    "Performance",
    "LabeledMark",
    "PreprocessConfig",
    "ParseError",
    "CSV_COLUMNS",
    "parse_dataset",
    "preprocess",
    "label_marks",
    "event_key",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "competition_id",
    "stage",
    "discipline",
    "apparatus",
    "performance_id",
    "gymnast_id",
    "gymnast_country",
    "judge_id",
    "judge_country",
    "judge_role",
    "mark_kind",
    "mark",
]

# Synchronized trampoline panels are too small to analyze; rows with this
# apparatus token are dropped in preprocessing.
SYNCHRO_APPARATUS = "SYN"


class ParseError(ValueError):
    """Malformed input data; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Stage(Enum):
    QUALIFICATION = "QUAL"
    APPARATUS_FINAL = "AF"
    ALL_AROUND_FINAL = "AAF"

    @property
    def is_final(self) -> bool:
        return self is not Stage.QUALIFICATION


class Discipline(Enum):
    ACROBATICS = "ACRO"
    AEROBICS = "AERO"
    ARTISTICS_M = "ARTM"
    ARTISTICS_F = "ARTF"
    RHYTHMICS = "RHY"
    TRAMPOLINE = "TRA"


class JudgeRole(Enum):
    PANEL = "Panel"
    REFERENCE = "Reference"


class MarkKind(Enum):
    EXECUTION = "Execution"
    ARTISTRY = "Artistry"


@dataclass(frozen=True)
class MarkRecord:
    """One judge's raw mark for one performance."""

    competition_id: str
    stage: Stage
    discipline: Discipline
    apparatus: str
    performance_id: str
    gymnast_id: str
    gymnast_country: str
    judge_id: str
    judge_country: str
    judge_role: JudgeRole
    mark_kind: MarkKind
    mark: float


@dataclass(frozen=True)
class Performance:
    """All marks for one routine plus its panel-median control score."""

    performance_id: str
    control_score: float
    marks: tuple

    @property
    def competition_id(self) -> str:
        return self.marks[0].competition_id

    @property
    def stage(self) -> Stage:
        return self.marks[0].stage

    @property
    def discipline(self) -> Discipline:
        return self.marks[0].discipline

    @property
    def apparatus(self) -> str:
        return self.marks[0].apparatus

    @property
    def gymnast_id(self) -> str:
        return self.marks[0].gymnast_id

    @property
    def gymnast_country(self) -> str:
        return self.marks[0].gymnast_country


@dataclass(frozen=True)
class LabeledMark:
    """A mark with nationality labels and its performance's control score."""

    base: MarkRecord
    is_same_nationality: bool
    is_direct_competitor: bool
    control_score: float


@dataclass(frozen=True)
class PreprocessConfig:
    min_median: float = 7.0
    min_panel: int = 4
    exclude_sn_from_profiles: bool = False

    @classmethod
    def from_file(cls, path) -> "PreprocessConfig":
        """Read a flat key=value config file."""
        values = {}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key] = val
        kwargs = {}
        if "min_median" in values:
            kwargs["min_median"] = float(values.pop("min_median"))
        if "min_panel" in values:
            kwargs["min_panel"] = int(values.pop("min_panel"))
        if "exclude_sn_from_profiles" in values:
            raw_val = values.pop("exclude_sn_from_profiles").lower()
            kwargs["exclude_sn_from_profiles"] = raw_val in ("true", "1", "yes")
        if values:
            raise ValueError(f"unknown config keys: {sorted(values)}")
        return cls(**kwargs)


def _parse_mark(text: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(line, f"mark {text!r} is not a number") from None
    if not 0.0 <= value <= 10.0:
        raise ParseError(line, f"mark {value} outside [0, 10]")
    tenths = value * 10.0
    if abs(tenths - round(tenths)) > 1e-6:
        raise ParseError(line, f"mark {value} not at 0.1 granularity")
    return round(tenths) / 10.0


def _parse_country(text: str, line: int, field: str) -> str:
    if len(text) != 3 or not text.isalpha() or not text.isupper():
        raise ParseError(line, f"{field} {text!r} is not a 3-letter country code")
    return text


def _parse_enum(enum_cls, text: str, line: int, field: str):
    for member in enum_cls:
        if member.value == text:
            return member
    allowed = "|".join(m.value for m in enum_cls)
    raise ParseError(line, f"unknown {field} {text!r} (expected {allowed})")


def parse_dataset(source) -> list:
    """Parse a mark CSV into MarkRecords, preserving input row order.

    ``source`` may be a path, a text or binary file object, or bytes.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, io.TextIOBase):
        text = source.read()
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, "empty input") from None
    if header != CSV_COLUMNS:
        raise ParseError(1, f"bad header {header!r}")

    records = []
    seen = set()
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise ParseError(line, f"expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        (comp, stage, disc, app, perf, gym, gym_nat,
         judge, judge_nat, role, kind, mark) = row
        record = MarkRecord(
            competition_id=comp,
            stage=_parse_enum(Stage, stage, line, "stage"),
            discipline=_parse_enum(Discipline, disc, line, "discipline"),
            apparatus=app,
            performance_id=perf,
            gymnast_id=gym,
            gymnast_country=_parse_country(gym_nat, line, "gymnast_country"),
            judge_id=judge,
            judge_country=_parse_country(judge_nat, line, "judge_country"),
            judge_role=_parse_enum(JudgeRole, role, line, "judge_role"),
            mark_kind=_parse_enum(MarkKind, kind, line, "mark_kind"),
            mark=_parse_mark(mark, line),
        )
        key = (record.performance_id, record.judge_id)
        if key in seen:
            raise ParseError(line, f"duplicate (performance_id, judge_id) {key}")
        seen.add(key)
        records.append(record)
    return records


def preprocess(records, config: PreprocessConfig = PreprocessConfig()) -> list:
    """Group marks into performances and apply the quality filters.

    Reference judges are merged into the panel. Synchronized-trampoline
    rows are excluded. Performances with fewer than ``min_panel`` marks or
    a panel median below ``min_median`` are dropped (the former logged).
    Output is sorted by performance_id.
    """
    if not records:
        raise ValueError("no records to preprocess")

    groups: dict = {}
    for rec in records:
        if rec.apparatus == SYNCHRO_APPARATUS:
            continue
        groups.setdefault(rec.performance_id, []).append(rec)

    performances = []
    for perf_id in sorted(groups):
        marks = groups[perf_id]
        first = marks[0]
        for other in marks[1:]:
            for field in ("competition_id", "stage", "discipline", "apparatus",
                          "gymnast_id", "gymnast_country"):
                if getattr(other, field) != getattr(first, field):
                    raise ValueError(
                        f"performance {perf_id}: inconsistent {field} across marks"
                    )
        if len(marks) < config.min_panel:
            log.info("dropping %s: panel size %d < %d",
                     perf_id, len(marks), config.min_panel)
            continue
        control = median(m.mark for m in marks)
        if control < config.min_median:
            continue
        ordered = tuple(sorted(marks, key=lambda m: m.judge_id))
        performances.append(Performance(perf_id, control, ordered))
    return performances


def event_key(perf: Performance) -> tuple:
    """Group key within which gymnasts are ranked against each other."""
    return (perf.competition_id, perf.stage, perf.apparatus)


def _adjacent_scores(scores: list, own: float) -> set:
    """Scores of the distinct-score groups immediately above and below."""
    distinct = sorted(set(scores), reverse=True)
    idx = distinct.index(own)
    adjacent = set()
    if idx > 0:
        adjacent.add(distinct[idx - 1])
    if idx + 1 < len(distinct):
        adjacent.add(distinct[idx + 1])
    return adjacent


def label_marks(performances) -> list:
    """Attach same-nationality and direct-competitor labels to every mark.

    Direct competitors of a judge are the gymnasts ranked (by control
    score, within the same competition/stage/apparatus group) immediately
    ahead of or behind a gymnast of the judge's own nationality. Ties can
    yield more than two direct competitors. Output is sorted by
    (performance_id, judge_id).
    """
    events: dict = {}
    for perf in performances:
        events.setdefault(event_key(perf), []).append(perf)

    labeled = []
    for perfs in events.values():
        scores = [p.control_score for p in perfs]
        # competitor score levels per country: scores adjacent to any
        # gymnast of that country
        by_country: dict = {}
        for p in perfs:
            by_country.setdefault(p.gymnast_country, []).append(p)
        competitor_scores = {
            country: set().union(
                *(_adjacent_scores(scores, p.control_score) for p in plist)
            )
            for country, plist in by_country.items()
        }
        for perf in perfs:
            for mark in perf.marks:
                sn = mark.judge_country == perf.gymnast_country
                comp = (
                    not sn
                    and perf.control_score
                    in competitor_scores.get(mark.judge_country, ())
                )
                labeled.append(
                    LabeledMark(
                        base=mark,
                        is_same_nationality=sn,
                        is_direct_competitor=comp,
                        control_score=perf.control_score,
                    )
                )
    labeled.sort(key=lambda lm: (lm.base.performance_id, lm.base.judge_id))
    return labeled
