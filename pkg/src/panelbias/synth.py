"""
Synthetic competition generator with known ground truth.

Marks are drawn from the estimation model read forward:

    s = lam + (mu_j + b_sn * 1_SN + b_comp * 1_COMP) * sigma(lam) + eps,
    eps ~ Normal(0, sigma(lam)^2 * M_j^2),

rounded to the 0.1 grid and clamped to [0, 10]. All randomness is keyed
counter-based (seed, performance) streams, so output is bit-identical for
a given seed regardless of generation order. Same-nationality marks are
realized structurally (the gymnast receives the chosen judge's country),
so downstream labeling recovers exactly the injected assignments.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .ingest import CSV_COLUMNS, Discipline, Stage
from .stats import keyed_generator
from .variability import SIGMA_FLOOR

__all__ = [
    "JudgeSpec",
    "DisciplineConfig",
    "GeneratorConfig",
    "generate",
    "config_from_dict",
]

_TAG_PERF = 1
_TAG_SN = 2
_TAG_JUDGE = 3

# Variability curve shaped like men's artistic gymnastics: 0.31 at c=7.0
# falling to 0.09 at c=9.5, with the decline accelerating toward the top.
ARTISTICS_M_SIGMA = (0.48667698, -0.01994877, 0.31441367)

_DEFAULT_APPARATUS = {
    Discipline.ACROBATICS: ["PAIR"],
    Discipline.AEROBICS: ["IND"],
    Discipline.ARTISTICS_M: ["FX"],
    Discipline.ARTISTICS_F: ["BB"],
    Discipline.RHYTHMICS: ["BALL"],
    Discipline.TRAMPOLINE: ["TRI", "TUM"],
}


def _code(prefix_offset: int, i: int) -> str:
    # Deterministic 3-letter country codes, disjoint ranges for judges
    # and gymnasts.
    i += prefix_offset
    letters = []
    for _ in range(3):
        letters.append(chr(ord("A") + i % 26))
        i //= 26
    return "".join(reversed(letters))


@dataclass(frozen=True)
class JudgeSpec:
    judge_id: str
    country: str
    mu: float
    accuracy: float


@dataclass
class DisciplineConfig:
    discipline: Discipline
    n_performances: int
    panel_size: int = 5
    n_marks: int | None = None
    sn_rate: float = 0.03
    n_sn_marks: int | None = None
    comp_rate: float | None = None  # recorded; competitor marks arise from adjacency
    beta_sn: float = 0.0
    beta_comp: float = 0.0
    finals_share: float = 0.2
    finals_beta_sn: float | None = None
    finals_beta_comp: float | None = None
    sigma_alpha: float = 0.05
    sigma_beta: float = 120.0
    sigma_gamma: float = -0.9
    quality_mean: float = 8.5
    quality_sd: float = 0.6
    quality_bounds: tuple = (7.0, 9.8)
    n_judges: int | None = None
    n_judge_countries: int | None = None
    mu_sd: float = 0.1
    accuracy_range: tuple = (0.6, 1.5)
    qual_event_size: int = 24
    final_event_size: int = 8
    final_stage: Stage = Stage.ALL_AROUND_FINAL
    n_gymnast_countries: int = 30
    apparatus: list = field(default_factory=list)
    judges: list = field(default_factory=list)  # explicit JudgeSpecs

    def validate(self):
        if self.n_performances < 1:
            raise ValueError("n_performances must be >= 1")
        if not 0.0 <= self.sn_rate <= 1.0:
            raise ValueError("sn_rate must be in [0, 1]")
        if not 0.0 <= self.finals_share <= 1.0:
            raise ValueError("finals_share must be in [0, 1]")
        if self.panel_size < 4:
            raise ValueError("panel_size must be >= 4")
        if self.accuracy_range[0] <= 0.0:
            raise ValueError("accuracy factors must be > 0")
        lo, hi = self.quality_bounds
        if not lo < hi:
            raise ValueError("quality_bounds must be increasing")
        total = self.total_marks()
        base = total // self.n_performances
        if base < 4:
            raise ValueError("n_marks implies panels smaller than 4 judges")

    def total_marks(self) -> int:
        if self.n_marks is not None:
            return self.n_marks
        return self.n_performances * self.panel_size

    def total_sn(self) -> int:
        if self.n_sn_marks is not None:
            return self.n_sn_marks
        return round(self.sn_rate * self.total_marks())

    def sigma(self, c: float) -> float:
        raw = self.sigma_alpha + self.sigma_beta * math.exp(self.sigma_gamma * c)
        return max(raw, SIGMA_FLOOR)


@dataclass
class GeneratorConfig:
    seed: int
    disciplines: list

    def validate(self):
        if not self.disciplines:
            raise ValueError("no disciplines configured")
        seen = set()
        for dc in self.disciplines:
            if dc.discipline in seen:
                raise ValueError(f"duplicate discipline {dc.discipline.value}")
            seen.add(dc.discipline)
            dc.validate()


def config_from_dict(data: dict) -> GeneratorConfig:
    """Build a GeneratorConfig from a parsed TOML/JSON mapping."""
    disciplines = []
    for entry in data.get("discipline", []):
        entry = dict(entry)
        disc = Discipline(entry.pop("name"))
        kwargs = {}
        for key in ("n_performances", "panel_size", "n_marks", "sn_rate",
                    "n_sn_marks", "comp_rate", "beta_sn", "beta_comp",
                    "finals_share", "finals_beta_sn", "finals_beta_comp",
                    "sigma_alpha", "sigma_beta", "sigma_gamma",
                    "quality_mean", "quality_sd", "n_judges",
                    "n_judge_countries", "mu_sd", "qual_event_size",
                    "final_event_size", "n_gymnast_countries", "apparatus"):
            if key in entry:
                kwargs[key] = entry.pop(key)
        if "quality_bounds" in entry:
            kwargs["quality_bounds"] = tuple(entry.pop("quality_bounds"))
        if "accuracy_range" in entry:
            kwargs["accuracy_range"] = tuple(entry.pop("accuracy_range"))
        if "final_stage" in entry:
            kwargs["final_stage"] = Stage(entry.pop("final_stage"))
        if "judges" in entry:
            kwargs["judges"] = [
                JudgeSpec(j["id"], j["country"], float(j["mu"]),
                          float(j["accuracy"]))
                for j in entry.pop("judges")
            ]
        if entry:
            raise ValueError(f"unknown discipline config keys: {sorted(entry)}")
        disciplines.append(DisciplineConfig(discipline=disc, **kwargs))
    return GeneratorConfig(seed=int(data.get("seed", 0)), disciplines=disciplines)


def _make_judges(cfg: DisciplineConfig, seed: int, disc_idx: int,
                 max_panel: int) -> list:
    if cfg.judges:
        if len({j.country for j in cfg.judges}) < max_panel:
            raise ValueError("explicit judge pool has too few distinct countries")
        return list(cfg.judges)
    n_countries = cfg.n_judge_countries or max(12, max_panel)
    if n_countries < max_panel:
        raise ValueError("n_judge_countries must be >= the largest panel")
    n_judges = cfg.n_judges or 3 * n_countries
    n_judges = ((n_judges + n_countries - 1) // n_countries) * n_countries
    gen = keyed_generator(seed, _TAG_JUDGE, disc_idx)
    mus = gen.standard_normal(n_judges) * cfg.mu_sd
    lo, hi = cfg.accuracy_range
    accs = lo + gen.random(n_judges) * (hi - lo)
    return [
        JudgeSpec(
            judge_id=f"{cfg.discipline.value}J{i:03d}",
            country=_code(0, i % n_countries),
            mu=float(mus[i]),
            accuracy=float(accs[i]),
        )
        for i in range(n_judges)
    ]


def _truncated_normal(gen, mean, sd, lo, hi) -> float:
    for _ in range(1000):
        draws = mean + sd * gen.standard_normal(16)
        inside = draws[(draws >= lo) & (draws <= hi)]
        if inside.size:
            return float(inside[0])
    raise RuntimeError("truncated normal rejection failed; bounds too tight")


@dataclass
class _Routine:
    perf_idx: int
    event: tuple  # (competition_id, stage, apparatus)
    panel_size: int
    lam: float = 0.0
    gymnast_country: str = ""
    sn_slot: int | None = None
    comp_slots: tuple = ()


def _plan_routines(cfg: DisciplineConfig, base: int, rem: int) -> list:
    """Lay out routines into events with unique (competition, stage, apparatus)."""
    apps = cfg.apparatus or _DEFAULT_APPARATUS[cfg.discipline]
    n = cfg.n_performances
    n_finals = round(cfg.finals_share * n)
    n_quals = n - n_finals

    routines = []
    prev_quota = 0

    def panel_size_for(idx):
        nonlocal prev_quota
        quota = ((idx + 1) * rem) // n
        extra = quota - prev_quota
        prev_quota = quota
        return base + extra

    def add_block(count, stage, event_size, event_offset):
        idx0 = len(routines)
        n_events = (count + event_size - 1) // event_size
        for e in range(n_events):
            comp = f"{cfg.discipline.value}-{stage.value}-C{(e // len(apps)):03d}"
            app = apps[e % len(apps)]
            for i in range(e * event_size, min((e + 1) * event_size, count)):
                idx = idx0 + i
                routines.append(
                    _Routine(perf_idx=idx, event=(comp, stage, app),
                             panel_size=panel_size_for(idx))
                )
        return n_events

    add_block(n_quals, Stage.QUALIFICATION, cfg.qual_event_size, 0)
    add_block(n_finals, cfg.final_stage, cfg.final_event_size, 0)
    return routines


def generate(config: GeneratorConfig):
    """Generate a mark CSV plus a ground-truth record.

    Returns (csv_bytes, truth_dict). The same config yields byte-identical
    output on every run.
    """
    config.validate()
    seed = config.seed
    lines = [",".join(CSV_COLUMNS)]
    truth = {"seed": seed, "disciplines": {}}

    for disc_idx, cfg in enumerate(config.disciplines):
        n = cfg.n_performances
        total_marks = cfg.total_marks()
        base, rem = divmod(total_marks, n)
        max_panel = base + (1 if rem else 0)
        judges = _make_judges(cfg, seed, disc_idx, max_panel)
        n_judges = len(judges)

        routines = _plan_routines(cfg, base, rem)

        # Same-nationality selection: rank performances by a keyed uniform
        # and take the required count; a second uniform picks the judge
        # slot (always below `base` so the judge is on every panel variant).
        n_sn = cfg.total_sn()
        if n_sn > n:
            raise ValueError("cannot place more than one SN mark per routine")
        ranked = []
        slots = {}
        for r in routines:
            u = keyed_generator(seed, _TAG_SN, disc_idx, r.perf_idx).random(2)
            ranked.append((float(u[0]), r.perf_idx))
            slots[r.perf_idx] = int(u[1] * base)
        ranked.sort()
        sn_perfs = {idx for _, idx in ranked[:n_sn]}

        # Event panels: a deterministic rotating slice of the judge pool.
        events: dict = {}
        for r in routines:
            events.setdefault(r.event, []).append(r)
        event_panels = {}
        for e_idx, key in enumerate(sorted(events, key=lambda k: (k[1].value, k[0], k[2]))):
            start = (e_idx * 7) % n_judges
            event_panels[key] = [judges[(start + i) % n_judges]
                                 for i in range(max_panel)]

        # Draw qualities and assign countries.
        lo, hi = cfg.quality_bounds
        for r in routines:
            gen = keyed_generator(seed, _TAG_PERF, disc_idx, r.perf_idx)
            r.lam = _truncated_normal(gen, cfg.quality_mean, cfg.quality_sd, lo, hi)
            u_country = gen.random()
            panel = event_panels[r.event]
            if r.perf_idx in sn_perfs:
                r.sn_slot = slots[r.perf_idx]
                r.gymnast_country = panel[r.sn_slot].country
            else:
                r.gymnast_country = _code(
                    2600, int(u_country * cfg.n_gymnast_countries)
                )

        # Direct competitors: within each event, the routines adjacent (by
        # true quality) to an SN routine are penalized by that SN judge.
        for key, event_routines in events.items():
            ordered = sorted(event_routines, key=lambda r: -r.lam)
            for pos, r in enumerate(ordered):
                if r.sn_slot is None:
                    continue
                for nb in (pos - 1, pos + 1):
                    if 0 <= nb < len(ordered):
                        other = ordered[nb]
                        # the SN judge's own gymnast is not a competitor
                        if other.sn_slot != r.sn_slot:
                            other.comp_slots = tuple(
                                sorted(set(other.comp_slots) | {r.sn_slot})
                            )

        # Emit marks.
        disc_truth_perfs = []
        realized_sn = 0
        realized_comp = 0
        for r in routines:
            panel = event_panels[r.event][: r.panel_size]
            is_final = r.event[1] is not Stage.QUALIFICATION
            b_sn = (cfg.finals_beta_sn if is_final and cfg.finals_beta_sn is not None
                    else cfg.beta_sn)
            b_comp = (cfg.finals_beta_comp
                      if is_final and cfg.finals_beta_comp is not None
                      else cfg.beta_comp)
            sigma = cfg.sigma(r.lam)
            gen = keyed_generator(seed, _TAG_PERF, disc_idx, r.perf_idx, 1)
            noise = gen.standard_normal(r.panel_size)
            perf_id = f"{cfg.discipline.value}P{r.perf_idx:05d}"
            gymnast_id = f"{cfg.discipline.value}G{r.perf_idx:05d}"
            sn_flags, comp_flags, marks_out = [], [], []
            for slot, judge in enumerate(panel):
                sn = slot == r.sn_slot
                comp = slot in r.comp_slots
                value = (
                    r.lam
                    + (judge.mu + b_sn * sn + b_comp * comp) * sigma
                    + sigma * judge.accuracy * noise[slot]
                )
                mark = min(10.0, max(0.0, float(np.rint(value * 10.0)) / 10.0))
                role = "Panel"
                lines.append(",".join([
                    r.event[0], r.event[1].value, cfg.discipline.value,
                    r.event[2], perf_id, gymnast_id, r.gymnast_country,
                    judge.judge_id, judge.country, role, "Execution",
                    f"{mark:.1f}",
                ]))
                sn_flags.append(sn)
                comp_flags.append(comp)
                marks_out.append(mark)
                realized_sn += sn
                realized_comp += comp
            disc_truth_perfs.append({
                "performance_id": perf_id,
                "gymnast_id": gymnast_id,
                "competition_id": r.event[0],
                "stage": r.event[1].value,
                "apparatus": r.event[2],
                "gymnast_country": r.gymnast_country,
                "lambda": r.lam,
                "panel": [j.judge_id for j in panel],
                "sn": sn_flags,
                "comp": comp_flags,
                "marks": marks_out,
            })

        truth["disciplines"][cfg.discipline.value] = {
            "beta_sn": cfg.beta_sn,
            "beta_comp": cfg.beta_comp,
            "finals_beta_sn": cfg.finals_beta_sn,
            "finals_beta_comp": cfg.finals_beta_comp,
            "sigma": {"alpha": cfg.sigma_alpha, "beta": cfg.sigma_beta,
                      "gamma": cfg.sigma_gamma},
            "quality": {"mean": cfg.quality_mean, "sd": cfg.quality_sd,
                        "bounds": list(cfg.quality_bounds),
                        "distribution": "truncated_normal"},
            "requested": {"n_performances": n, "n_marks": total_marks,
                          "n_sn_marks": n_sn, "comp_rate": cfg.comp_rate},
            "realized": {"n_sn_marks": realized_sn,
                         "n_comp_marks": realized_comp},
            "judges": [
                {"judge_id": j.judge_id, "country": j.country,
                 "mu": j.mu, "accuracy": j.accuracy}
                for j in judges
            ],
            "performances": disc_truth_perfs,
        }

    csv_bytes = ("\n".join(lines) + "\n").encode("utf-8")
    return csv_bytes, truth
