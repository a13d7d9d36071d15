"""
Command-line front end: simulate, fit-sigma, marking-scores,
estimate-bias, ranking-impact, report.

Each stage reads and writes flat CSV (plus JSON for ground truth), so
stages are independently scriptable. Every run writes a manifest.json
next to its outputs recording inputs, outputs, seed and input digests;
identical manifests imply byte-identical outputs.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bias import Scope, StageFilter, estimate_by_group, weighted_ecdf
from .ingest import ParseError, PreprocessConfig
from .pipeline import fit_sigma_models, judge_profiles, load_labeled
from .ranking import AggregationRule, ReferenceHandling, ranking_impact
from .svgplot import bias_scatter_svg, forest_svg, sigma_curves_svg
from .synth import config_from_dict, generate

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("panelbias")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(subcommand, inputs, outputs, seed=None, config=None):
    out_dirs = {Path(p).resolve().parent for p in outputs}
    manifest = {
        "tool": "panel-bias",
        "version": __version__,
        "subcommand": subcommand,
        "config": str(config) if config else None,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(Path(p)) for p in outputs],
        "seed": seed,
    }
    for d in out_dirs:
        (d / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _preprocess_config(args) -> PreprocessConfig:
    path = getattr(args, "config", None) or os.environ.get("PANEL_BIAS_CONFIG")
    if path and Path(path).suffix != ".toml":
        return PreprocessConfig.from_file(path)
    if path:
        return PreprocessConfig.from_file(path)
    return PreprocessConfig()


def _cmd_simulate(args) -> int:
    with open(args.config, "rb") as fh:
        data = tomllib.load(fh)
    if args.seed is not None:
        data["seed"] = args.seed
    config = config_from_dict(data)
    csv_bytes, truth = generate(config)
    Path(args.out).write_bytes(csv_bytes)
    Path(args.truth).write_text(
        json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_manifest("simulate", [args.config], [args.out, args.truth],
                    seed=config.seed, config=args.config)
    return 0


def _group_label(key) -> str:
    disc, apparatus = key
    return disc.value + (f"/{apparatus}" if apparatus else "")


def _cmd_fit_sigma(args) -> int:
    _, labeled = load_labeled(args.infile, _preprocess_config(args))
    models = fit_sigma_models(labeled)
    rows = [
        (_group_label(key), m.alpha, m.beta, m.gamma, m.c_min, m.c_max,
         m.weighted_rmse)
        for key, m in models.items()
    ]
    _write_csv(args.out, ["group", "alpha", "beta", "gamma", "c_min", "c_max",
                          "weighted_rmse"], rows)
    outputs = [args.out]
    if args.plot:
        Path(args.plot).write_text(sigma_curves_svg(list(models.values())),
                                   encoding="utf-8")
        outputs.append(args.plot)
    _write_manifest("fit-sigma", [args.infile], outputs)
    return 0


def _cmd_marking_scores(args) -> int:
    config = _preprocess_config(args)
    _, labeled = load_labeled(args.infile, config)
    models = fit_sigma_models(labeled)
    profiles = judge_profiles(labeled, models,
                              exclude_sn=config.exclude_sn_from_profiles)
    rows = [
        (_group_label(key), prof.judge_id, prof.mu_hat, prof.marking_score,
         prof.n_marks)
        for (key, _), prof in sorted(
            profiles.items(), key=lambda kv: (kv[0][0][0].value,
                                              kv[0][0][1] or "", kv[0][1])
        )
    ]
    _write_csv(args.out, ["group", "judge_id", "mu_hat", "marking_score",
                          "n_marks"], rows)
    _write_manifest("marking-scores", [args.infile], [args.out])
    return 0


def _estimate_rows(estimates):
    for e in estimates:
        yield (
            e.scope.value, "/".join(str(k) for k in e.key),
            e.stage_filter.value, e.beta_sn, e.se_sn, e.t_sn, e.p_sn,
            e.ci95_sn[0], e.ci95_sn[1], e.beta_comp, e.se_comp, e.t_comp,
            e.p_comp, e.n_obs, e.n_sn_marks,
        )


_ESTIMATE_HEADER = ["scope", "key", "stage", "beta_sn", "se_sn", "t_sn",
                    "p_sn", "ci_lo", "ci_hi", "beta_comp", "se_comp",
                    "t_comp", "p_comp", "n_obs", "n_sn_marks"]


def _cmd_estimate_bias(args) -> int:
    config = _preprocess_config(args)
    _, labeled = load_labeled(args.infile, config)
    models = fit_sigma_models(labeled)
    profiles = judge_profiles(labeled, models,
                              exclude_sn=config.exclude_sn_from_profiles)
    estimates = estimate_by_group(
        labeled, models, profiles,
        scope=Scope(args.scope),
        stage_filter=StageFilter(args.stage),
    )
    estimates = [e for e in estimates if e.n_sn_marks >= args.min_sn_marks]
    if not estimates:
        print("no groups with enough same-nationality marks", file=sys.stderr)
        return 1
    _write_csv(args.out, _ESTIMATE_HEADER, _estimate_rows(estimates))
    outputs = [args.out]
    ecdf = weighted_ecdf(estimates)
    _write_csv(args.ecdf, ["beta_sn", "weight_cdf"], ecdf)
    outputs.append(args.ecdf)
    if args.plot:
        Path(args.plot).write_text(
            bias_scatter_svg(estimates, ecdf, alpha=args.alpha),
            encoding="utf-8")
        outputs.append(args.plot)
    if args.forest:
        Path(args.forest).write_text(forest_svg(estimates), encoding="utf-8")
        outputs.append(args.forest)
    _write_manifest("estimate-bias", [args.infile], outputs)
    return 0


def _cmd_ranking_impact(args) -> int:
    performances, _ = load_labeled(args.infile, _preprocess_config(args))
    rule = AggregationRule(
        panel_trim=args.trim,
        reference_handling=(ReferenceHandling.AVERAGE_OF_REFERENCES
                            if args.references else ReferenceHandling.NONE),
        use_median=args.use_median,
        ref_weight=args.ref_weight,
    )
    outcomes = ranking_impact(performances, rule)
    rows = []
    for outcome in outcomes:
        event = f"{outcome.event_key[0]}/{outcome.event_key[1].value}/{outcome.event_key[2]}"
        for s in outcome.standings:
            rows.append((event, s.gymnast_id, s.score_with_sn,
                         s.score_without_sn, s.rank_with_sn,
                         s.rank_without_sn, outcome.changed,
                         outcome.podium_changed))
    _write_csv(args.out, ["event", "gymnast", "score_with", "score_without",
                          "rank_with", "rank_without", "changed",
                          "podium_changed"], rows)
    affected = [o for o in outcomes if any(
        s.score_with_sn != s.score_without_sn for s in o.standings)]
    changed = sum(1 for o in affected if o.changed)
    podiums = sum(1 for o in affected if o.podium_changed)
    print(f"{len(affected)} of {len(outcomes)} events contain same-nationality "
          f"marks; rankings change in {changed}, podiums in {podiums}")
    _write_manifest("ranking-impact", [args.infile], [args.out])
    return 0


def _cmd_report(args) -> int:
    estimates = []
    with open(args.estimates, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            estimates.append(_RowEstimate(row))
    if not estimates:
        print("no estimates to report", file=sys.stderr)
        return 1
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ecdf = weighted_ecdf(estimates)
    outputs = []
    ecdf_path = out_dir / "wecdf.csv"
    _write_csv(ecdf_path, ["beta_sn", "weight_cdf"], ecdf)
    outputs.append(ecdf_path)
    if args.plot == "svg":
        scatter = out_dir / "bias_scatter.svg"
        scatter.write_text(bias_scatter_svg(estimates, ecdf, alpha=args.alpha),
                           encoding="utf-8")
        forest = out_dir / "bias_forest.svg"
        forest.write_text(forest_svg(estimates), encoding="utf-8")
        outputs.extend([scatter, forest])
    _write_manifest("report", [args.estimates], outputs)
    return 0


class _RowEstimate:
    """Estimate reconstructed from an estimates CSV row (for report)."""

    def __init__(self, row: dict):
        self.key = tuple(row["key"].split("/"))
        self.beta_sn = float(row["beta_sn"])
        self.se_sn = float(row["se_sn"])
        self.p_sn = float(row["p_sn"])
        self.ci95_sn = (float(row["ci_lo"]), float(row["ci_hi"]))
        self.n_sn_marks = int(row["n_sn_marks"])
        self.n_obs = int(row["n_obs"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panel-bias",
        description="Quantify national bias of sports judges from panel marks.",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads (results are identical at any setting)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the seed of seeded subcommands")
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic mark dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit-sigma", help="fit variability curves per group")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None, help="optional SVG curve plot")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_fit_sigma)

    p = sub.add_parser("marking-scores", help="per-judge tendency and accuracy")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_marking_scores)

    p = sub.add_parser("estimate-bias", help="estimate national bias")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--scope", choices=[s.value for s in Scope],
                   default="discipline")
    p.add_argument("--stage", choices=[s.value for s in StageFilter],
                   default="all")
    p.add_argument("--min-sn-marks", type=int, default=1)
    p.add_argument("--alpha", type=float, choices=[0.05, 0.01], default=0.05)
    p.add_argument("--out", default="estimates.csv")
    p.add_argument("--ecdf", default="wecdf.csv")
    p.add_argument("--plot", default=None, help="optional SVG scatter")
    p.add_argument("--forest", default=None, help="optional SVG CI forest plot")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_estimate_bias)

    p = sub.add_parser("ranking-impact",
                       help="rankings with vs without same-nationality marks")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trim", type=int, default=1)
    p.add_argument("--use-median", action="store_true")
    p.add_argument("--references", action="store_true",
                   help="average reference judges separately")
    p.add_argument("--ref-weight", type=float, default=1.0)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_ranking_impact)

    p = sub.add_parser("report", help="plots and wECDF from an estimates CSV")
    p.add_argument("--estimates", required=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--plot", choices=["svg", "none"], default="svg")
    p.add_argument("--alpha", type=float, default=0.01)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
