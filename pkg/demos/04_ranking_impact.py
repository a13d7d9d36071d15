"""How often do same-nationality marks actually change a ranking?

Aggregates every event's scores twice, with and without the marks given
by compatriot judges, and counts the events where the final order (or
the podium) moves.
"""

from panelbias import DisciplineConfig, GeneratorConfig, generate
from panelbias.ingest import Discipline
from panelbias.pipeline import load_labeled
from panelbias.ranking import AggregationRule, ranking_impact
from panelbias.synth import ARTISTICS_M_SIGMA

alpha, beta, gamma = ARTISTICS_M_SIGMA

for beta_sn in (0.0, 0.43, 0.7):
    config = GeneratorConfig(seed=1234, disciplines=[DisciplineConfig(
        discipline=Discipline.ARTISTICS_M,
        n_performances=4000, panel_size=6, sn_rate=0.03,
        beta_sn=beta_sn, finals_share=1.0,
        quality_mean=8.4, quality_sd=0.25,
        accuracy_range=(0.7, 1.0), mu_sd=0.05,
        sigma_alpha=alpha, sigma_beta=beta, sigma_gamma=gamma,
    )])
    csv_bytes, _ = generate(config)
    performances, _ = load_labeled(csv_bytes)

    outcomes = ranking_impact(performances, AggregationRule(panel_trim=0))
    affected = [o for o in outcomes if any(
        s.score_with_sn != s.score_without_sn for s in o.standings)]
    changed = sum(1 for o in affected if o.changed)
    podium = sum(1 for o in affected if o.podium_changed)
    print(f"beta_sn={beta_sn:<5} {len(affected):3d} affected events, "
          f"rankings change in {changed} ({changed / len(affected):.0%}), "
          f"podiums in {podium}")

# Even at beta_sn = 0 some rankings differ: dropping a compatriot's mark
# changes the panel composition, and with tightly packed scores that is
# enough. The injected bias adds on top of that baseline.
