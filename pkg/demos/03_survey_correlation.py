"""
Linking topics to survey answers
================================

Plant a survey whose state estimates follow a topic's true geography, then
recover the relationship with weighted estimates and a rank correlation.
"""

from tweetmine.analytics import spearman, strength_band
from tweetmine.survey import state_estimates
from tweetmine.synth import SynthSpec, generate_corpus, plant_geo_correlation

_, truth = generate_corpus(SynthSpec(K=5, D=3000, seed=2))

for target in (0.9, 0.0, -0.9):
    planted = plant_geo_correlation(truth, "QG1", target_rho=target, seed=0)
    # weighted share of respondents answering "Yes", per state
    estimates = state_estimates(planted.respondents, planted.group)
    result = spearman(estimates, planted.prevalence)
    print(f"target {target:+.1f}: rho {result.coefficient:+.3f}  p {result.p_value:.2g}  "
          f"({strength_band(result.coefficient)})  from {len(planted.respondents)} respondents")
