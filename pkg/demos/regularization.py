"""Restoring the small-gain condition with an input penalty.

With a weak input cost (beta_u = 0.5) the curvature mu = 1 falls below the
cross term ell = 2, so the contraction argument fails. Adding beta_bar |u|^2
to the input cost raises mu by 2 beta_bar; the suggested beta_bar leaves a
five percent margin.
"""
from monofo import build_lti_scenario, certify, check_lemma4, estimate_constants, suggest_regularization

config = build_lti_scenario()
plant, box = config.build_plant([1.0]), config.build_box()
weak = config.replace(cost={**config.cost, "beta_u": 0.5}).build_cost()

c = estimate_constants(weak, plant, box)
print(f"weak cost: mu={c.mu:g} ell={c.ell:g} small gain holds: {check_lemma4(c.mu, c.ell).verified}")

beta_bar = suggest_regularization(c.mu, c.ell)
fixed = weak.regularized(beta_bar)
c2 = estimate_constants(fixed, plant, box)
print(f"beta_bar={beta_bar:g}: mu={c2.mu:g} ell={c2.ell:g} rate={c2.contraction:.4f} "
      f"small gain holds: {check_lemma4(c2.mu, c2.ell).verified}")
print()
print(certify(plant, fixed, box, label="regularized").summary())
