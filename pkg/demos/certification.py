"""Checking the convergence conditions before running anything.

The certification pipeline samples the plant for monotonicity, checks the
convexity conditions on the cost, and compares the curvature mu of the
input cost against the cross term ell. When mu > ell the fixed-point
iteration on the steady-state map contracts at rate ell/mu, which the
iterate sequence below confirms.
"""
import numpy as np

from monofo import build_lti_scenario, certify, small_gain_iterate

config = build_lti_scenario()
plant, cost, box = config.build_plant([1.0]), config.build_cost(), config.build_box()

report = certify(plant, cost, box, label="lti, w=+1")
print(report.summary())

run = small_gain_iterate(cost, plant, box, box.lower, tol=1e-6)
err = np.abs(run.iterates[:, 0] - 11 / 21)
print(f"\n{len(run.iterates) - 1} iterations to u*={run.fixed_point[0]:.6f}")
print("first error ratios:", np.round(err[1:6] / err[:5], 6))
print(f"predicted rate ell/mu = {report.constants.contraction:.6f}")
