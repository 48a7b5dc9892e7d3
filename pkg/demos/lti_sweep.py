"""Gain sweep on the two-state linear plant.

The disturbance flips sign every 250 time units. For w = +1 the optimal
input sits inside the box at 11/21; for w = -1 it sits on the upper face.
Every gain reaches the same optimum, and only the transient depends on it.

    python demos/lti_sweep.py [output_dir]
"""
import sys

from monofo import build_lti_scenario, run_scenario

out = sys.argv[1] if len(sys.argv) > 1 else "ofo_output/demo_lti"
config = build_lti_scenario()
result = run_scenario(config, run_certification=False, output_dir=out)

print("segment optima:")
for seg in result.segments:
    print(f"  t in [{seg.start:g}, {seg.end:g}]  w={seg.exogenous['w']}  u*={seg.u_star[0]:.6f}")

print("\nfinal input per segment and gain:")
for alpha, run in result.runs.items():
    finals = "  ".join(f"{u[0]:.6f}" for u in run.segment_final_u)
    settle = ", ".join(f"{s:.1f}" for s in run.settling_times)
    print(f"  alpha={alpha:<6g} u: {finals}  settling: {settle}")
print(f"\ntrajectories written to {out}")
