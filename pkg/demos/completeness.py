"""Lengths of paths running into the singular set.

On a punctured-disc leaf the Poincare length of the radial path from 1/2
to eps is ln ln(1/eps) - ln ln 2, which grows without bound, so separatrices
are complete at their punctures.  The comparison density of scenario E3.2
behaves the same way.
"""

import numpy as np

from foliation_lab import classify_model_leaf, completeness_probe, ex32_bounds_check, get_scenario, metric_length
from foliation_lab.eta import PathSpec

ch = classify_model_leaf("E1.16", [0, 0.5, 0.2])
for eps in (1e-2, 1e-4, 1e-6):
    L = metric_length(PathSpec.segment(0.5, eps, chart=ch))
    exact = np.log(np.log(1 / eps)) - np.log(np.log(2))
    print(f"eps={eps:.0e}  length {L:.9f}  closed form {exact:.9f}")

for sid, q in (("E1.16", (0, 0.5, 0)), ("E1.18", (0.5, 0, 0)), ("E3.2", (0, 0, 0)),
               ("E3.2.k2", (0, 0, 0.2))):
    rep = completeness_probe(get_scenario(sid), q)
    last = min(L[-1] for _, L, _ in rep.rays)
    print(f"{sid:8s} at {q}: {rep.verdict} over {len(rep.rays)} rays, shortest final length {last:.3f}")

for sid in ("E3.2", "E3.2.k2"):
    sc = get_scenario(sid)
    lo, hi = ex32_bounds_check(sc.field, sc.params["k"], sc.params["rho"])
    print(f"{sid}: |X| / |pi|^k ranges over [{lo:.6f}, {hi:.6f}]")
