"""Tangent cones of a few foliations at singular points.

At an isolated singularity in the plane the limiting tangent directions
fill C^2.  Along a curve of singularities they can be confined to a plane,
and the plane is what decides whether the foliation is of transversal type.
"""

import numpy as np

from foliation_lab import estimate_foliation_cone, get_scenario, is_transversal_type

rng = np.random.default_rng(2024)

for sid in ("E1.3.1", "E1.3.2", "E1.3.3"):
    sc = get_scenario(sid)
    cone = estimate_foliation_cone(sc.field, sc.E, np.zeros(2), rng=rng)
    dim = 0 if cone.span_hint is None else cone.span_hint.shape[1]
    print(f"{sid:7s} {sc.title:40s} directions={len(cone.directions):5d} span dim={dim}")

print()
for sid, p in (("E1.4", (0, 0, 0.3)), ("E1.5", (0, 0.5, 0)), ("E1.5", (0, 0, 0))):
    sc = get_scenario(sid)
    cone = estimate_foliation_cone(sc.field, sc.E, p, rng=rng)
    rel = np.round(cone.relations[0], 6)
    print(f"{sid} at {p}: relation {rel}, residual "
          f"{np.max(np.abs(cone.directions @ cone.relations.T)):.1e}")

print()
for sid, p in (("E1.4", (0, 0, 0.3)), ("E1.16", (0, 0.5, 0)), ("E1.16", (0, 0, 0.5)),
               ("E1.18", (0.4, 0, 0))):
    sc = get_scenario(sid)
    v = is_transversal_type(sc.field, sc.E, p, rng=rng)
    extra = "" if v.witness is None else f"  field direction {np.round(v.witness[1], 6)}"
    print(f"{sid:6s} at {str(p):14s} {v.verdict:16s} min angle {v.min_angle:.3f}{extra}")
