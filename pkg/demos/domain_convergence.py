"""eta on shrinking domains U_n with radii r(1 + 1/n) approaches eta on U.

The sup gap over a compact set that meets E halves with each doubling of
n, and the Hausdorff distance between the closures goes down with it.
"""

from foliation_lab import Polydisc, convergence_experiment, get_scenario

sc = get_scenario("E1.17")
U = Polydisc((0, 0, 0), (0.5, 0.5, 0.5))
for family in ("shrink", "translate"):
    rep = convergence_experiment(sc, U, family=family, steps=(8, 16, 32, 64))
    labels = [lab for lab, _ in rep.compacts]
    print(f"{family}: compacts {labels}")
    for row in rep.rows:
        gaps = "  ".join(f"{g:.5f}" for g in row.sup_gaps)
        print(f"  n={row.n:3d}  rho={row.rho:.5f}  sup gaps {gaps}")
