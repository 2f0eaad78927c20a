"""Scan a grid for points where eta jumps between nearby leaves.

Each grid point is compared with its projections onto the registered leaf
families.  A spread larger than 5% of the largest s flags the point.
Scenario E1.17 has no flags.  E1.16 and E1.18 flag clusters of cells
hugging their separatrices.
"""

import numpy as np

from foliation_lab import discontinuity_scan, get_scenario

for sid in ("E1.17", "E1.16", "E1.18"):
    sc = get_scenario(sid)
    res = discontinuity_scan(sc, grid=12, gap_frac=0.05)
    flagged = res.flagged
    near = float(np.max(sc.E.distance(flagged))) if len(flagged) else 0.0
    print(f"{sid}: {int(res.flags.sum()):4d} flags of {len(res.points)}, largest cluster "
          f"{res.largest_flag_cluster():3d}, farthest flag from E {near:.3f}, skipped {res.skipped}")
