"""eta along two sequences converging to the same singular point.

For z d/dx + xy d/dy + xy d/dz the plane leaves {y = 0, z = c} are discs,
so eta(0, 0, 1/n) = 1.  The leaf through (w, w^2/2, w^2/2) is a punctured
disc whose puncture is the origin, and there eta tends to 0.  The two
limits differ, so eta has no continuous extension to 0.
"""

from foliation_lab import eta_sequence_limits, get_scenario

sc = get_scenario("E1.15")
p = eta_sequence_limits(sc, "p_n", ns=[2, 10, 100, 1000, 10_000])
q = eta_sequence_limits(sc, "q_n", ns=[2, 10, 100, 1000, 10_000])
print(f"{'n':>6s}  {'eta(p_n)':>10s}  {'eta(q_n)':>12s}")
for n, a, b in zip(p.ns, p.etas, q.etas):
    print(f"{n:6d}  {a:10.6f}  {b:12.4e}")
print(f"gap between the limits: {abs(p.limit - q.limit):.6f}")

# the same picture near a separatrix of x d/dx + zy d/dy
sc = get_scenario("E1.16")
p = eta_sequence_limits(sc, "p_n", horizon=200)
q = eta_sequence_limits(sc, "q_n", ns=[10, 100, 1000, 10_000])
print(f"\nE1.16: eta(p_n) constant at {p.etas[0]:.6f}, eta(q_n) down to {q.etas[-1]:.3e}")
