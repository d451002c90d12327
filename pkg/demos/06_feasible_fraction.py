"""How much of each design space is feasible.

The honeycomb space is small enough to enumerate; the others are sampled
uniformly.  Only geometry and connectivity are checked, no simulation.
"""
from topobench.harness import probe_feasible_fraction

res = probe_feasible_fraction("HT", 10, exhaustive=True)
print(f"HT 10D: {res.n_feasible} of {res.n_samples} on/off patterns are feasible")

for param in ("MMC", "CMMC"):
    res = probe_feasible_fraction(param, 10, n_samples=20_000, seed=1)
    print(f"{param} 10D: {100 * res.fraction:.3f}% feasible "
          f"(95% interval {100 * res.ci_low:.3f}% to {100 * res.ci_high:.3f}%)")
