# A bistable map in each fiber: two attracting strips with a repelling one
# between them. The decomposition lists them bottom to top.

import numpy as np

from skewlab.skeleton import attractor_count_bound, minimal_trapping_domains
from skewlab.systems import s2
from skewlab.twosided import bone_scan, interior_gaps, repeller_analysis, strip_decomposition

system = s2()

domains = [c.domain for c in minimal_trapping_domains(system)]
for i, d in enumerate(domains, 1):
    print(f"trapping domain {i}:", [[round(v, 5) for v in d.hull(k)] for k in range(2)])

# at most two sinks for any periodic word of length <= 2
bound = attractor_count_bound(system, max_period=2)
print("count bound:", bound.bound, "witness:", bound.witness)

# the reversed walk lives in the gap between the two domains
gap = interior_gaps([d.hull_domain() for d in domains])[0]
rep = repeller_analysis(system, gap, steps=50_000, seed=0)
print("gap:", np.round(gap, 4))
print("repeller support:", rep.measure.support(), " lambda:", rep.exponent)
print("rejected reversed steps:", rep.rejections)

# pullbacks of a domain along random pasts shrink to points
scan = bone_scan(system, domains[0], depth=20, samples=2000, seed=0)
print("fraction longer than 1e-6 by depth:", scan.fraction_above[[0, 4, 9, 19]])
print("log-length slope:", scan.slope)

# the whole inventory at once, checked for alternation and signs
report = strip_decomposition(system, seed=0, repeller_steps=50_000)
print(report.summary())
for s in report.strips:
    print(f"  {s.kind:9s} lambda={s.exponent:+.4f} support={s.measure.support()}")
