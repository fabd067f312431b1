# Two affine contractions driven by a fair coin.
# Everything about this system can be checked by hand, which makes it a good
# first tour: skeleton, trapping domain, stationary measure, exponent.

import math

import numpy as np

from skewlab.markov import format_word
from skewlab.measures import lyapunov_exponent, power_iterate_stationary, simulate_walk, srb_check
from skewlab.skeleton import (
    endpoint_candidates,
    enumerate_skeleton,
    is_trapping,
    minimal_trapping_domains,
    monotone_subword,
)
from skewlab.systems import s1

system = s1()
print(system)

# simple transitions and returns of the full 2-shift
transitions, returns = enumerate_skeleton(system.chain)
print("transitions:", [format_word(t) for t in transitions])
print("returns:    ", [format_word(r) for r in returns])

# fixed points of the returns, closed under the transitions
for k in range(2):
    print(f"candidates at state {k + 1}:", np.round(endpoint_candidates(system, k), 6))

# the hull [1/12, 11/12] is only weakly trapping (its ends are fixed),
# so the construction fattens it until the diffusion pulls it strictly inside
(built,) = minimal_trapping_domains(system)
print("hull:   ", built.seed.hull(0))
print("domain: ", built.domain.hull(0))
print("status: ", is_trapping(system, built.domain).status, " margin:", round(built.margin, 6))

# stationary measure by Ulam's method; the support hugs 1/12 and 11/12
mu = power_iterate_stationary(system, built.domain, bins=2048, tol=1e-10)
print("support:", mu.support(), " expected:", (1 / 12, 11 / 12))
print("state weights:", mu.state_weights)

# the same measure from a long random walk
walk = simulate_walk(system, steps=1_000_000, seed=0, bins=2048)
print("walk support:", walk.support())

# constant slope 0.4 so the exponent is exactly log 0.4
print("lambda:", lyapunov_exponent(system, mu), " log 0.4 =", math.log(0.4))

# time averages of x from random starts all land near the space average 0.5
r = srb_check(system, mu, trials=5, orbit_length=100_000, seed=1)
print("time averages:", np.round(r.time_averages, 4), " space average:", r.space_average)

# returns that push a point up are cut out of a word
print(format_word(monotone_subword(system, "121", 0.9)))  # 121: the return lowered 0.9
print(format_word(monotone_subword(system, "121", 0.2)))  # 1: the return raised 0.2
