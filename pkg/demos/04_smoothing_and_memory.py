# Adding a little noise to the fiber maps, and turning a system with memory
# into a step system.

import math

import numpy as np

from skewlab.fibermaps import Affine, Moebius
from skewlab.markov import MarkovChain, format_word
from skewlab.measures import SmoothedKernel, baxendale_check, smoothed_stationary
from skewlab.systems import s1
from skewlab.twosided import MultistepSystem, multistep_to_step, random_driving_word

system = s1()

# a smooth kernel of half-width eps after each map gives a measure with a density
for eps in (0.1, 0.05, 0.025):
    k = SmoothedKernel(eps)
    mu, iterations, _ = smoothed_stationary(system, k, bins=1024)
    print(f"eps={eps}: max density {mu.density_max():.2f} <= {k.density_bound:.0f}, {iterations} iterations")

# volume exponent against the negated entropy sum
for eps in (0.1, 0.05):
    r = baxendale_check(system, eps, bins=4096)
    print(dict(r.items()))
print("log 0.4 + log 0.95 =", math.log(0.4) + math.log(0.95))

# memory (0, 1): the map at time t depends on the symbols at t and t + 1
chain = MarkovChain([[0.6, 0.4], [0.3, 0.7]])
ms = MultistepSystem(chain, (0, 1), {
    (0, 0): Affine(0.05, 0.4),
    (0, 1): Affine(0.3, 0.35),
    (1, 0): Moebius(1.0, 1.0, 1.0, 2.0),
    (1, 1): Affine(0.55, 0.4),
})
unrolled = multistep_to_step(ms)
print("windows:", [format_word(w) for w in unrolled.windows])
print(unrolled.system.chain.transition)
print("stationary:", unrolled.system.chain.stationary)

# both descriptions produce the same orbit bit for bit
driving = random_driving_word(chain, 31, seed=0)
direct = ms.orbit(driving, 0.5)
x, step = 0.5, []
for state in unrolled.drive(driving):
    step.append(x)
    x = float(unrolled.system.maps[state](x))
print("orbits equal:", np.array_equal(direct, step))
