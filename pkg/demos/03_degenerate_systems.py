# What happens when a system is not generic, and how the squeezing-word
# search reaches the ends of a hull.

from skewlab.errors import GenericityError
from skewlab.genericity import check_genericity
from skewlab.markov import format_word
from skewlab.skeleton import Domain, find_squeezing_word
from skewlab.systems import parabolic_system, s1, s3
from skewlab.twosided import strip_decomposition

# both maps fix 0.5, so (0.5, 0.5) is an invariant tuple
report = check_genericity(s3())
print(report.summary())
for name, items in report.sections():
    print(name, dict(items))

# the decomposition refuses to run on it
try:
    strip_decomposition(s3())
except GenericityError as exc:
    print("refused:", exc)

# a Moebius map tangent to the diagonal has a fixed point with multiplier 1
print(check_genericity(parabolic_system()).summary())

# margins say how far S1 is from failing each condition
print([round(c.margin, 4) for c in check_genericity(s1()).conditions])

# words that squeeze the hull of S1 onto one of its ends within eps
system = s1()
hull = Domain.uniform(2, (1 / 12, 11 / 12))
w = find_squeezing_word(system, hull, 0, 0, "lower", 0.01)
print("lower end from state 1:", format_word(w))
w = find_squeezing_word(system, hull, 0, 0, "upper", 0.01)
print("upper end from state 1:", format_word(w))
