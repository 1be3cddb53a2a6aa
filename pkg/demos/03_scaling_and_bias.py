"""
Self-similarity and finite-n bias
=================================

F_n can be simulated two ways: with the n^H-scaled integrand on [0, t] or
with the plain integrand on [0, n t].  By self-similarity the two agree in
law, and feeding one path through both routes agrees exactly.
"""

from fbmclt import FbmPathPair, ModelParams, evaluate_F, evaluate_F_unscaled
from fbmclt.functionals import expected_F_discrete, functional_grid
from fbmclt.gaussian_core import sample_path_pair
from fbmclt.rng import stream
from fbmclt.testfuncs import make_gaussian_difference

p = ModelParams(0.75, 2, 1.0, 1.0)
f = make_gaussian_difference(2)
n = 16
g = functional_grid(1.0, n)
pair = sample_path_pair(p, g, g, stream(1, "demo", 1), stream(1, "demo", 2))

# pathwise: stretch time by n and space by n^H
big = FbmPathPair(p.scaled(n), g.scaled(n), g.scaled(n), n**p.H * pair.path1, n**p.H * pair.path2)
print("scaled route  ", evaluate_F(pair, f, n).value)
print("unscaled route", evaluate_F_unscaled(big, f, n).value)

# exact mean of the grid functional: the bias that odd-moment checks see
print(f"{'n':>5} {'E F_n (grid)':>14} {'x n^(1-Hd/2)':>14}")
for n in (16, 64, 256, 1024):
    m = expected_F_discrete(p, f, n)
    print(f"{n:5d} {m:14.5f} {m * n ** ((2 - p.hd) / 2):14.5f}")
