"""Sampled check of the rational criterion defining the class M_n.

For weights a with sum 0 and points lambda_j > 0: whenever
sum a_j (t lambda_j - 1)/(t + lambda_j) >= 0 for all t > 0, the tester checks
that sum a_j h(lambda_j) >= 0 as well.
"""
import numpy as np

from matmono import mclass_test, moebius, power, log1p, sqrt

for h in (sqrt(), log1p(), moebius(1.0), power(2)):
    rep = mclass_test(h, 2, 20_000, seed=1)
    print(f"{h.spec():12s} premise held {rep.premise_hits:6d} times, conclusion failed {len(rep.violations)} times")
print("\nThe operator monotone entries never fail. t^2 does, for example:")
rep = mclass_test(power(2), 2, 20_000, seed=1)
if rep.violations:
    v = rep.violations[0]
    print(f"  a = {np.round(v.a, 3)}, lambda = {np.round(v.lam, 3)}")
    print(f"  premise minimum over t: {v.premise_min:+.4f}, sum a_j h(lambda_j) = {v.value:+.3f}")
