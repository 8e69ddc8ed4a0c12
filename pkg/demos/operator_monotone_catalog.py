"""Sweep the catalog through orders 1..6 and compare with the known answers."""
from matmono import Interval, catalog_expected_order, exp, gap_fn, identity, log1p, moebius, order_n_certificate, power, sqrt

I = Interval.closed(0, 10)
catalog = [identity(), sqrt(), log1p(), moebius(1.0), power(0.5), power(2), power(3), exp(),
           gap_fn(2, 0.7080202026367186), gap_fn(3, 0.22169967651367184)]

print(f"{'function':30s} {'expected':>8s}  verdicts at orders 1..6")
for f in catalog:
    exp_n = catalog_expected_order(f)
    marks = "".join("+" if order_n_certificate(f, I, n).monotone else "-" for n in range(1, 7))
    print(f"{f.spec():30s} {('inf' if exp_n == float('inf') else str(exp_n)):>8s}  {marks}")
print("\n+ accepted, - refuted. Once refuted, a function stays refuted at higher orders.")
