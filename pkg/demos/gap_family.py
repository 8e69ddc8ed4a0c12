"""The gap family: f_n = g_n o h lies in P_n but not in P_{n+1}.

g_n(t) = t + t^3/3 + ... + t^(2n-1)/(2n-1) is n-monotone only near 0.
Bisection locates the largest alpha with g_n monotone of order n on [0, alpha);
composing with the Moebius map h(t) = alpha t / (1 + t), which sends [0, inf)
onto [0, alpha), gives a function on the whole half line.
"""
from matmono import Interval, alpha_search, find_violation, gap_fn, order_n_certificate

I = Interval.closed(0, 10)
for n in (2, 3):
    r = alpha_search(n, resolution=1e-3)
    lo, hi = r.bracket
    print(f"n={n}: alpha in [{lo:.6f}, {hi:.6f}]  (g_n order {n}: {r.n_certificate.kind.value}, "
          f"order {n + 1}: {r.n_plus_1_witness.kind.value})")
    f = gap_fn(n, r.alpha_estimate)
    acc = order_n_certificate(f, I, n)
    ref = order_n_certificate(f, I, n + 1)
    print(f"     f_{n}: order {n} {acc.kind.value} (worst {acc.min_eigenvalue:+.2e}), "
          f"order {n + 1} {ref.kind.value} (worst {ref.min_eigenvalue:+.2e})")
    w = find_violation(f, n + 1, I, seed=0)
    print(f"     explicit {n + 1}x{n + 1} witness: gap {w.order_gap_eigenvalue:+.2e} vs tol {w.tol:.1e}")
print("\nThe violations shrink quickly with n: at n=3 the gap is near 1e-11,"
      " so the witness tolerance has to track rounding, not a fixed 1e-9.")
