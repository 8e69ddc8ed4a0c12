"""t -> t^2 is increasing on [0, 10] but not 2-matrix monotone.

Builds a refuting pair (A <= B with B^2 - A^2 not PSD), checks it again
from scratch, and shows the divided-difference matrix that explains it.
"""
import numpy as np

from matmono import Interval, find_violation, loewner_leq, loewner_matrix, order_n_certificate, power, verify_witness
from matmono.hermitian import apply_fn

I = Interval.closed(0, 10)
f = power(2)

for n in (1, 2):
    v = order_n_certificate(f, I, n)
    print(f"order {n}: {v.kind.value:12s} worst Loewner eigenvalue {v.min_eigenvalue:+.3e}")

w = find_violation(f, 2, I, seed=7)
print("\nA =\n", np.round(w.a.data, 4))
d = w.b.data - w.a.data
print("eigenvalues of B - A:", np.linalg.eigvalsh(d))
print("A <= B:", loewner_leq(w.a, w.b, w.tol).verdict)
gap = loewner_leq(apply_fn(f, w.a), apply_fn(f, w.b), w.tol)
print(f"f(A) <= f(B): {gap.verdict}  (min eigenvalue of f(B)-f(A) = {gap.min_eigenvalue:+.3e}, tol {w.tol:.1e})")
print("independent re-verification:", verify_witness(w))

# two distinct nodes: [[2x, x+y], [x+y, 2y]] has determinant -(x-y)^2 < 0
L = loewner_matrix(f, [1.0, 3.0]).entries.real
print("\nLoewner matrix at nodes 1, 3:\n", L, "\neigenvalues:", np.linalg.eigvalsh(L))
