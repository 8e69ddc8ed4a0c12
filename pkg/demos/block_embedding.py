"""M2 + M2 sits inside M4 as diagonal blocks, yet their monotone classes differ.

P_A depends only on the largest fiber dimension, so the direct sum B = M2 + M2
has P_B = P_2 while A = M4 has P_A = P_4. A function in P_2 \\ P_4 is accepted
on B and refuted on A, even though B embeds into A.
"""
import numpy as np

from matmono import EmbeddingMap, FiberedAlgebra, FiberedElement, Interval, amonotone_test, degree, embed, fiber_apply
from matmono import fiber_order_leq, gap_fn, power

I = Interval.closed(0, 10)
B = FiberedAlgebra([(2, 1), (2, 1)])
A = FiberedAlgebra.matrix(4)
m = EmbeddingMap(B, A, [(0, 0), (0, 2)])
print(f"B = {B} (degree {degree(B).n1}), A = {A} (degree {degree(A).n1})")

x = FiberedElement(B, [[[1.0, 2.0], [2.0, 3.0]], [[4.0, 0.5j], [-0.5j, 5.0]]])
print("diagonal placement of a B element:\n", np.round(embed(x, m).blocks[0].data, 2))

f2 = gap_fn(2, 0.7080202026367186)
for alg in (B, A):
    r = amonotone_test(f2, alg, I)
    print(f"f_2 on {str(alg):8s}: {r.verdict.kind.value:12s} empirical={r.empirical.kind.value:12s}"
          f" structural={r.structural.kind.value} anomaly={r.anomaly}")

# a refuting pair on B stays refuting once embedded, with the same padding in both images
r = amonotone_test(power(2), B, I)
w, fi = r.empirical.witness, r.refuting_block[0]
blocks = lambda mat: [mat if i == fi else np.eye(2) for i in range(2)]
xa, xb = embed(FiberedElement(B, blocks(w.a.data)), m), embed(FiberedElement(B, blocks(w.b.data)), m)
print(f"\nt^2 witness from fiber {fi} of B, embedded into A:")
print("  order preserved:", fiber_order_leq(xa, xb, w.tol).verdict)
c = fiber_order_leq(fiber_apply(power(2), xa), fiber_apply(power(2), xb), w.tol)
print(f"  f(x) <= f(y): {c.verdict} (min eigenvalue {c.min_eigenvalue:+.3e})")
