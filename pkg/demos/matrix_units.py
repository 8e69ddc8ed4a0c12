"""Generators a_2..a_m of a copy of M_m inside M_n and their relations.

a_k is the matrix unit e_{k1}. They are contractions with a_j a_k = 0 and
a_j* a_k = delta_jk a_2* a_2, which the verifier checks to 1e-12.
A 1e-6 perturbation breaks them.
"""
import numpy as np

from matmono import matrix_unit_generators
from matmono.fibered import check_relations

gens, rep = matrix_unit_generators(4, 3)
for k, g in enumerate(gens, start=2):
    print(f"a_{k} =\n{g.real.astype(int)}")
print(rep)

rng = np.random.default_rng(0)
noisy = [g + 1e-6 * rng.standard_normal(g.shape) for g in gens]
print("perturbed:", check_relations(noisy))
