"""The exact lattice pieces: LLL under a Gram form, and projection along a short vector."""

from fractions import Fraction

import numpy as np

from intmin import LatticeState, approx_shortest_vector, brute_force_shortest, lll_reduce, project_lattice
from intmin.lattice import (GramForm, enumeration_bound, exact_projector, hermite_normal_form,
                            same_lattice)

# a skewed basis of the lattice {x in Z^3 : x1 + x2 + x3 even}
rows = [[2, 0, 0], [13, 1, 0], [21, 8, 1]]
lat = LatticeState(rows, rows)
form = GramForm.exact(np.eye(3, dtype=int))
red, nsq = lll_reduce(lat, form)
print("reduced basis:\n", red.basis)
print("first vector norm^2:", nsq, "shortest:", brute_force_shortest(red, form, enumeration_bound(red, form)))

# a thin ellipsoid: (1, 1, 0) is short under A
A = np.array([[1e4, -1e4 + 1, 0], [-1e4 + 1, 1e4, 0], [0, 0, 100]])
sv = approx_shortest_vector(LatticeState.standard(3), A)
print("short vector:", sv.vector, "A-norm", round(sv.norm, 4), "within factor", round(sv.gamma, 3))

# the projected lattice onto v-perp has rational basis vectors
proj = project_lattice(LatticeState.standard(3), sv.vector)
print("projected basis:\n", proj.basis)
print("det^2 of projection:", proj.det_squared(), "=", Fraction(1, int(sv.vector @ sv.vector)))
# it matches the projection of Z^3 computed from scratch
print("rows of the projector:\n", exact_projector([sv.preimage], 3))
print("same lattice:", same_lattice(proj.basis, exact_projector([sv.preimage], 3)))

# integer bases compare through their Hermite normal form
print("HNF of the first lattice:\n", hermite_normal_form(lat.basis))
