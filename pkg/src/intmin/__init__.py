"""Integral minimization of convex functions from separation oracles.

A volumetric-center cutting plane method is interleaved with lattice
dimension reduction: whenever the current polytope is thin along some
integer direction, the search moves to the one hyperplane of that direction
holding every integral candidate.
"""

from .barrier import BarrierState, Polytope, approx_volumetric_center, evaluate_barrier
from .cutting_plane import CpmResult, CutAction, CutKind, cpm_block, cpm_step
from .dimred import SlicedEllipsoid, SubspaceState, reduce_dimension, slice_ellipsoid
from .errors import (AmbiguousYes, EmptySlice, InfeasibleSlab, InteriorViolation, IntminError,
                     MalformedInstance, MalformedOracle, NonConvergence, NonTermination,
                     OracleInconsistency, PrecisionLoss, StructuralError)
from .lattice import (GramForm, LatticeState, approx_shortest_vector, brute_force_shortest,
                      gram_integerize, lll_reduce, project_lattice)
from .oracles import (EvalOracle, Halfspace, LovaszOracle, SeparationOracle, brute_force_sfm,
                      lovasz_separation, make_graph_cut_oracle, make_table_oracle,
                      quadratic_separation)
from .solver import SolverConfig, SolverState, finish_low_dim, main_loop_step, minimize, minimize_submodular
from .transcript import Transcript

__version__ = "0.1.0"
