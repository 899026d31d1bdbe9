"""Localization landscape laboratory.

Discretizes -Laplace + V on a periodic grid, solves the landscape problem
Lu = 1, and compares eigenvalue counts with landscape cube counts.
"""
from .grid import TorusGrid, CubePartition, build_grid, partition, translate_partition, cube_reduce
from .potential import (PotentialField, BumpProfile, Bernoulli, Uniform01, Power, ExpTail,
                        sample_omegas, assemble_anderson, constant_potential, eval_F)
from .fieldio import save_field, load_field
from .operator import DiscreteOperator, Spectrum, eigen_dense, count_eigenvalues_below
from .landscape import (LandscapeField, solve_landscape, effective_potential, local_minima,
                        ground_state_identity_residual)
from .counting import (CountingCurve, ids_curve, landscape_count, weyl_predictor,
                       fit_constant_upper, lower_bound_value)
from .stochastic import (EnsembleConfig, EnsembleCurve, TailEnvelopeParams, expectation_curves,
                         chernoff_bound, binomial_tail_exact, tail_envelope, lifschitz_fit)
from .lawcheck import (LawReport, check_upper, check_lower_general, check_doubling,
                       minima_ratio_diagnostic, moser_harnack_probe)

__version__ = "0.1.0"
