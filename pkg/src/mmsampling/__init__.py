"""Sampling invariants of finite metric measure spaces.

Finite mm-spaces and their quantum generalization (pairwise lengths
given by distributions), moment functionals of their sampling
distributions with concentration bounds, partial and observable
diameters, separation distances, and the box and extension metrics.
"""
from .core import (DELTA0, INTERVAL, TOL, DiscreteDistribution, FiniteMetric, FiniteMMSpace,
                   PushforwardMeasure, QMMSpace, blow_up, complete_graph_space, d_ext,
                   effective_lower, embed_mm, from_graph, graph_adjacency, lower_matrix,
                   new_finite_mm, new_qmm, permute, sphere_empirical, sphere_space,
                   upper_matrix, validate_qmm)
from .sampling import (GSystem, Monomial, MomentEntry, MomentSignature, PiecewiseLinear,
                       SampleMatrix, azuma_bound, chernoff_bound, moment_signature,
                       sample_matrix, t_exact, t_monte_carlo)
from .invariants import (LipschitzWitness, ObsDiamResult, PartialDiameter, SearchBudget,
                         SeparationResult, SeparationWitness, check_separation_witness,
                         lipschitz_check, obs_diam, obs_diam_exact_small, partial_diameter,
                         partial_diameter_result, pushforward, separation)
from .distances import (Alignment, AnnealBudget, Box1Result, GridKernel, UnderlineBox1, box1,
                        box1_result, deviation_matrix, kernel_from_space, moment_discrepancy_bound,
                        underline_box1)
from .convergence import (ConvergenceReport, LimitComparison, SequenceSpec, compare_limits,
                          converge_test, generate)
from .jsonio import dump_space, dumps, load_space, loads
from . import errors

__version__ = "0.1.0"
