"""Data-driven truss elasticity: exact branch and bound, fixed-point heuristic, brute force."""

from .dataset import (MaterialDataset, Weighting, compute_c, generate_synthetic, load_csv,
                      nearest_point, write_csv)
from .heuristic import HeuristicReport, solve_heuristic
from .miqp import ExactReport, PartialAssignment, lower_bound, solve_exact
from .oracle import brute_force
from .state import (MechanicalState, objective_of, reference_stiffness,
                    solve_fixed_assignment)
from .truss import TrussModel, build_model, builtin_ten_bar, load_truss_file, load_vector

__version__ = "0.1.0"
