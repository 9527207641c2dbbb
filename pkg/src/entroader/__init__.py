"""Entropy conservative/dissipative ADER-DG solver on triangular meshes."""

__version__ = "0.1.0"

from .basis_quadrature import (QuadratureRule, SpaceTimeBasis, SpatialBasis,
                               face_rule, mass_matrix, time_rule, triangle_rule)
from .cases import get_case, l2_error, observed_order
from .corrector import (Corrector, EntropyLedger, compute_alpha,
                        numerical_entropy_flux, semidiscrete_entropy_balance,
                        split_flux)
from .driver import RunConfig, RunDiagnostics, Simulation, run
from .mesh import (BoundarySpec, Mesh, build_structured_tri_mesh,
                   neighbor_across, read_mesh_file)
from .operators import DGOperators, DGState
from .pde_systems import (AdvectionSystem, EulerSystem, PdeSystem,
                          ShallowWaterSystem, make_system)
from .predictor import Predictor, PredictorCoeffs, solve_predictor
from .relaxation import (GammaResult, RelaxationProblem, apply_relaxation,
                         residual_R, residual_derivative, solve_gamma,
                         solve_gamma_quadratic, total_entropy)
