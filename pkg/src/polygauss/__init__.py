"""Gaussian probability content of convex polyhedra by holonomic gradient continuation."""
from .complex import SimplicialComplex, holonomic_rank, nerve
from .errors import (DegenerateNearTie, EmptyPolyhedron, InvalidPolyhedron, LPNumericalFailure,
                     NonFiniteState, NonPositiveDefinite, NotGeneralPosition, PolyGaussError,
                     ShiftTooSmall, SingularGram, SingularLocusCrossing, StepUnderflow)
from .geometry import (FaceClass, GeneralPositionReport, HomogenizedFamily, HPolyhedron, Validity,
                       ValidityCertificate, check_general_position, homogenize, is_valid,
                       relative_interior_point, strip_redundant)
from .hgm import (Diagnostics, GaussianProblem, HGMConfig, StateVector, compute_probability,
                  continue_in_a, continued_phi, probability, standardize)
from .oracle import OracleEstimate, check_decomposition, estimate_phi, estimate_phi_F, fd_derivative
from .pfaffian import (GramCache, PfaffianSystem, annihilator_residual, gram_cache,
                       integrability_residual, singular_distance)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
