"""brepkit: probabilistic B-Rep chain-complex predictions to valid CAD models.

The toolkit covers the optimization-and-evaluation half of a CAD
reconstruction pipeline: a synthetic generator stands in for the neural
predictor, extraction solves a binary program whose feasible set is the
valid chain complexes, refinement fits typed primitives under the solved
topology, and the metrics suite scores results against ground truth.
"""

from .complexes import (
    ChainComplex,
    Corner,
    Curve,
    Patch,
    check_dependencies,
    is_valid_topology,
    topology_residuals,
)
from .extraction import (
    ProbabilisticComplex,
    SoftCorner,
    SoftCurve,
    SoftPatch,
    combine_probabilities,
    extract_complex,
    nms,
    proximity_matrices,
)
from .geometry import (
    chamfer_distance,
    curve_distance,
    fitness_score,
    patch_distance,
    proximity,
    vertex_distance,
)
from .ilp import IlpModel, build_ilp
from .solver import SolveResult, solve_ilp
from .synth import CorruptionParams, HalfSpace, corrupt, generate_gt, sample_point_cloud

__version__ = "0.1.0"
