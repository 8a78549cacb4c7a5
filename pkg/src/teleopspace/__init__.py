"""Teleoperation through a shared low-dimensional hand-pose subspace."""

from .baselines import FingertipConfig, IkParams, JointCorrespondence, fingertip_map, joint_map
from .empirical import ExtremaPoses, MotionAssignment, build_empirical_mapping, build_projection_matrix
from .fitting import (
    FitConfig,
    SubspaceHypothesis,
    TieredScore,
    build_algorithmic_mapping,
    fit_subspace,
    gram_schmidt,
    point_to_subspace_distance,
    relocate_origin,
    sample_hypothesis,
    score_hypothesis,
)
from .hands import (
    FingerChain,
    HandModel,
    JointSpec,
    LinkSpec,
    clamp_to_limits,
    forward_kinematics,
    validate_model,
)
from .kernels import BACKEND
from .objects import ObjectSpec, canonical_object_set
from .sampling import Grasp, GraspDataset, grasp_quality, parse_dataset, sample_grasps
from .subspace import (
    TeleopMapping,
    compute_scaling,
    project_from_subspace,
    project_to_subspace,
    teleop_map,
)

__version__ = "0.1.0"
