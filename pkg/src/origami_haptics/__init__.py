"""Kinematics, statics and soft-finger haptic rendering for a 4-DoF origami
parallel fingertip device."""
from .mechanism import (
    JointAngles,
    MechanismParams,
    Pose,
    base_point,
    constraint_residual,
    db_vector,
    load_params,
    upper_link_vector,
)
from .kinematics import (
    forward_kinematics_direct,
    forward_kinematics_iterative,
    home_pose,
    ijk_coefficients,
    inverse_kinematics,
    jacobian,
)
from .statics import Wrench, capacity_report
from .workspace import sweep_workspace, workspace_summary
from .rendering import FingerSample, Renderer, Scene, SceneBox
from .controller import PidGains, default_gains, track_pose_trajectory

__version__ = "0.1.0"
