"""teletact: hardware-free bilateral bimanual teleoperation with tactile
force feedback.

The operator side retargets wrist motion and glove readings to a simulated
dual-arm, dual-hand robot over a binary multi-rate TCP protocol; the robot
side streams fingertip taxel arrays back for glove torque rendering. An
experiment harness reproduces grasping, blind-grasping, in-hand sliding,
and deformable-object results at desk scale, and a browser console can
steer a live session through the bridge.
"""

from .geometry import Pose, pose_between, reorthonormalize, rot_inverse
from .haptics import (GloveCommand, HapticConfig, HapticFrame,
                      aggregate_force, compute_torque, render_frame)
from .kinematics import (ArmModel, IkParams, default_arm,
                         forward_kinematics, jacobian, solve_ik)
from .policies import OperatorPolicy
from .protocol import (Control, Glove, Haptic, Hello, LatestWins, RateSpec,
                       Scene, decode, encode, tick_schedule)
from .retargeting import (EndEffectorTarget, HandPose, OperatorCalibration,
                          RelativePose, RetargetConfig, RobotHome,
                          WristSample, apply_to_robot, calibrate, map_hand,
                          relative_pose)
from .sessions import (SessionConfig, SessionReport, run_loopback,
                       run_operator, run_robot, run_session)
from .simworld import (BoxScene, DeformationLedger, PenState, SimObject,
                       SimScene, build_scene, contact_force, grasp_success,
                       pen_step, record_indentation, sample_box_scene,
                       taxelize)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
