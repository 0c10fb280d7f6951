//! 29-DoF hand model: forward kinematics from joint angles to markers and a
//! three-phase inverse kinematic solver.

mod angles;
mod fka;
pub mod geom;
mod ika;
pub mod optim;
mod skeleton;

pub use angles::{
    denormalize_angles, normalize_angles, Finger, JointAngles, JOINT_NAMES, NORMALIZATION_STEP_DEG,
    N_FINGERS, N_JOINTS, THUMB, WRIST,
};
pub use fka::{HandModel, MarkerFrame, RangeMode, N_KIN_MARKERS};
pub use ika::{FingerSolution, IkaOptions, IkaResult};
pub use skeleton::{
    all_marker_labels, finger_marker_base, FingerGeometry, HandSkeleton, Line, Lines, Plane, Planes,
    ThumbGeometry, ZetaGate, BODY_MARKERS, KINEMATIC_MARKERS, MARKER_DORSUM, MARKER_ELB, MARKER_FAR,
    MARKER_FAU, N_HAND_MARKERS, THUMB_MARKER_BASE,
};

/// Fingertip markers used by the fingertip-distance metric: index, middle, thumb.
pub const FINGERTIP_MARKERS: [&str; 3] = ["ITIP", "MTIP", "TTIP"];
