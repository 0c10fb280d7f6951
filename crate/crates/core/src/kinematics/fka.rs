//! Forward kinematics: joint angles to marker positions.

use super::angles::{Finger, JointAngles, JOINT_NAMES, N_JOINTS};
use super::geom::{frame_from_pair, Mat3, Vec3};
use super::skeleton::{
    finger_marker_base, HandSkeleton, KINEMATIC_MARKERS, MARKER_DORSUM, MARKER_ELB, MARKER_FAR,
    MARKER_FAU, THUMB_MARKER_BASE,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const N_KIN_MARKERS: usize = 24;

/// Marker positions in [`KINEMATIC_MARKERS`] order, mm.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerFrame<T> {
    pub points: [Vec3<T>; N_KIN_MARKERS],
}

impl<T: Real> MarkerFrame<T> {
    pub fn get(&self, label: &str) -> Option<Vec3<T>> {
        KINEMATIC_MARKERS
            .iter()
            .position(|l| *l == label)
            .map(|i| self.points[i])
    }

    /// Index of the first non-finite marker, if any.
    pub fn first_missing(&self) -> Option<usize> {
        self.points.iter().position(|p| !p.is_finite())
    }

    /// Apply `p -> r p + t` to every marker.
    pub fn transformed(&self, r: &Mat3<T>, t: Vec3<T>) -> Self {
        Self {
            points: self.points.map(|p| *r * p + t),
        }
    }
}

/// How out-of-range angles are treated by [`HandModel::fka_checked`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeMode {
    /// Clamp into the range of motion and log a warning.
    Lenient,
    /// Reject with an error.
    Strict,
}

#[derive(Debug, Clone)]
pub(crate) struct FingerChain<T> {
    pub mcp: Vec3<T>,
    /// Columns: distal, knuckle-line, zero-plane normal.
    pub base: Mat3<T>,
    pub segments: [T; 3],
}

impl<T: Real> FingerChain<T> {
    /// Flexion-plane frame for (alpha, beta).
    pub fn plane_frame(&self, alpha: T, beta: T) -> Mat3<T> {
        self.base * Mat3::rot_z(beta) * Mat3::rot_x(alpha)
    }

    /// Marker positions (MCP, PIP, DIP, tip) in the hand frame.
    pub fn markers(&self, a: &[T; 5]) -> [Vec3<T>; 4] {
        let fp = self.plane_frame(a[0], a[1]);
        let mut out = [self.mcp; 4];
        let mut phi = T::zero();
        for k in 0..3 {
            phi += a[2 + k];
            let (s, c) = phi.sin_cos();
            let d = fp * Vec3::new(c, T::zero(), -s);
            out[k + 1] = out[k] + d * self.segments[k];
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ThumbChain<T> {
    pub base_point: Vec3<T>,
    /// Columns: rest direction, in-plane normal, line t.
    pub base: Mat3<T>,
    pub segments: [T; 3],
}

impl<T: Real> ThumbChain<T> {
    pub fn markers(&self, a: &[T; 6]) -> [Vec3<T>; 4] {
        let mut out = [self.base_point; 4];
        let mut frame = self.base;
        for k in 0..3 {
            frame = frame * Mat3::rot_z(a[2 * k + 1]) * Mat3::rot_y(a[2 * k]);
            out[k + 1] = out[k] + frame.col(0) * self.segments[k];
        }
        out
    }
}

/// Skeleton compiled into scalar-typed chains for repeated evaluation.
#[derive(Debug, Clone)]
pub struct HandModel<T> {
    pub(crate) wrist_center: Vec3<T>,
    pub(crate) dorsum: Vec3<T>,
    pub(crate) fingers: [FingerChain<T>; 4],
    pub(crate) thumb: ThumbChain<T>,
    pub(crate) forearm: [Vec3<T>; 3],
    pub(crate) rom: [[T; 2]; N_JOINTS],
    pub(crate) rest: JointAngles<T>,
    pub(crate) skeleton: HandSkeleton,
}

impl<T: Real> HandModel<T> {
    pub fn new(skeleton: &HandSkeleton) -> Result<Self> {
        skeleton.validate()?;
        let v = Vec3::<T>::from_f64;
        let fingers = Finger::ALL.map(|f| {
            let (plane, line) = skeleton.finger_reference(f);
            let g = &skeleton.fingers[f.idx()];
            let n = v(plane.normal);
            let y = v(line.direction);
            let x = y.cross(n);
            FingerChain {
                mcp: v(g.mcp),
                base: Mat3::from_columns(x, y, n),
                segments: g.segments.map(T::lit),
            }
        });
        let tz = v(skeleton.lines.t.direction);
        let tx = v(skeleton.thumb.rest_direction);
        let thumb = ThumbChain {
            base_point: v(skeleton.thumb.base),
            base: Mat3::from_columns(tx, tz.cross(tx), tz),
            segments: skeleton.thumb.segments.map(T::lit),
        };
        let rom = skeleton.range_of_motion().map(|[a, b]| [T::lit(a), T::lit(b)]);
        Ok(Self {
            wrist_center: v(skeleton.wrist_center),
            dorsum: v(skeleton.dorsum_marker),
            fingers,
            thumb,
            forearm: skeleton.forearm_markers.map(v),
            rom,
            rest: skeleton.rest_pose(),
            skeleton: skeleton.clone(),
        })
    }

    pub fn skeleton(&self) -> &HandSkeleton {
        &self.skeleton
    }

    pub fn rest_pose(&self) -> JointAngles<T> {
        self.rest
    }

    pub fn range_of_motion(&self) -> &[[T; 2]; N_JOINTS] {
        &self.rom
    }

    pub fn in_range(&self, angles: &JointAngles<T>) -> bool {
        (0..N_JOINTS).all(|i| angles[i] >= self.rom[i][0] && angles[i] <= self.rom[i][1])
    }

    /// Wrist rotation, forearm frame.
    pub fn wrist_rotation(w: [T; 3]) -> Mat3<T> {
        Mat3::from_xyz(w[0], w[1], w[2])
    }

    /// Hand-frame marker positions (wrist not applied) for the hand markers.
    pub(crate) fn hand_markers(&self, angles: &JointAngles<T>) -> [Vec3<T>; 21] {
        let mut out = [Vec3::zero(); 21];
        out[MARKER_DORSUM] = self.dorsum;
        for f in Finger::ALL {
            let m = self.fingers[f.idx()].markers(&angles.finger(f));
            let b = finger_marker_base(f);
            out[b..b + 4].copy_from_slice(&m);
        }
        let t = self.thumb.markers(&angles.thumb());
        out[THUMB_MARKER_BASE..THUMB_MARKER_BASE + 4].copy_from_slice(&t);
        out
    }

    /// Forward kinematics without range checks.
    pub fn fka(&self, angles: &JointAngles<T>) -> MarkerFrame<T> {
        let r = Self::wrist_rotation(angles.wrist());
        let c = self.wrist_center;
        let hand = self.hand_markers(angles);
        let mut points = [Vec3::zero(); N_KIN_MARKERS];
        for (dst, p) in points.iter_mut().zip(hand.iter()) {
            *dst = c + r * (*p - c);
        }
        points[MARKER_FAR] = self.forearm[0];
        points[MARKER_FAU] = self.forearm[1];
        points[MARKER_ELB] = self.forearm[2];
        MarkerFrame { points }
    }

    /// Forward kinematics honoring the range of motion.
    pub fn fka_checked(&self, angles: &JointAngles<T>, mode: RangeMode) -> Result<MarkerFrame<T>> {
        let mut a = *angles;
        for i in 0..N_JOINTS {
            let [lo, hi] = self.rom[i];
            if !a[i].is_finite() {
                return Err(Error::InvalidInput(format!("{} is not finite", JOINT_NAMES[i])));
            }
            if a[i] < lo || a[i] > hi {
                match mode {
                    RangeMode::Strict => {
                        return Err(Error::InvalidInput(format!(
                            "{} = {:.4} rad outside [{:.4}, {:.4}]",
                            JOINT_NAMES[i], a[i], lo, hi
                        )))
                    }
                    RangeMode::Lenient => {
                        log::warn!("{} clamped into its range of motion", JOINT_NAMES[i]);
                        a[i] = a[i].max(lo).min(hi);
                    }
                }
            }
        }
        Ok(self.fka(&a))
    }

    /// Forearm (W/w) frame built from the styloid and epicondyle markers.
    pub(crate) fn forearm_frame(points: &[Vec3<T>; N_KIN_MARKERS]) -> Option<Mat3<T>> {
        let far = points[MARKER_FAR];
        let fau = points[MARKER_FAU];
        let elb = points[MARKER_ELB];
        frame_from_pair(far - fau, elb - fau)
    }

    /// Hand (K/k) frame built from the index and little MCP markers and the
    /// dorsal marker.
    pub(crate) fn hand_frame(points: &[Vec3<T>]) -> Option<Mat3<T>> {
        let imcp = points[finger_marker_base(Finger::Index)];
        let lmcp = points[finger_marker_base(Finger::Little)];
        let dorsum = points[MARKER_DORSUM];
        frame_from_pair(imcp - lmcp, dorsum - lmcp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model() -> HandModel<f64> {
        HandModel::new(&HandSkeleton::default()).unwrap()
    }

    fn close(a: Vec3<f64>, b: Vec3<f64>, tol: f64) {
        assert!(a.distance(b) < tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn rest_pose_reproduces_reference_layout() {
        let m = model();
        let s = HandSkeleton::default();
        let f = m.fka(&JointAngles::zeros());
        close(f.points[MARKER_DORSUM], Vec3::from_f64(s.dorsum_marker), 0.0 + 1e-15);
        for fi in Finger::ALL {
            let g = &s.fingers[fi.idx()];
            let b = finger_marker_base(fi);
            close(f.points[b], Vec3::from_f64(g.mcp), 1e-15);
            // straight finger: tip at MCP + total length along the distal axis
            let (plane, line) = s.finger_reference(fi);
            let n = Vec3::from_f64(plane.normal);
            let dir = Vec3::from_f64(line.direction).cross(n);
            let len: f64 = g.segments.iter().sum();
            close(f.points[b + 3], Vec3::from_f64(g.mcp) + dir * len, 1e-12);
            for k in 0..4 {
                let off = f.points[b + k] - Vec3::from_f64(plane.point);
                assert_abs_diff_eq!(off.dot(n), 0.0, epsilon = 1e-12);
            }
        }
        let tn = Vec3::from_f64(s.planes.t.normal);
        for k in 0..4 {
            let off = f.points[THUMB_MARKER_BASE + k] - Vec3::from_f64(s.planes.t.point);
            assert_abs_diff_eq!(off.dot(tn), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn wrist_z_rotation_rotates_hand_markers() {
        let m = model();
        let rest = m.fka(&JointAngles::zeros());
        let mut a = JointAngles::zeros();
        a[2] = std::f64::consts::FRAC_PI_2;
        let rot = m.fka(&a);
        for i in 0..21 {
            let p = rest.points[i];
            // (x, y, z) -> (-y, x, z) about the wrist centre at the origin
            close(rot.points[i], Vec3::new(-p.y, p.x, p.z), 1e-12);
        }
        for i in 21..24 {
            close(rot.points[i], rest.points[i], 0.0 + 1e-15);
        }
    }

    #[test]
    fn mcp_flexion_is_a_single_hinge() {
        let m = model();
        let rest = m.fka(&JointAngles::zeros());
        let mut a = JointAngles::zeros();
        a[Finger::Index.slots().start + 2] = std::f64::consts::FRAC_PI_2;
        let f = m.fka(&a);
        let b = finger_marker_base(Finger::Index);
        let chain = &m.fingers[0];
        // hinge axis is the knuckle line through the MCP; flexion turns
        // the distal axis towards the palm (-z)
        let hinge = Mat3::axis_angle(chain.base.col(1), std::f64::consts::FRAC_PI_2);
        for k in 1..4 {
            let expected = chain.mcp + hinge * (rest.points[b + k] - chain.mcp);
            close(f.points[b + k], expected, 1e-12);
        }
        assert!(f.points[b + 3].z < -50.0);
    }

    #[test]
    fn strict_mode_rejects_out_of_range() {
        let m = model();
        let mut a = JointAngles::zeros();
        a[6] = -0.5; // delta below zero
        assert!(m.fka_checked(&a, RangeMode::Strict).is_err());
        let clamped = m.fka_checked(&a, RangeMode::Lenient).unwrap();
        assert_eq!(clamped, m.fka(&JointAngles::zeros()));
    }
}
