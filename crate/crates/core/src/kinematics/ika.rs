//! Inverse kinematics in three phases: wrist (closed form), long fingers
//! (flexion-plane search followed by in-plane angle extraction) and thumb
//! (closed form).

use serde::{Deserialize, Serialize};

use super::angles::{Finger, JointAngles};
use super::fka::{HandModel, MarkerFrame, N_KIN_MARKERS};
use super::geom::{plane_normal, principal_line, Mat3, Vec3};
use super::optim::{minimize_box, OptimOptions, OptimReport};
use super::skeleton::{
    finger_marker_base, KINEMATIC_MARKERS, MARKER_DORSUM, MARKER_FAU, N_HAND_MARKERS,
    THUMB_MARKER_BASE,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkaOptions {
    pub optim: OptimOptions,
    /// Apply the logistic zeta gate to the flexion-plane angles.
    pub gate: bool,
}

impl Default for IkaOptions {
    fn default() -> Self {
        Self {
            optim: OptimOptions::default(),
            gate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerSolution<T> {
    /// (alpha, beta, gamma, delta, epsilon), radians.
    pub angles: [T; 5],
    /// Mean marker distance from the markers' principal line, mm.
    pub zeta_mm: T,
    pub gate: T,
    /// Mean marker reprojection error, mm.
    pub residual_mm: T,
    pub optim: OptimReport,
}

impl<T> FingerSolution<T> {
    pub fn converged(&self) -> bool {
        self.optim.converged()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkaResult<T> {
    pub angles: JointAngles<T>,
    /// Mean position error over the 21 hand markers, mm.
    pub residual_mm: T,
    /// Mean error of the markers each phase accounts for: hand-rigid
    /// markers, long-finger markers, thumb markers.
    pub per_phase_residual: [T; 3],
    pub fingers: Vec<FingerSolution<T>>,
}

/// Hand-rigid markers used for the wrist residual.
const RIGID: [usize; 6] = [MARKER_DORSUM, 1, 5, 9, 13, THUMB_MARKER_BASE];

fn wrap<T: Real>(a: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut v = a;
    while v > pi {
        v -= two_pi;
    }
    while v <= -pi {
        v += two_pi;
    }
    v
}

fn mean_distance<T: Real>(a: &[Vec3<T>], b: &[Vec3<T>]) -> T {
    let s = a.iter().zip(b).fold(T::zero(), |acc, (p, q)| acc + p.distance(*q));
    s / T::of_usize(a.len())
}

impl<T: Real> HandModel<T> {
    fn check_complete(frame: &MarkerFrame<T>) -> Result<()> {
        match frame.first_missing() {
            Some(i) => Err(Error::MissingMarker(KINEMATIC_MARKERS[i].to_string())),
            None => Ok(()),
        }
    }

    /// Express a frame in the skeleton's forearm coordinates using the
    /// forearm markers, removing any global rigid motion.
    pub fn canonicalize(&self, frame: &MarkerFrame<T>) -> Result<MarkerFrame<T>> {
        Self::check_complete(frame)?;
        let reference = self.fka(&JointAngles::zeros());
        let f_ref = Self::forearm_frame(&reference.points).expect("skeleton forearm markers are valid");
        let f_obs = Self::forearm_frame(&frame.points)
            .ok_or_else(|| Error::Degenerate("forearm markers are collinear".into()))?;
        let r = f_ref * f_obs.transpose();
        let t = reference.points[MARKER_FAU] - r * frame.points[MARKER_FAU];
        Ok(frame.transformed(&r, t))
    }

    /// Phase 1: wrist angles of a canonical frame.
    pub fn ika_wrist(&self, canonical: &MarkerFrame<T>) -> Result<[T; 3]> {
        Self::check_complete(canonical)?;
        let reference = self.hand_markers(&JointAngles::zeros());
        let h_ref = Self::hand_frame(&reference).expect("skeleton hand markers are valid");
        let h_obs = Self::hand_frame(&canonical.points)
            .ok_or_else(|| Error::Degenerate("hand markers HDW, IMCP, LMCP are collinear".into()))?;
        let r = h_obs * h_ref.transpose();
        let (a, b, c) = r.to_xyz();
        Ok([a, b, c])
    }

    /// Hand-frame markers after undoing the wrist rotation.
    fn unwrist(&self, canonical: &MarkerFrame<T>, wrist: [T; 3]) -> [Vec3<T>; N_KIN_MARKERS] {
        let rt = Self::wrist_rotation(wrist).transpose();
        let c = self.wrist_center;
        canonical.points.map(|p| c + rt * (p - c))
    }

    /// In-plane flexion angles of four markers for a given flexion plane.
    fn flexion_angles(frame: &Mat3<T>, m: &[Vec3<T>; 4]) -> [T; 3] {
        let ft = frame.transpose();
        let mut phi = [T::zero(); 3];
        for k in 0..3 {
            let u = ft * (m[k + 1] - m[k]);
            phi[k] = (-u.z).atan2(u.x);
        }
        [phi[0], wrap(phi[1] - phi[0]), wrap(phi[2] - phi[1])]
    }

    /// Phase 2 for one long finger, markers (MCP, PIP, DIP, tip) in the hand
    /// frame.
    pub fn ika_finger(&self, m: &[Vec3<T>; 4], finger: Finger, opts: &IkaOptions) -> Result<FingerSolution<T>> {
        if let Some(k) = m.iter().position(|p| !p.is_finite()) {
            return Err(Error::MissingMarker(
                KINEMATIC_MARKERS[finger_marker_base(finger) + k].to_string(),
            ));
        }
        let chain = &self.fingers[finger.idx()];
        let slots = finger.slots();
        let lo = [self.rom[slots.start][0].as_f64(), self.rom[slots.start + 1][0].as_f64()];
        let hi = [self.rom[slots.start][1].as_f64(), self.rom[slots.start + 1][1].as_f64()];

        let (_, _, zeta) = principal_line(m);
        let bt = chain.base.transpose();
        let length = chain.segments.iter().fold(T::zero(), |a, &b| a + b);
        // start from the best-fit plane, or the chord direction when the
        // markers are (nearly) collinear and the plane is undetermined
        let (a0, b0) = if zeta > length * T::lit(1e-4) {
            let mut n = bt * plane_normal(m);
            if n.y < T::zero() {
                n = -n;
            }
            (n.z.max(-T::one()).min(T::one()).asin(), (-n.x).atan2(n.y))
        } else {
            let u = bt * (m[3] - m[0]);
            (T::zero(), u.y.atan2(u.x))
        };
        let x0 = [a0.as_f64().clamp(lo[0], hi[0]), b0.as_f64().clamp(lo[1], hi[1])];

        let objective = |x: &[f64]| -> f64 {
            let (a, b) = (T::lit(x[0]), T::lit(x[1]));
            let [g, d, e] = Self::flexion_angles(&chain.plane_frame(a, b), m);
            let pred = chain.markers(&[a, b, g, d, e]);
            let sq = pred
                .iter()
                .zip(m)
                .fold(T::zero(), |acc, (p, q)| acc + (*p - *q).dot(*p - *q));
            (sq / T::lit(4.0)).as_f64()
        };
        let report = minimize_box(objective, &x0, &lo, &hi, &opts.optim);

        let gate = if opts.gate {
            T::lit(self.skeleton.zeta_gate.gate(zeta.as_f64()))
        } else {
            T::one()
        };
        let alpha = T::lit(report.x[0]) * gate;
        let beta = T::lit(report.x[1]) * gate;
        let [g, d, e] = Self::flexion_angles(&chain.plane_frame(alpha, beta), m);
        let angles = [alpha, beta, g, d, e];
        let residual = mean_distance(&chain.markers(&angles), m);
        Ok(FingerSolution {
            angles,
            zeta_mm: zeta,
            gate,
            residual_mm: residual,
            optim: report,
        })
    }

    /// Phase 3: thumb angles from (CMC, MCP, IP, tip) markers in the hand
    /// frame. Each joint is read after rotating its parent segment to zero.
    pub fn ika_thumb(&self, m: &[Vec3<T>; 4]) -> Result<[T; 6]> {
        if let Some(k) = m.iter().position(|p| !p.is_finite()) {
            return Err(Error::MissingMarker(KINEMATIC_MARKERS[THUMB_MARKER_BASE + k].to_string()));
        }
        let mut frame = self.thumb.base;
        let mut out = [T::zero(); 6];
        for k in 0..3 {
            let d = (m[k + 1] - m[k])
                .normalized()
                .ok_or_else(|| Error::Degenerate(format!("thumb markers {k} and {} coincide", k + 1)))?;
            let v = frame.transpose() * d;
            let flex = (-v.z).max(-T::one()).min(T::one()).asin();
            let abd = v.y.atan2(v.x);
            out[2 * k] = flex;
            out[2 * k + 1] = abd;
            frame = frame * Mat3::rot_z(abd) * Mat3::rot_y(flex);
        }
        Ok(out)
    }

    /// Full three-phase solve of one marker frame.
    pub fn ika(&self, frame: &MarkerFrame<T>, opts: &IkaOptions) -> Result<IkaResult<T>> {
        let canonical = self.canonicalize(frame)?;
        let wrist = self.ika_wrist(&canonical)?;
        let hand = self.unwrist(&canonical, wrist);

        let mut angles = JointAngles::zeros();
        angles.set_wrist(wrist);
        let mut fingers = Vec::with_capacity(4);
        for f in Finger::ALL {
            let b = finger_marker_base(f);
            let m: [Vec3<T>; 4] = hand[b..b + 4].try_into().unwrap();
            let sol = self.ika_finger(&m, f, opts)?;
            angles.set_finger(f, sol.angles);
            fingers.push(sol);
        }
        let tm: [Vec3<T>; 4] = hand[THUMB_MARKER_BASE..THUMB_MARKER_BASE + 4].try_into().unwrap();
        angles.set_thumb(self.ika_thumb(&tm)?);

        let pred = self.fka(&angles);
        let obs = &canonical.points;
        let residual = mean_distance(&pred.points[..N_HAND_MARKERS], &obs[..N_HAND_MARKERS]);
        let pick = |idx: &mut dyn Iterator<Item = usize>| {
            let (mut s, mut n) = (T::zero(), 0usize);
            for i in idx {
                s += pred.points[i].distance(obs[i]);
                n += 1;
            }
            s / T::of_usize(n)
        };
        let rigid = pick(&mut RIGID.iter().copied());
        let finger_res = pick(&mut Finger::ALL.iter().flat_map(|&f| {
            let b = finger_marker_base(f);
            b..b + 4
        }));
        let thumb_res = pick(&mut (THUMB_MARKER_BASE..THUMB_MARKER_BASE + 4));
        Ok(IkaResult {
            angles,
            residual_mm: residual,
            per_phase_residual: [rigid, finger_res, thumb_res],
            fingers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::skeleton::HandSkeleton;
    use approx::assert_abs_diff_eq;

    fn model() -> HandModel<f64> {
        HandModel::new(&HandSkeleton::default()).unwrap()
    }

    #[test]
    fn rest_pose_round_trip() {
        let m = model();
        let frame = m.fka(&JointAngles::zeros());
        let r = m.ika(&frame, &IkaOptions::default()).unwrap();
        for i in 0..29 {
            assert_abs_diff_eq!(r.angles[i], 0.0, epsilon = 1e-9);
        }
        assert!(r.residual_mm < 1e-9);
        // straight fingers: zeta vanishes and the gate suppresses the plane
        for f in &r.fingers {
            assert!(f.zeta_mm < 1e-9);
            assert!(f.gate < 0.1);
        }
    }

    #[test]
    fn wrist_round_trip() {
        let m = model();
        let mut a = JointAngles::zeros();
        a.set_wrist([0.1, -0.2, 0.3]);
        let frame = m.fka(&a);
        let w = m.ika_wrist(&m.canonicalize(&frame).unwrap()).unwrap();
        assert_abs_diff_eq!(w[0], 0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(w[1], -0.2, epsilon = 1e-9);
        assert_abs_diff_eq!(w[2], 0.3, epsilon = 1e-9);
    }

    #[test]
    fn collinear_hand_markers_are_degenerate() {
        let m = model();
        let mut frame = m.fka(&JointAngles::zeros());
        let i = frame.points[1];
        let l = frame.points[13];
        frame.points[MARKER_DORSUM] = i + (l - i) * 0.5;
        let err = m.ika_wrist(&frame).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn finger_flexion_round_trip() {
        let m = model();
        let mut a = JointAngles::zeros();
        a.set_finger(Finger::Middle, [0.0, 0.0, 0.6, 0.4, 0.2]);
        let r = m.ika(&m.fka(&a), &IkaOptions::default()).unwrap();
        let got = r.angles.finger(Finger::Middle);
        for (g, e) in got[2..].iter().zip([0.6, 0.4, 0.2]) {
            assert_abs_diff_eq!(*g, e, epsilon = 1e-3);
        }
    }

    #[test]
    fn finger_plane_recovered_when_flexed() {
        let m = model();
        let mut a = JointAngles::zeros();
        let truth = [0.1, -0.15, 0.5, 0.9, 0.6];
        a.set_finger(Finger::Ring, truth);
        let frame = m.fka(&a);
        let ungated = IkaOptions { gate: false, ..Default::default() };
        let r = m.ika(&frame, &ungated).unwrap();
        let got = r.angles.finger(Finger::Ring);
        for (g, e) in got.iter().zip(truth) {
            assert_abs_diff_eq!(*g, e, epsilon = 1e-6);
        }
        assert!(r.fingers[Finger::Ring.idx()].residual_mm < 1e-6);

        // gated: the plane angles shrink by the logistic of zeta
        let r = m.ika(&frame, &IkaOptions::default()).unwrap();
        let sol = &r.fingers[Finger::Ring.idx()];
        let expect_gate = m.skeleton().zeta_gate.gate(sol.zeta_mm);
        assert_abs_diff_eq!(sol.gate, expect_gate, epsilon = 1e-15);
        assert!(sol.gate < 1.0 && sol.gate > 0.5);
        assert_abs_diff_eq!(sol.angles[0], 0.1 * sol.gate, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.angles[1], -0.15 * sol.gate, epsilon = 1e-6);
    }

    #[test]
    fn thumb_round_trip_and_single_hinge() {
        let m = model();
        let mut a = JointAngles::zeros();
        a.set_thumb([0.3, -0.2, 0.5, 0.1, 0.7, -0.05]);
        let r = m.ika(&m.fka(&a), &IkaOptions::default()).unwrap();
        for (g, e) in r.angles.thumb().iter().zip(a.thumb()) {
            assert_abs_diff_eq!(*g, e, epsilon = 1e-9);
        }
        let mut b = JointAngles::zeros();
        b[23] = 0.4;
        let r = m.ika(&m.fka(&b), &IkaOptions::default()).unwrap();
        assert_abs_diff_eq!(r.angles[23], 0.4, epsilon = 1e-12);
        for i in 24..29 {
            assert_abs_diff_eq!(r.angles[i], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn missing_marker_is_named() {
        let m = model();
        let mut frame = m.fka(&JointAngles::zeros());
        frame.points[7].x = f64::NAN;
        match m.ika(&frame, &IkaOptions::default()) {
            Err(Error::MissingMarker(name)) => assert_eq!(name, "MDIP"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn global_rotation_is_removed() {
        let m = model();
        let mut a = JointAngles::zeros();
        a.set_wrist([0.2, 0.3, -0.1]);
        a.set_finger(Finger::Index, [0.05, 0.1, 0.7, 0.5, 0.3]);
        a.set_thumb([0.2, 0.1, 0.3, 0.0, 0.2, 0.0]);
        let frame = m.fka(&a);
        let g = Mat3::from_xyz(0.7, -0.4, 1.9);
        let moved = frame.transformed(&g, Vec3::new(100.0, -50.0, 20.0));
        let opts = IkaOptions::default();
        let r0 = m.ika(&frame, &opts).unwrap();
        let r1 = m.ika(&moved, &opts).unwrap();
        for i in 0..29 {
            assert_abs_diff_eq!(r0.angles[i], r1.angles[i], epsilon = 1e-9);
        }
        assert_abs_diff_eq!(r0.residual_mm, r1.residual_mm, epsilon = 1e-9);
    }

    #[test]
    fn hand_rotation_about_wrist_composes_with_wrist_angles() {
        let m = model();
        let mut a = JointAngles::zeros();
        a.set_wrist([0.1, 0.2, 0.05]);
        let frame = m.fka(&a);
        let extra = Mat3::rot_z(0.2);
        let mut moved = frame.clone();
        for p in moved.points[..N_HAND_MARKERS].iter_mut() {
            *p = extra * *p;
        }
        let w = m.ika_wrist(&m.canonicalize(&moved).unwrap()).unwrap();
        let expect = extra * Mat3::from_xyz(0.1, 0.2, 0.05);
        let got = Mat3::from_xyz(w[0], w[1], w[2]);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(got.m[i][j], expect.m[i][j], epsilon = 1e-12);
            }
        }
    }
}
