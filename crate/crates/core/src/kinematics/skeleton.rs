//! Hand skeleton parameters and marker layout.
//!
//! The hand frame has its origin at the wrist joint centre, `x` pointing
//! distally along the middle metacarpal, `y` towards the thumb (radial) and
//! `z` dorsally. At zero wrist angles it coincides with the forearm frame.
//!
//! Reference planes and lines:
//! - `W`/`w`: forearm plane through the two styloid markers and the lateral
//!   epicondyle, and the styloid line.
//! - `K`/`k`: zero-flexion plane and transverse knuckle line of the index and
//!   middle fingers. `H`/`h` and `Q`/`q` play the same role for the ring and
//!   little fingers, tilted with the palmar arch.
//! - `T`/`t`: the thumb zero plane and its normal line.
//!
//! A long finger's flexion plane is perpendicular to its knuckle line when
//! `alpha = beta = 0`; its markers lie on the zero plane when its three
//! flexion angles are zero. Finger and thumb markers sit on the joint
//! centres (MCP, PIP, DIP, tip).

use serde::{Deserialize, Serialize};

use super::angles::{Finger, JointAngles, JOINT_NAMES, N_JOINTS};
use super::geom::{Mat3, Vec3};
use crate::error::{Error, Result};

pub const N_HAND_MARKERS: usize = 21;

/// Hand markers, then the forearm/arm markers needed for the wrist frame.
pub const KINEMATIC_MARKERS: [&str; 24] = [
    "HDW", "IMCP", "IPIP", "IDIP", "ITIP", "MMCP", "MPIP", "MDIP", "MTIP", "RMCP", "RPIP",
    "RDIP", "RTIP", "LMCP", "LPIP", "LDIP", "LTIP", "TCMC", "TMCP", "TIPJ", "TTIP", "FAR",
    "FAU", "ELB",
];

/// Body markers recorded with the hand markers: styloids, epicondyles, arm
/// and trunk. Only the first three enter the kinematic model.
pub const BODY_MARKERS: [&str; 12] = [
    "FAR", "FAU", "ELB", "ELM", "UAR", "SHO", "C7", "T10", "CLAV", "STRN", "SHL", "PLV",
];

pub const MARKER_DORSUM: usize = 0;
pub const MARKER_FAR: usize = 21;
pub const MARKER_FAU: usize = 22;
pub const MARKER_ELB: usize = 23;

/// First marker slot of a finger (its MCP marker); four consecutive slots.
pub fn finger_marker_base(f: Finger) -> usize {
    1 + 4 * f.idx()
}

pub const THUMB_MARKER_BASE: usize = 17;

/// Full 33-label marker set (21 hand + 12 body) in file order.
pub fn all_marker_labels() -> Vec<String> {
    KINEMATIC_MARKERS[..N_HAND_MARKERS]
        .iter()
        .chain(BODY_MARKERS.iter())
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: [f64; 3],
    pub normal: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub point: [f64; 3],
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planes {
    pub w: Plane,
    pub k: Plane,
    pub t: Plane,
    pub h: Plane,
    pub q: Plane,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lines {
    pub w: Line,
    pub k: Line,
    pub h: Line,
    pub q: Line,
    pub t: Line,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerGeometry {
    /// MCP joint centre, hand frame, mm.
    pub mcp: [f64; 3],
    /// Proximal, middle and distal phalanx lengths, mm.
    pub segments: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThumbGeometry {
    /// Base (CMC) joint centre, hand frame, mm.
    pub base: [f64; 3],
    /// Unit direction of the straight thumb, lying in plane T.
    pub rest_direction: [f64; 3],
    /// Metacarpal, proximal and distal segment lengths, mm.
    pub segments: [f64; 3],
}

/// Logistic gate applied to the finger flexion-plane angles. The argument is
/// `(zeta - offset) / scale` with `zeta` in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaGate {
    pub offset_mm: f64,
    pub scale_mm: f64,
}

impl ZetaGate {
    pub fn gate(&self, zeta_mm: f64) -> f64 {
        1.0 / (1.0 + (-(zeta_mm - self.offset_mm) / self.scale_mm).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandSkeleton {
    pub wrist_center: [f64; 3],
    /// Dorsal hand marker (HDW), hand frame.
    pub dorsum_marker: [f64; 3],
    /// Index, middle, ring, little.
    pub fingers: [FingerGeometry; 4],
    pub thumb: ThumbGeometry,
    /// Radial styloid, ulnar styloid and lateral epicondyle, forearm frame.
    pub forearm_markers: [[f64; 3]; 3],
    /// Remaining body markers (static), forearm frame, in `BODY_MARKERS[3..]` order.
    pub body_markers: [[f64; 3]; 9],
    pub planes: Planes,
    pub lines: Lines,
    /// Rest pose, degrees.
    pub rest_pose_deg: [f64; N_JOINTS],
    /// Per-joint `[min, max]` range of motion, degrees.
    pub range_of_motion_deg: [[f64; 2]; N_JOINTS],
    pub zeta_gate: ZetaGate,
}

fn rot_vec(r: Mat3<f64>, v: [f64; 3]) -> [f64; 3] {
    (r * Vec3::from_f64(v)).to_f64()
}

impl Default for HandSkeleton {
    /// Adult hand of average proportions.
    fn default() -> Self {
        let ring_frame = Mat3::rot_z(-0.04) * Mat3::rot_x(-0.12);
        let little_frame = Mat3::rot_z(-0.10) * Mat3::rot_x(-0.25);
        let thumb_frame = Mat3::rot_z(0.55) * Mat3::rot_x(1.0);
        let ex = [1.0, 0.0, 0.0];
        let ey = [0.0, 1.0, 0.0];
        let ez = [0.0, 0.0, 1.0];

        let index_mcp = [85.0, 25.0, 0.0];
        let middle_mcp = [88.0, 6.0, 0.0];
        let ring_mcp = [84.0, -12.0, -3.0];
        let little_mcp = [76.0, -28.0, -8.0];
        let thumb_base = [28.0, 22.0, -12.0];

        let far = [-5.0, 27.0, 0.0];
        let fau = [-5.0, -25.0, 0.0];
        let elb = [-255.0, 0.0, 0.0];

        let mut rom = [[0.0; 2]; N_JOINTS];
        rom[0] = [-35.0, 35.0];
        rom[1] = [-60.0, 60.0];
        rom[2] = [-25.0, 25.0];
        for f in Finger::ALL {
            let s = f.slots().start;
            rom[s] = [-12.0, 12.0];
            rom[s + 1] = [-15.0, 15.0];
            rom[s + 2] = [-20.0, 90.0];
            rom[s + 3] = [0.0, 100.0];
            rom[s + 4] = [0.0, 80.0];
        }
        rom[23] = [-15.0, 50.0];
        rom[24] = [-25.0, 25.0];
        rom[25] = [-10.0, 60.0];
        rom[26] = [-15.0, 15.0];
        rom[27] = [-10.0, 80.0];
        rom[28] = [-10.0, 10.0];

        Self {
            wrist_center: [0.0; 3],
            dorsum_marker: [35.0, 0.0, 14.0],
            fingers: [
                FingerGeometry { mcp: index_mcp, segments: [40.0, 23.0, 20.0] },
                FingerGeometry { mcp: middle_mcp, segments: [45.0, 27.0, 21.0] },
                FingerGeometry { mcp: ring_mcp, segments: [42.0, 26.0, 21.0] },
                FingerGeometry { mcp: little_mcp, segments: [33.0, 19.0, 18.0] },
            ],
            thumb: ThumbGeometry {
                base: thumb_base,
                rest_direction: rot_vec(thumb_frame, ex),
                segments: [44.0, 32.0, 27.0],
            },
            forearm_markers: [far, fau, elb],
            body_markers: [
                [-250.0, -30.0, -10.0],
                [-400.0, 10.0, 20.0],
                [-560.0, 30.0, 60.0],
                [-600.0, -150.0, 150.0],
                [-450.0, -180.0, 180.0],
                [-560.0, -120.0, 90.0],
                [-430.0, -100.0, 120.0],
                [-560.0, -330.0, 60.0],
                [-150.0, -200.0, 150.0],
            ],
            planes: Planes {
                w: Plane { point: far, normal: ez },
                k: Plane { point: index_mcp, normal: ez },
                t: Plane { point: thumb_base, normal: rot_vec(thumb_frame, ez) },
                h: Plane { point: ring_mcp, normal: rot_vec(ring_frame, ez) },
                q: Plane { point: little_mcp, normal: rot_vec(little_frame, ez) },
            },
            lines: Lines {
                w: Line { point: fau, direction: ey },
                k: Line { point: index_mcp, direction: ey },
                h: Line { point: ring_mcp, direction: rot_vec(ring_frame, ey) },
                q: Line { point: little_mcp, direction: rot_vec(little_frame, ey) },
                t: Line { point: thumb_base, direction: rot_vec(thumb_frame, ez) },
            },
            rest_pose_deg: [0.0; N_JOINTS],
            range_of_motion_deg: rom,
            zeta_gate: ZetaGate { offset_mm: 3.0, scale_mm: 1.0 },
        }
    }
}

fn unit_check(name: &str, v: [f64; 3]) -> Result<()> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("skeleton: {name} is not unit norm (|v| = {n})")));
    }
    Ok(())
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

impl HandSkeleton {
    /// Zero plane and knuckle line of a long finger.
    pub fn finger_reference(&self, f: Finger) -> (&Plane, &Line) {
        match f {
            Finger::Index | Finger::Middle => (&self.planes.k, &self.lines.k),
            Finger::Ring => (&self.planes.h, &self.lines.h),
            Finger::Little => (&self.planes.q, &self.lines.q),
        }
    }

    pub fn rest_pose<T: crate::Real>(&self) -> JointAngles<T> {
        JointAngles::from_degrees(&self.rest_pose_deg)
    }

    /// Range of motion in radians.
    pub fn range_of_motion(&self) -> [[f64; 2]; N_JOINTS] {
        self.range_of_motion_deg
            .map(|[lo, hi]| [lo.to_radians(), hi.to_radians()])
    }

    pub fn validate(&self) -> Result<()> {
        for (i, f) in self.fingers.iter().enumerate() {
            if f.segments.iter().any(|&l| !(l > 0.0)) {
                return Err(Error::Config(format!("skeleton: finger {i} has a non-positive segment")));
            }
        }
        if self.thumb.segments.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("skeleton: thumb has a non-positive segment".into()));
        }
        let p = &self.planes;
        for (name, pl) in [("W", &p.w), ("K", &p.k), ("T", &p.t), ("H", &p.h), ("Q", &p.q)] {
            unit_check(&format!("plane {name} normal"), pl.normal)?;
        }
        let l = &self.lines;
        for (name, ln) in [("w", &l.w), ("k", &l.k), ("h", &l.h), ("q", &l.q), ("t", &l.t)] {
            unit_check(&format!("line {name} direction"), ln.direction)?;
        }
        unit_check("thumb rest direction", self.thumb.rest_direction)?;
        for f in Finger::ALL {
            let (plane, line) = self.finger_reference(f);
            let g = &self.fingers[f.idx()];
            if dot(sub(g.mcp, plane.point), plane.normal).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "skeleton: {} MCP does not lie on its zero plane",
                    f.name()
                )));
            }
            if dot(line.direction, plane.normal).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "skeleton: {} knuckle line is not parallel to its zero plane",
                    f.name()
                )));
            }
        }
        if dot(sub(self.thumb.base, p.t.point), p.t.normal).abs() > 1e-6
            || dot(self.thumb.rest_direction, p.t.normal).abs() > 1e-9
        {
            return Err(Error::Config("skeleton: thumb rest line does not lie in plane T".into()));
        }
        if dot(l.t.direction, p.t.normal).abs() < 1.0 - 1e-9 {
            return Err(Error::Config("skeleton: line t must be normal to plane T".into()));
        }
        for (i, [lo, hi]) in self.range_of_motion_deg.iter().enumerate() {
            if !(lo <= hi) {
                return Err(Error::Config(format!("skeleton: empty range for {}", JOINT_NAMES[i])));
            }
            let r = self.rest_pose_deg[i];
            if r < *lo || r > *hi {
                return Err(Error::Config(format!(
                    "skeleton: rest angle of {} outside its range",
                    JOINT_NAMES[i]
                )));
            }
        }
        // closed-form wrist and thumb extraction need |angle| < 90 deg
        for i in [1usize, 23, 25, 27] {
            let [lo, hi] = self.range_of_motion_deg[i];
            if lo <= -90.0 || hi >= 90.0 {
                return Err(Error::Config(format!(
                    "skeleton: range of {} must stay inside (-90, 90) degrees",
                    JOINT_NAMES[i]
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("skeleton serializes")
    }
}
