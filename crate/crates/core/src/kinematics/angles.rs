use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

pub const N_JOINTS: usize = 29;
pub const N_FINGERS: usize = 4;

pub const WRIST: std::ops::Range<usize> = 0..3;
pub const THUMB: std::ops::Range<usize> = 23..29;

/// Long fingers in model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finger {
    Index,
    Middle,
    Ring,
    Little,
}

impl Finger {
    pub const ALL: [Finger; 4] = [Finger::Index, Finger::Middle, Finger::Ring, Finger::Little];

    pub fn idx(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Finger::Index => "index",
            Finger::Middle => "middle",
            Finger::Ring => "ring",
            Finger::Little => "little",
        }
    }

    /// Slots of (alpha, beta, gamma, delta, epsilon) in the joint vector.
    pub fn slots(self) -> std::ops::Range<usize> {
        let s = 3 + 5 * self.idx();
        s..s + 5
    }
}

/// Joint names in vector order.
pub const JOINT_NAMES: [&str; N_JOINTS] = [
    "wrist_x",
    "wrist_y",
    "wrist_z",
    "index_alpha",
    "index_beta",
    "index_gamma",
    "index_delta",
    "index_epsilon",
    "middle_alpha",
    "middle_beta",
    "middle_gamma",
    "middle_delta",
    "middle_epsilon",
    "ring_alpha",
    "ring_beta",
    "ring_gamma",
    "ring_delta",
    "ring_epsilon",
    "little_alpha",
    "little_beta",
    "little_gamma",
    "little_delta",
    "little_epsilon",
    "thumb_mp_flex",
    "thumb_mp_abd",
    "thumb_pip_flex",
    "thumb_pip_abd",
    "thumb_dip_flex",
    "thumb_dip_abd",
];

/// The 29 hand joint angles in radians: wrist (3), four fingers of
/// (alpha, beta, gamma, delta, epsilon), thumb (3 joints x flexion/abduction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointAngles<T>(pub [T; N_JOINTS]);

impl<T: Real> JointAngles<T> {
    pub fn zeros() -> Self {
        Self([T::zero(); N_JOINTS])
    }

    pub fn from_slice(v: &[T]) -> Option<Self> {
        let arr: [T; N_JOINTS] = v.try_into().ok()?;
        Some(Self(arr))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn wrist(&self) -> [T; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn set_wrist(&mut self, w: [T; 3]) {
        self.0[WRIST].copy_from_slice(&w);
    }

    pub fn finger(&self, f: Finger) -> [T; 5] {
        self.0[f.slots()].try_into().unwrap()
    }

    pub fn set_finger(&mut self, f: Finger, v: [T; 5]) {
        self.0[f.slots()].copy_from_slice(&v);
    }

    pub fn thumb(&self) -> [T; 6] {
        self.0[THUMB].try_into().unwrap()
    }

    pub fn set_thumb(&mut self, v: [T; 6]) {
        self.0[THUMB].copy_from_slice(&v);
    }

    pub fn cast<U: Real>(&self) -> JointAngles<U> {
        JointAngles(self.0.map(|v| U::lit(v.as_f64())))
    }

    pub fn to_degrees(&self) -> [f64; N_JOINTS] {
        self.0.map(|v| v.as_f64().to_degrees())
    }

    pub fn from_degrees(d: &[f64; N_JOINTS]) -> Self {
        Self(d.map(|v| T::lit(v.to_radians())))
    }
}

impl<T> Index<usize> for JointAngles<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for JointAngles<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

/// Normalization step: 45 degrees maps to one unit.
pub const NORMALIZATION_STEP_DEG: f64 = 45.0;

/// `(angles - rest) / 45deg`, elementwise.
pub fn normalize_angles<T: Real>(angles: &JointAngles<T>, rest: &JointAngles<T>) -> [T; N_JOINTS] {
    let step = T::lit(NORMALIZATION_STEP_DEG.to_radians());
    std::array::from_fn(|i| (angles[i] - rest[i]) / step)
}

/// Exact inverse of [`normalize_angles`].
pub fn denormalize_angles<T: Real>(normalized: &[T], rest: &JointAngles<T>) -> JointAngles<T> {
    let step = T::lit(NORMALIZATION_STEP_DEG.to_radians());
    JointAngles(std::array::from_fn(|i| normalized[i] * step + rest[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slots_cover_vector() {
        assert_eq!(Finger::Index.slots(), 3..8);
        assert_eq!(Finger::Little.slots(), 18..23);
        assert_eq!(JOINT_NAMES[23], "thumb_mp_flex");
    }

    #[test]
    fn rest_normalizes_to_zero_and_45_to_one() {
        let mut rest = JointAngles::<f64>::zeros();
        rest[5] = 0.2;
        assert_eq!(normalize_angles(&rest, &rest), [0.0; N_JOINTS]);
        let mut a = rest;
        a[5] += 45f64.to_radians();
        let n = normalize_angles(&a, &rest);
        assert!((n[5] - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn denormalize_inverts_normalize(v in prop::array::uniform29(-3.0f64..3.0), r in prop::array::uniform29(-1.0f64..1.0)) {
            let a = JointAngles(v);
            let rest = JointAngles(r);
            let back = denormalize_angles(&normalize_angles(&a, &rest), &rest);
            for i in 0..N_JOINTS {
                prop_assert!((back[i] - a[i]).abs() < 1e-12);
            }
        }
    }
}
