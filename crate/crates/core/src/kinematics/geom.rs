//! Minimal 3-D vector and rotation algebra for the hand chain.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]))
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x.as_f64(), self.y.as_f64(), self.z.as_f64()]
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::epsilon() * T::lit(16.0) {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Row-major 3x3 matrix; used for rotations and orthonormal frames whose
/// columns are the frame axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn from_columns(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> Self {
        Self {
            m: [[a.x, b.x, c.x], [a.y, b.y, c.y], [a.z, b.z, c.z]],
        }
    }

    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn rot_x(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, c, -s], [z, s, c]],
        }
    }

    pub fn rot_y(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[c, z, s], [z, o, z], [-s, z, c]],
        }
    }

    pub fn rot_z(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[c, -s, z], [s, c, z], [z, z, o]],
        }
    }

    /// Rotation about a unit axis (Rodrigues).
    pub fn axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        let (x, y, z) = (axis.x, axis.y, axis.z);
        Self {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        }
    }

    /// Intrinsic x, then y, then z: `Rx(a) Ry(b) Rz(c)`.
    pub fn from_xyz(a: T, b: T, c: T) -> Self {
        Self::rot_x(a) * Self::rot_y(b) * Self::rot_z(c)
    }

    /// Inverse of [`Mat3::from_xyz`] for `|b| < pi/2`.
    pub fn to_xyz(&self) -> (T, T, T) {
        let m = &self.m;
        let b = m[0][2].max(-T::one()).min(T::one()).asin();
        let a = (-m[1][2]).atan2(m[2][2]);
        let c = (-m[0][1]).atan2(m[0][0]);
        (a, b, c)
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut r = [[T::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j];
            }
        }
        Self { m: r }
    }
}

impl<T: Real> Mul<Vec3<T>> for Mat3<T> {
    type Output = Vec3<T>;
    fn mul(self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }
}

/// Right-handed orthonormal frame with `e1` along `primary` and `e3` along
/// `primary x secondary`. `None` when the inputs are (nearly) parallel.
pub fn frame_from_pair<T: Real>(primary: Vec3<T>, secondary: Vec3<T>) -> Option<Mat3<T>> {
    let e1 = primary.normalized()?;
    let n = e1.cross(secondary);
    if n.norm() < T::lit(1e-6) * secondary.norm().max(T::one()) {
        return None;
    }
    let e3 = n.normalized()?;
    let e2 = e3.cross(e1);
    Some(Mat3::from_columns(e1, e2, e3))
}

/// Principal axis of a small point cloud and the mean perpendicular distance
/// of the points from the line through their centroid along it.
pub fn principal_line<T: Real>(pts: &[Vec3<T>]) -> (Vec3<T>, Vec3<T>, T) {
    let n = T::of_usize(pts.len());
    let c = pts.iter().fold(Vec3::zero(), |a, &p| a + p) * (T::one() / n);
    let mut cov = [[T::zero(); 3]; 3];
    for p in pts {
        let d = *p - c;
        let v = [d.x, d.y, d.z];
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += v[i] * v[j];
            }
        }
    }
    // power iteration on the covariance, seeded with the chord
    let chord = *pts.last().unwrap() - pts[0];
    let mut dir = chord.normalized().unwrap_or(Vec3::unit_x());
    let cm = Mat3 { m: cov };
    for _ in 0..64 {
        match (cm * dir).normalized() {
            Some(next) => {
                let done = (next - dir).norm() < T::lit(1e-14);
                dir = next;
                if done {
                    break;
                }
            }
            None => break,
        }
    }
    let mean_dist = pts
        .iter()
        .map(|&p| {
            let d = p - c;
            (d - dir * d.dot(dir)).norm()
        })
        .fold(T::zero(), |a, b| a + b)
        / n;
    (c, dir, mean_dist)
}

/// Unit normal of the least-squares plane through `pts` (eigenvector of the
/// smallest covariance eigenvalue), via the eigen-decomposition of the 3x3
/// scatter matrix with Jacobi sweeps.
pub fn plane_normal<T: Real>(pts: &[Vec3<T>]) -> Vec3<T> {
    let n = T::of_usize(pts.len());
    let c = pts.iter().fold(Vec3::zero(), |a, &p| a + p) * (T::one() / n);
    let mut a = [[T::zero(); 3]; 3];
    for p in pts {
        let d = *p - c;
        let v = [d.x, d.y, d.z];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += v[i] * v[j];
            }
        }
    }
    let (vals, vecs) = jacobi_eigen(a);
    let mut k = 0;
    for i in 1..3 {
        if vals[i] < vals[k] {
            k = i;
        }
    }
    Vec3::new(vecs[0][k], vecs[1][k], vecs[2][k])
}

/// Symmetric 3x3 eigen-decomposition; eigenvectors are the columns of the
/// returned matrix.
pub fn jacobi_eigen<T: Real>(mut a: [[T; 3]; 3]) -> ([T; 3], [[T; 3]; 3]) {
    let mut v = Mat3::<T>::identity().m;
    for _sweep in 0..50 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let scale = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= T::epsilon() * T::epsilon() * scale.max(T::min_positive_value()) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vkp = row[p];
                let vkq = row[q];
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn xyz_round_trip() {
        let r = Mat3::from_xyz(0.1, -0.2, 0.3);
        let (a, b, c) = r.to_xyz();
        assert_abs_diff_eq!(a, 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(b, -0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(c, 0.3, epsilon = 1e-14);
    }

    #[test]
    fn rodrigues_matches_elementary() {
        let a = Mat3::axis_angle(Vec3::unit_z(), 0.7f64);
        let b = Mat3::rot_z(0.7);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(a.m[i][j], b.m[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn plane_normal_of_tilted_points() {
        let r = Mat3::from_xyz(0.3, 0.2, -0.5f64);
        let pts: Vec<Vec3<f64>> = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [13.0, 7.0, 0.0], [2.0, 9.0, 0.0]]
            .iter()
            .map(|&p| r * Vec3::from_f64(p))
            .collect();
        let n = plane_normal(&pts);
        let expect = r * Vec3::unit_z();
        assert_abs_diff_eq!(n.dot(expect).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn principal_line_of_collinear_points() {
        let pts: Vec<Vec3<f64>> = (0..4).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 1.0)).collect();
        let (_, dir, d) = principal_line(&pts);
        assert!(d < 1e-12);
        assert_abs_diff_eq!(dir.dot(Vec3::new(1.0, 2.0, 0.0).normalized().unwrap()).abs(), 1.0, epsilon = 1e-12);
    }
}
