//! Points and axis-aligned boxes in meters.

use core::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Spacing of the coordinate lattice, 2^-20 m.
///
/// Generated coordinates are snapped to this lattice so that translating a
/// world by a lattice vector (any whole number of meters, for example) leaves
/// every coordinate difference bit-identical.
pub const LATTICE: f64 = 1.0 / (1u64 << 20) as f64;

pub fn snap(v: f64) -> f64 {
    libm::round(v / LATTICE) * LATTICE
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn x(self) -> f64 {
        self.0[0]
    }

    pub fn y(self) -> f64 {
        self.0[1]
    }

    pub fn z(self) -> f64 {
        self.0[2]
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn snapped(self) -> Vec3 {
        Vec3(self.0.map(snap))
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
        ])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3([self.0[0] * rhs, self.0[1] * rhs, self.0[2] * rhs])
    }
}

/// Axis-aligned 3D box given by its min and max corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_center_half_extents(center: Vec3, half: Vec3) -> Self {
        Aabb {
            min: center - half,
            max: center + half,
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn half_extents(&self) -> Vec3 {
        (self.max - self.min) * 0.5
    }

    /// Half the length of the main diagonal.
    pub fn radius(&self) -> f64 {
        self.half_extents().norm()
    }

    pub fn volume(&self) -> f64 {
        (0..3)
            .map(|i| (self.max.0[i] - self.min.0[i]).max(0.0))
            .product()
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| self.min.0[i] <= p.0[i] && p.0[i] <= self.max.0[i])
    }

    pub fn intersection_volume(&self, other: &Aabb) -> f64 {
        (0..3)
            .map(|i| {
                let lo = self.min.0[i].max(other.min.0[i]);
                let hi = self.max.0[i].min(other.max.0[i]);
                (hi - lo).max(0.0)
            })
            .product()
    }

    /// Volume intersection-over-union; 0 when both boxes are degenerate.
    pub fn iou(&self, other: &Aabb) -> f64 {
        let inter = self.intersection_volume(other);
        let union = self.volume() + other.volume() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    pub fn translated(&self, offset: Vec3) -> Aabb {
        Aabb {
            min: self.min + offset,
            max: self.max + offset,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_of_identical_boxes_is_one() {
        let b = Aabb::from_center_half_extents(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.5, 0.25, 1.0));
        assert_eq!(b.iou(&b), 1.0);
    }

    #[test]
    fn iou_of_disjoint_boxes_is_zero() {
        let a = Aabb {
            min: Vec3::ZERO,
            max: Vec3::new(1.0, 1.0, 1.0),
        };
        let b = a.translated(Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(a.iou(&b), 0.0);
    }

    #[test]
    fn half_overlap_along_one_axis() {
        // unit cubes shifted by 1/3: inter = 2/3, union = 4/3
        let a = Aabb {
            min: Vec3::ZERO,
            max: Vec3::new(1.0, 1.0, 1.0),
        };
        let b = a.translated(Vec3::new(1.0 / 3.0, 0.0, 0.0));
        assert!((a.iou(&b) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn radius_is_half_diagonal() {
        let b = Aabb {
            min: Vec3::ZERO,
            max: Vec3::new(2.0, 2.0, 1.0),
        };
        assert!((b.radius() - 1.5).abs() < 1e-12);
    }
}
