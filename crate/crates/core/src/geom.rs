//! Planar vector helpers.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector at `angle` from the +x axis.
    pub fn from_angle(angle: T) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    /// Rotates counter-clockwise by `angle`.
    pub fn rotated(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Planar cross product `x1*y2 - x2*y1`.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - other.x * self.y
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    /// Distance from `self` to the closed segment `a`–`b`.
    pub fn distance_to_segment(self, a: Self, b: Self) -> T {
        let ab = b - a;
        let len2 = ab.dot(ab);
        if len2 <= T::zero() {
            return self.distance(a);
        }
        let t = ((self - a).dot(ab) / len2).max(T::zero()).min(T::one());
        self.distance(a + ab.scale(t))
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        Self::new(self.x + other.x, self.y + other.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;

    fn sub(self, other: Self) -> Self {
        Self::new(self.x - other.x, self.y - other.y)
    }
}
