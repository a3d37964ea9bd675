use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Point (or vector) in the plane, coordinates `(x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x1: 0.0, x2: 0.0 };

    #[inline]
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    #[inline]
    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> f64 {
        self.x1 * o.x2 - self.x2 * o.x1
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by a right angle, `(−x2, x1)`.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.x2, self.x1)
    }

    #[inline]
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    #[inline]
    pub fn lerp(self, o: Self, t: f64) -> Self {
        self + (o - self) * t
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x1, p.x2]
    }
}

impl Add for Point2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Point2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.x1 * s, self.x2 * s)
    }
}

impl Neg for Point2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2)
    }
}

impl AddAssign for Point2 {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x1 += o.x1;
        self.x2 += o.x2;
    }
}

impl SubAssign for Point2 {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x1 -= o.x1;
        self.x2 -= o.x2;
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn of_points<'a>(pts: impl IntoIterator<Item = &'a Point2>) -> Self {
        let mut b = BBox {
            min: Point2::new(f64::INFINITY, f64::INFINITY),
            max: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in pts {
            b.min.x1 = b.min.x1.min(p.x1);
            b.min.x2 = b.min.x2.min(p.x2);
            b.max.x1 = b.max.x1.max(p.x1);
            b.max.x2 = b.max.x2.max(p.x2);
        }
        b
    }

    pub fn width(&self) -> f64 {
        self.max.x1 - self.min.x1
    }

    pub fn height(&self) -> f64 {
        self.max.x2 - self.min.x2
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn inflate(&self, d: f64) -> Self {
        BBox {
            min: self.min - Point2::new(d, d),
            max: self.max + Point2::new(d, d),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x1 >= self.min.x1 && p.x1 <= self.max.x1 && p.x2 >= self.min.x2 && p.x2 <= self.max.x2
    }
}
