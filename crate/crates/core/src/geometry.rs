//! Planar primitives in the rectilinear intersection frame (meters, +y north).

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Unit vector, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    /// Rotate clockwise by `quarter_turns` × 90°.
    pub fn rotate_cw(self, quarter_turns: u8) -> Vec2 {
        match quarter_turns % 4 {
            0 => self,
            1 => Vec2::new(self.y, -self.x),
            2 => Vec2::new(-self.x, -self.y),
            _ => Vec2::new(-self.y, self.x),
        }
    }

    /// Compass bearing in degrees, clockwise from +y, in [0, 360).
    pub fn bearing_deg(self) -> f64 {
        let b = libm::atan2(self.x, self.y).to_degrees();
        if b < 0.0 {
            b + 360.0
        } else {
            b
        }
    }

    pub fn from_bearing_deg(bearing: f64) -> Vec2 {
        let r = bearing.to_radians();
        Vec2::new(libm::sin(r), libm::cos(r))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Vec2, u: f64) -> Vec2 {
        self + (o - self) * u
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Smallest absolute angle between two bearings, in [0, 180].
pub fn angular_distance_deg(a: f64, b: f64) -> f64 {
    let d = libm::fmod(libm::fabs(a - b), 360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Vec2,
    pub max: Vec2,
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Simple polygon given by its vertices in order (either orientation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Self {
        Polygon { vertices }
    }

    pub fn rect(min: Vec2, max: Vec2) -> Self {
        Polygon::new(alloc::vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.vertices[i].cross(self.vertices[(i + 1) % n]);
        }
        acc / 2.0
    }

    pub fn area(&self) -> f64 {
        libm::fabs(self.signed_area())
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Even-odd ray casting; points on the boundary count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        if self.boundary_distance(p) == 0.0 {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Membership in the polygon dilated by `buffer` meters.
    pub fn contains_buffered(&self, p: Vec2, buffer: f64) -> bool {
        self.contains(p) || self.boundary_distance(p) <= buffer
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        BoundingBox { min, max }
    }

    /// At least three finite vertices, non-zero area and no two non-adjacent
    /// edges crossing.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 || !self.vertices.iter().all(|v| v.is_finite()) || self.area() <= 1e-12 {
            return false;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                let (c, d) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold(Vec2::ZERO, |acc, &v| acc + v);
        s * (1.0 / n)
    }

    pub fn map(&self, f: impl Fn(Vec2) -> Vec2) -> Polygon {
        Polygon::new(self.vertices.iter().map(|&v| f(v)).collect())
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let u = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.distance(a + ab * u)
}

fn orientation(a: Vec2, b: Vec2, c: Vec2) -> i8 {
    let v = (b - a).cross(c - a);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, including collinear overlap.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn bearings() {
        assert_eq!(Vec2::new(0.0, 1.0).bearing_deg(), 0.0);
        assert_eq!(Vec2::new(1.0, 0.0).bearing_deg(), 90.0);
        assert_eq!(Vec2::new(0.0, -1.0).bearing_deg(), 180.0);
        assert_eq!(Vec2::new(-1.0, 0.0).bearing_deg(), 270.0);
        assert_eq!(angular_distance_deg(350.0, 10.0), 20.0);
    }

    #[test]
    fn rotation_is_clockwise() {
        let north = Vec2::new(0.0, 1.0);
        assert_eq!(north.rotate_cw(1), Vec2::new(1.0, 0.0));
        assert_eq!(north.rotate_cw(2), Vec2::new(0.0, -1.0));
        assert_eq!(north.rotate_cw(3), Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn polygon_membership() {
        let sq = Polygon::rect(Vec2::new(0.0, 0.0), Vec2::new(2.0, 2.0));
        assert!(sq.contains(Vec2::new(1.0, 1.0)));
        assert!(sq.contains(Vec2::new(2.0, 1.0)));
        assert!(!sq.contains(Vec2::new(2.5, 1.0)));
        assert!(sq.contains_buffered(Vec2::new(2.5, 1.0), 0.5));
        assert!(!sq.contains_buffered(Vec2::new(2.6, 1.0), 0.5));
        assert!(sq.is_simple());
        assert_eq!(sq.area(), 4.0);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let p = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ]);
        assert!(!p.is_simple());
        let flat = Polygon::new(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)]);
        assert!(!flat.is_simple());
    }
}
