//! Planar primitives, field-of-view tests and collision queries.
//!
//! Units are meters and radians throughout. Angles are kept in (-π, π].

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `angle`.
    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Bearing of this vector; the zero vector has bearing 0.
    pub fn bearing(self) -> f64 {
        if self.x == 0.0 && self.y == 0.0 {
            0.0
        } else {
            wrap_angle(self.y.atan2(self.x))
        }
    }

    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        Vec2::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rescales onto the unit disc when the norm exceeds one.
    pub fn clamp_to_unit_disc(self) -> Vec2 {
        let n = self.norm();
        if n > 1.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Normalizes an angle into (-π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Axis-aligned box with `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y);
        Self { min, max }
    }

    pub fn from_center(center: Vec2, half_extent: f64) -> Self {
        let h = Vec2::new(half_extent, half_extent);
        Self::new(center - h, center + h)
    }

    pub fn center(&self) -> Vec2 {
        self.min.lerp(self.max, 0.5)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// Closed containment.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    /// Distance from `p` to the box; zero inside.
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        self.closest_point(p).distance(p)
    }

    pub fn dilate(&self, margin: f64) -> Aabb {
        let m = Vec2::new(margin, margin);
        Aabb::new(self.min - m, self.max + m)
    }

    /// Gap between two boxes; zero when they touch or overlap.
    pub fn distance_to_aabb(&self, other: &Aabb) -> f64 {
        let dx = (self.min.x - other.max.x).max(other.min.x - self.max.x).max(0.0);
        let dy = (self.min.y - other.max.y).max(other.min.y - self.max.y).max(0.0);
        dx.hypot(dy)
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            Vec2::new(self.max.x, self.min.y),
            self.max,
            Vec2::new(self.min.x, self.max.y),
        ]
    }

    /// Whether segment `[a, b]` touches the closed box (slab clipping).
    pub fn intersects_segment(&self, a: Vec2, b: Vec2) -> bool {
        let d = b - a;
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        for (p, dp, lo, hi) in [
            (a.x, d.x, self.min.x, self.max.x),
            (a.y, d.y, self.min.y, self.max.y),
        ] {
            if dp == 0.0 {
                if p < lo || p > hi {
                    return false;
                }
            } else {
                let mut ta = (lo - p) / dp;
                let mut tb = (hi - p) / dp;
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }

    /// Distance between segment `[a, b]` and the box.
    pub fn distance_to_segment(&self, a: Vec2, b: Vec2) -> f64 {
        if self.intersects_segment(a, b) {
            return 0.0;
        }
        // Disjoint convex sets: the minimum is attained at a vertex of one of them.
        let from_ends = self.distance_to_point(a).min(self.distance_to_point(b));
        self.corners()
            .iter()
            .map(|&c| segment_point_distance(a, b, c))
            .fold(from_ends, f64::min)
    }
}

/// Range-limited sensing sector around a heading axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorFov {
    pub range: f64,
    /// Half aperture in (0, π]; π is a full circle.
    pub half_angle: f64,
}

impl SectorFov {
    pub const fn circle(range: f64) -> Self {
        Self { range, half_angle: PI }
    }
}

pub fn in_sector(origin: Vec2, heading: f64, fov: SectorFov, point: Vec2) -> bool {
    let rel = point - origin;
    if rel.norm() > fov.range {
        return false;
    }
    if rel == Vec2::ZERO || fov.half_angle >= PI {
        return true;
    }
    wrap_angle(rel.bearing() - heading).abs() <= fov.half_angle
}

/// True iff the nearest point of `aabb` lies within `radius` of `center`.
pub fn circle_aabb_overlap(center: Vec2, radius: f64, aabb: &Aabb) -> bool {
    aabb.distance_to_point(center) <= radius
}

pub fn segment_point_distance(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sector_examples() {
        let fov = SectorFov { range: 10.0, half_angle: 0.5 };
        assert!(in_sector(Vec2::ZERO, 0.0, fov, Vec2::new(5.0, 0.0)));
        assert!(!in_sector(Vec2::ZERO, 0.0, fov, Vec2::new(11.0, 0.0)));
        let narrow = SectorFov { range: 10.0, half_angle: PI / 6.0 };
        assert!(!in_sector(Vec2::ZERO, 0.0, narrow, Vec2::new(5.0, 5.0)));
        assert!(in_sector(Vec2::new(3.0, 3.0), 2.0, narrow, Vec2::new(3.0, 3.0)));
    }

    #[test]
    fn sector_wraps_across_pi() {
        let fov = SectorFov { range: 100.0, half_angle: 0.2 };
        // heading near π, point just below the negative x axis
        assert!(in_sector(Vec2::ZERO, PI - 0.05, fov, Vec2::new(-10.0, -0.5)));
    }

    #[test]
    fn circle_box_examples() {
        let b = Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(5.0, 5.0));
        assert!(circle_aabb_overlap(Vec2::new(2.0, 2.0), 0.0, &b));
        assert!(!circle_aabb_overlap(Vec2::new(10.0, 0.0), 1.0, &b));
        assert!(circle_aabb_overlap(Vec2::new(6.0, 2.0), 1.0, &b));
    }

    #[test]
    fn segment_distance_examples() {
        let o = Vec2::ZERO;
        assert_eq!(segment_point_distance(o, Vec2::new(10.0, 0.0), Vec2::new(5.0, 3.0)), 3.0);
        assert_eq!(segment_point_distance(o, Vec2::new(10.0, 0.0), Vec2::new(7.5, 0.0)), 0.0);
        assert_eq!(segment_point_distance(o, o, Vec2::new(3.0, 4.0)), 5.0);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(Vec2::ZERO.bearing(), 0.0);
        assert_eq!(Vec2::new(-1.0, -0.0).bearing(), PI);
    }

    #[test]
    fn segment_box_distance() {
        let b = Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0));
        assert_eq!(b.distance_to_segment(Vec2::new(-5.0, 5.0), Vec2::new(15.0, 5.0)), 0.0);
        assert_eq!(b.distance_to_segment(Vec2::new(-5.0, 13.0), Vec2::new(15.0, 13.0)), 3.0);
        // diagonal passing a corner
        let d = b.distance_to_segment(Vec2::new(12.0, 10.0), Vec2::new(10.0, 12.0));
        assert!((d - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    fn coord() -> impl Strategy<Value = f64> {
        -100.0..100.0f64
    }

    proptest! {
        #[test]
        fn full_circle_is_range_test(
            ox in coord(), oy in coord(), px in coord(), py in coord(),
            heading in -PI..PI, range in 1.0..150.0f64,
        ) {
            let o = Vec2::new(ox, oy);
            let p = Vec2::new(px, py);
            prop_assert_eq!(
                in_sector(o, heading, SectorFov::circle(range), p),
                o.distance(p) <= range
            );
        }

        #[test]
        fn segment_distance_symmetric(
            ax in coord(), ay in coord(), bx in coord(), by in coord(), px in coord(), py in coord(),
        ) {
            let (a, b, p) = (Vec2::new(ax, ay), Vec2::new(bx, by), Vec2::new(px, py));
            let d1 = segment_point_distance(a, b, p);
            let d2 = segment_point_distance(b, a, p);
            prop_assert!((d1 - d2).abs() <= 1e-9 * (1.0 + d1));
        }

        #[test]
        fn circle_box_matches_sampling(
            cx in -20.0..30.0f64, cy in -20.0..30.0f64, r in 0.1..10.0f64,
            x0 in 0.0..5.0f64, y0 in 0.0..5.0f64, w in 0.5..10.0f64, h in 0.5..10.0f64,
        ) {
            let b = Aabb::new(Vec2::new(x0, y0), Vec2::new(x0 + w, y0 + h));
            let c = Vec2::new(cx, cy);
            // 100 x 100 polar samples over the closed disc
            let mut hit = false;
            'outer: for i in 0..100 {
                let rr = r * (i as f64 + 1.0) / 100.0;
                for j in 0..100 {
                    let th = 2.0 * PI * j as f64 / 100.0;
                    if b.contains(c + Vec2::new(rr * th.cos(), rr * th.sin())) {
                        hit = true;
                        break 'outer;
                    }
                }
            }
            hit |= b.contains(c);
            let exact = circle_aabb_overlap(c, r, &b);
            // sampling misses only grazing contacts
            let gap = b.distance_to_point(c) - r;
            if gap.abs() > 0.05 * r + 1e-3 {
                prop_assert_eq!(hit, exact);
            }
        }

        #[test]
        fn segment_box_distance_vs_samples(
            ax in -30.0..40.0f64, ay in -30.0..40.0f64, bx in -30.0..40.0f64, by in -30.0..40.0f64,
        ) {
            let b = Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 6.0));
            let (a, e) = (Vec2::new(ax, ay), Vec2::new(bx, by));
            let sampled = (0..=2000)
                .map(|i| b.distance_to_point(a.lerp(e, i as f64 / 2000.0)))
                .fold(f64::INFINITY, f64::min);
            let exact = b.distance_to_segment(a, e);
            prop_assert!(exact <= sampled + 1e-9);
            prop_assert!(sampled - exact <= a.distance(e) / 2000.0 + 1e-9);
        }
    }
}
