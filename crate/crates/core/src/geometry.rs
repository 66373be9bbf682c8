//! Planar vectors, rotations and the exact diameter of a point set.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Counter-clockwise rotation of `p` about the origin by `theta` radians.
#[inline]
pub fn rotate(p: Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Rotation of `p` about `center` by `theta` radians.
#[inline]
pub fn rotate_about(center: Vec2, p: Vec2, theta: f64) -> Vec2 {
    center + rotate(p - center, theta)
}

/// Convex hull by monotone chain, counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts = points.to_vec();
    pts.sort_unstable_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }

    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Maximum distance between two vertices of a convex polygon given in
/// counter-clockwise order, by rotating calipers.
pub fn hull_diameter(hull: &[Vec2]) -> f64 {
    let n = hull.len();
    match n {
        0 | 1 => return 0.0,
        2 => return hull[0].dist(hull[1]),
        _ => {}
    }
    let area = |a: Vec2, b: Vec2, c: Vec2| (b - a).cross(c - a).abs();
    let mut best_sq: f64 = 0.0;
    let mut j = 1;
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        while area(a, b, hull[(j + 1) % n]) > area(a, b, hull[j]) {
            j = (j + 1) % n;
        }
        best_sq = best_sq
            .max((hull[j] - a).norm_sq())
            .max((hull[j] - b).norm_sq());
    }
    best_sq.sqrt()
}

/// Exact diameter (max pairwise distance) of a point set.
pub fn diameter(points: &[Vec2]) -> f64 {
    hull_diameter(&convex_hull(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn brute(points: &[Vec2]) -> f64 {
        let mut best: f64 = 0.0;
        for (i, p) in points.iter().enumerate() {
            for q in &points[i + 1..] {
                best = best.max(p.dist(*q));
            }
        }
        best
    }

    #[test]
    fn rotate_quarter_and_eighth_turn() {
        let p = rotate(Vec2::new(1.0, 0.0), FRAC_PI_2);
        assert!((p.x - 0.0).abs() < 1e-15 && (p.y - 1.0).abs() < 1e-15);
        let p = rotate(Vec2::new(1.0, 0.0), FRAC_PI_4);
        assert!((p.x - FRAC_1_SQRT_2).abs() < 1e-15 && (p.y - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rotate_inverse_composition() {
        let p = Vec2::new(3.7, -1.2);
        for theta in [0.1, 1.0, 2.5, -4.0] {
            let q = rotate(rotate(p, theta), -theta);
            assert!(q.dist(p) < 1e-12);
        }
    }

    #[test]
    fn diameter_small_cases() {
        assert_eq!(diameter(&[]), 0.0);
        assert_eq!(diameter(&[Vec2::new(1.0, 2.0)]), 0.0);
        assert_eq!(diameter(&[Vec2::new(0.0, 0.0), Vec2::new(3.0, 4.0)]), 5.0);
        // collinear run
        let line: Vec<Vec2> = (0..10).map(|i| Vec2::new(i as f64, 2.0 * i as f64)).collect();
        assert!((diameter(&line) - brute(&line)).abs() < 1e-12);
    }

    #[test]
    fn diameter_square_grid() {
        let pts: Vec<Vec2> = (0..5)
            .flat_map(|i| (0..5).map(move |j| Vec2::new(i as f64, j as f64)))
            .collect();
        assert!((diameter(&pts) - 32f64.sqrt()).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn calipers_match_brute_force(raw in proptest::collection::vec((-50i32..50, -50i32..50), 1..120)) {
            let pts: Vec<Vec2> = raw.iter().map(|&(x, y)| Vec2::new(x as f64 * 0.37, y as f64 * 0.37)).collect();
            proptest::prop_assert!((diameter(&pts) - brute(&pts)).abs() <= 1e-12);
        }
    }
}
