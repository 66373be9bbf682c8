//! Magic angles, their period lattices, and the closed-form bounds built on
//! the continued-fraction convergents of `tan 22.5° = √2 - 1`.
//!
//! A magic angle `ᾱ(n, m) = 2 atan(m / n)` rotates the integer vector
//! `(n, -m)` onto `(n, m)`; at such angles `V(r, ᾱ, a)` is periodic.

use std::f64::consts::{PI, SQRT_2, TAU};

use crate::error::{Error, Result};
use crate::geometry::{rotate, Vec2};

const SILVER: f64 = SQRT_2 + 1.0;
const SILVER_INV: f64 = SQRT_2 - 1.0;

/// One convergent `m / n` of `√2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Convergent {
    pub s: usize,
    pub m: u64,
    pub n: u64,
}

/// Convergents `s = 1..=s_max` from `m' = n`, `n' = m + 2n`, starting at `(1, 2)`.
pub fn convergents_sqrt2_minus_1(s_max: usize) -> Result<Vec<Convergent>> {
    if s_max == 0 {
        return Err(Error::InvalidParameter("s_max must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(s_max);
    let (mut m, mut n) = (1u64, 2u64);
    out.push(Convergent { s: 1, m, n });
    for s in 2..=s_max {
        let next = n
            .checked_mul(2)
            .and_then(|t| t.checked_add(m))
            .ok_or(Error::IntegerOverflow { s })?;
        m = n;
        n = next;
        out.push(Convergent { s, m, n });
    }
    Ok(out)
}

pub fn convergent(s: usize) -> Result<Convergent> {
    Ok(*convergents_sqrt2_minus_1(s)?.last().expect("non-empty"))
}

/// Real-valued closed forms for `(m(s), n(s))`.
pub fn convergent_closed_form(s: usize) -> (f64, f64) {
    let s_i = s as i32;
    let sign = if s % 2 == 1 { 1.0 } else { -1.0 }; // (-1)^(s-1)
    let m = (sign * SILVER_INV.powi(s_i) + SILVER.powi(s_i)) / (2.0 * SQRT_2);
    let n = (-sign * SILVER_INV.powi(s_i + 1) + SILVER.powi(s_i + 1)) / (2.0 * SQRT_2);
    (m, n)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_pair(n: u64, m: u64) -> Result<()> {
    if m == 0 || m >= n || gcd(m, n) != 1 {
        return Err(Error::InvalidPair { n, m });
    }
    Ok(())
}

/// Parity-reduced pair `(m0, n0)`: the pair itself for mixed parity, the
/// magnitudes `((m + n)/2, (n - m)/2)` when both are odd.
pub fn reduced_pair(n: u64, m: u64) -> (u64, u64) {
    if m % 2 == 1 && n % 2 == 1 {
        ((m + n) / 2, (n - m) / 2)
    } else {
        (m, n)
    }
}

fn reduced_norm(n: u64, m: u64) -> f64 {
    let (m0, n0) = reduced_pair(n, m);
    ((m0 as u128 * m0 as u128 + n0 as u128 * n0 as u128) as f64).sqrt()
}

/// A magic angle with its minimal period lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagicAngle {
    pub n: u64,
    pub m: u64,
    pub m0: u64,
    pub n0: u64,
    /// `2 atan(m / n)` in radians.
    pub angle: f64,
    /// Minimal period basis, right-handed, `|b1| = |b2| = t_nm`.
    pub b1: Vec2,
    pub b2: Vec2,
    pub t_nm: f64,
    /// Underlying square-lattice period `T = 2π / k`.
    pub period: f64,
}

impl MagicAngle {
    pub fn new(n: u64, m: u64, k: f64) -> Result<Self> {
        check_pair(n, m)?;
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
        }
        let t = TAU / k;
        let (mf, nf) = (m as f64, n as f64);
        let mut b1 = Vec2::new(mf, -nf) * t;
        let mut b2 = Vec2::new(nf, mf) * t;
        if m % 2 == 1 && n % 2 == 1 {
            (b1, b2) = ((b1 + b2) * 0.5, (b2 - b1) * 0.5);
        }
        let (m0, n0) = reduced_pair(n, m);
        Ok(MagicAngle {
            n,
            m,
            m0,
            n0,
            angle: 2.0 * (mf / nf).atan(),
            b1,
            b2,
            t_nm: t * reduced_norm(n, m),
            period: t,
        })
    }

    /// Recovers `(n, m)` when `alpha` is a magic angle to within 1e-12 rad,
    /// searching rational approximations of `tan(α/2)` with `n ≤ 10⁶`.
    pub fn detect(alpha: f64, k: f64) -> Option<Self> {
        if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
            return None;
        }
        let target = (alpha / 2.0).tan();
        let (mut h0, mut h1) = (0u64, 1u64);
        let (mut k0, mut k1) = (1u64, 0u64);
        let mut x = target;
        for _ in 0..40 {
            let a = x.floor();
            if a > 1e7 {
                break;
            }
            let a = a as u64;
            (h0, h1) = (h1, a.checked_mul(h1)?.checked_add(h0)?);
            (k0, k1) = (k1, a.checked_mul(k1)?.checked_add(k0)?);
            if k1 > 1_000_000 {
                break;
            }
            if h1 > 0 && h1 < k1 && (2.0 * (h1 as f64 / k1 as f64).atan() - alpha).abs() < 1e-12 {
                return MagicAngle::new(k1, h1, k).ok();
            }
            let frac = x - x.floor();
            if frac < 1e-15 {
                break;
            }
            x = 1.0 / frac;
        }
        None
    }

    /// Generator of the square lattice of shifts `a` for which `V(r, ᾱ, a)`
    /// has an exact fourfold centre: `T·D + R(ᾱ)·T·D` with `D` the
    /// checkerboard lattice `Z² ∪ (Z² + (½, ½))`. Returns `(g, g⊥)`.
    ///
    /// In Gaussian-integer form the lattice is `T (1+i) γ / (2 (n - i m)) Z[i]`
    /// with `γ = gcd(n + im, n - im)`, so the step is `T / √(2 (m0² + n0²))`.
    pub fn symmetric_shift_basis(&self) -> (Vec2, Vec2) {
        let big_n = (self.n as f64).powi(2) + (self.m as f64).powi(2);
        // (1 + i)(n + im) / (2N)
        let (mut re, mut im) = (
            (self.n as f64 - self.m as f64) / (2.0 * big_n),
            (self.n as f64 + self.m as f64) / (2.0 * big_n),
        );
        if self.m % 2 == 1 && self.n % 2 == 1 {
            // times γ = 1 + i
            (re, im) = (re - im, re + im);
        }
        let g = Vec2::new(re, im) * self.period;
        (g, Vec2::new(-g.y, g.x))
    }

    pub fn symmetric_shift_step(&self) -> f64 {
        self.symmetric_shift_basis().0.norm()
    }

    /// Largest distance from any shift to the symmetric-shift lattice:
    /// half the cell diagonal, `T / (2 √(m0² + n0²))`.
    pub fn symmetric_shift_covering_radius(&self) -> f64 {
        self.symmetric_shift_step() / SQRT_2
    }

    /// `a'(p, q, i, j) = ((p-q)/2) e1 + ((p+q)/2) e2 + R(ᾱ)[((i-j)/2) e1 + ((i+j)/2) e2]`.
    pub fn symmetric_shift(&self, p: i64, q: i64, i: i64, j: i64) -> Vec2 {
        let t = self.period;
        let half = |u: i64, v: i64| Vec2::new((u - v) as f64 * 0.5 * t, (u + v) as f64 * 0.5 * t);
        half(p, q) + rotate(half(i, j), self.angle)
    }

    /// Lattice coordinates of `r` in the minimal period basis.
    pub fn lattice_coords(&self, r: Vec2) -> (f64, f64) {
        let t2 = self.t_nm * self.t_nm;
        (r.dot(self.b1) / t2, r.dot(self.b2) / t2)
    }

    /// Translate `r` into the fundamental cell `{u b1 + v b2 : u, v ∈ [0, 1)}`.
    pub fn reduce_to_cell(&self, r: Vec2) -> Vec2 {
        let (u, v) = self.lattice_coords(r);
        let (u, v) = (u - u.floor(), v - v.floor());
        self.b1 * u + self.b2 * v
    }

    /// Shortest displacement from `a` to `b` modulo the period lattice.
    pub fn min_image(&self, a: Vec2, b: Vec2) -> Vec2 {
        let (u, v) = self.lattice_coords(b - a);
        self.b1 * (u - u.round()) + self.b2 * (v - v.round())
    }

    /// Distance from `p` to the nearest fourfold centre, given one centre
    /// `c0`. The centres form `c0 + {u b1 + v b2}` with `u, v` both integers
    /// or both half-integers.
    pub fn distance_to_center_lattice(&self, c0: Vec2, p: Vec2) -> f64 {
        let (u, v) = self.lattice_coords(p - c0);
        let whole = self.b1 * (u - u.round()) + self.b2 * (v - v.round());
        let (uh, vh) = (u - 0.5, v - 0.5);
        let half = self.b1 * (uh - uh.round()) + self.b2 * (vh - vh.round());
        whole.norm().min(half.norm())
    }

    /// A fourfold centre of `V(r, ᾱ, a)` for a symmetric shift `a`, i.e. a
    /// point of `T·D` whose offset from `a` lies in `R(ᾱ)·T·D`.
    pub fn symmetry_center_for_shift(&self, a: Vec2) -> Option<Vec2> {
        let t = self.period;
        let on_d = |w: Vec2| {
            let (x, y) = (w.x / t, w.y / t);
            let (fx, fy) = (x - x.round(), y - y.round());
            let (hx, hy) = (x - 0.5 - (x - 0.5).round(), y - 0.5 - (y - 0.5).round());
            (fx.abs() < 1e-9 && fy.abs() < 1e-9) || (hx.abs() < 1e-9 && hy.abs() < 1e-9)
        };
        // T·D modulo the centre lattice has at most 2 (n² + m²) classes;
        // enumerate T·D inside a box of one period cell.
        let reach = (self.t_nm / t).ceil() as i64 + 1;
        for p in -reach..=reach {
            for q in -reach..=reach {
                for half in [0.0, 0.5] {
                    let c = Vec2::new((p as f64 + half) * t, (q as f64 + half) * t);
                    if on_d(rotate(c - a, -self.angle)) {
                        return Some(c);
                    }
                }
            }
        }
        None
    }
}

pub fn make_magic_angle(n: u64, m: u64) -> Result<MagicAngle> {
    MagicAngle::new(n, m, 1.0)
}

/// Nearest point of the symmetric-shift lattice and its distance.
pub fn nearest_symmetric_shift(a: Vec2, angle: &MagicAngle) -> (Vec2, f64) {
    let (g1, g2) = angle.symmetric_shift_basis();
    let g_sq = g1.norm_sq();
    let (c1, c2) = ((a.dot(g1) / g_sq).round(), (a.dot(g2) / g_sq).round());
    let sym = g1 * c1 + g2 * c2;
    (sym, a.dist(sym))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGap {
    /// `|α - 2 atan(m/n)|`
    pub exact: f64,
    /// `δ (1 + cos α)` with `δ = |tan(α/2) - m/n|`
    pub estimate: f64,
    pub delta: f64,
}

pub fn angle_gap(alpha: f64, n: u64, m: u64) -> Result<AngleGap> {
    check_pair(n, m)?;
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, π/2)")));
    }
    let ratio = m as f64 / n as f64;
    let delta = ((alpha / 2.0).tan() - ratio).abs();
    Ok(AngleGap {
        exact: (alpha - 2.0 * ratio.atan()).abs(),
        estimate: delta * (1.0 + alpha.cos()),
        delta,
    })
}

/// `T(s) = T √(m² + n²)` for the s-th convergent (mixed parity, so unreduced).
pub fn period_s(s: usize, k: f64) -> Result<f64> {
    let c = convergent(s)?;
    Ok(TAU / k * reduced_norm(c.n, c.m))
}

/// `T(s)` sandwich `(lower, upper)` from the closed form.
pub fn period_s_bounds(s: usize, k: f64) -> (f64, f64) {
    let t = TAU / k;
    let x = s as f64;
    let lower = t * SILVER.powf(x + 0.5) / (2.0 * SQRT_2).sqrt();
    let upper = lower + t * SILVER_INV.powf(3.0 * x + 1.5) / (2.0 * (2.0 * SQRT_2).sqrt());
    (lower, upper)
}

/// Signed asymptote `(-1)^(s-1) 2 (√2-1)^(2s+1)` of `ᾱ(s) - 45°`.
pub fn angle_offset_asymptote(s: usize) -> f64 {
    let sign = if s % 2 == 1 { 1.0 } else { -1.0 };
    sign * 2.0 * SILVER_INV.powi(2 * s as i32 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonS {
    pub s: usize,
    /// Two-term expression from the true angle offset and true `T(s)`.
    pub exact: f64,
    /// `π V0 (2^{9/4} + 2^{3/4}) (√2-1)^{s+1/2}`
    pub asymptotic: f64,
}

/// `|2 atan(m/n) - 45°|` without cancellation, via
/// `m - (√2-1) n = (m² + 2mn - n²) / (m + (√2+1) n)`.
pub fn gap_to_45(m: u64, n: u64) -> f64 {
    let (mi, ni) = (m as i128, n as i128);
    let pell = (mi * mi + 2 * mi * ni - ni * ni) as f64;
    let (mf, nf) = (m as f64, n as f64);
    let diff = pell / (mf + SILVER * nf);
    // atan(m/n) - atan(t) = atan((m - t n) / (n + t m))
    2.0 * (diff / (nf + SILVER_INV * mf)).atan().abs()
}

pub fn epsilon_s(s: usize, v0: f64, k: f64) -> Result<EpsilonS> {
    let c = convergent(s)?;
    let t = TAU / k;
    let sum_sq = (c.m as f64).powi(2) + (c.n as f64).powi(2);
    let t_s = t * sum_sq.sqrt();
    let gap = gap_to_45(c.m, c.n);
    let grad = SQRT_2 * k * v0;
    let exact = grad * gap * SQRT_2 * t_s + grad * t / (2.0 * (2.0 * sum_sq).sqrt());
    Ok(EpsilonS { s, exact, asymptotic: epsilon_s_asymptotic(s, v0) })
}

pub fn epsilon_s_asymptotic(s: usize, v0: f64) -> f64 {
    PI * v0 * (2f64.powf(2.25) + 2f64.powf(0.75)) * SILVER_INV.powf(s as f64 + 0.5)
}

/// `(4 + √2)(√2 + 1)`
pub const DIAMETER_BOUND_CONSTANT: f64 = (4.0 + SQRT_2) * (SQRT_2 + 1.0);

/// Upper bound `π V0 T (4 + √2)(√2 + 1) / |ε|` on closed level-set diameters
/// of `V(r, 45°, a)`.
pub fn diameter_bound(epsilon: f64, v0: f64, k: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    if !epsilon.is_finite() {
        return Err(Error::NonFinite("epsilon"));
    }
    Ok(PI * v0 * (TAU / k) * DIAMETER_BOUND_CONSTANT / epsilon.abs())
}

/// `π V0 / √(m0² + n0²)`
pub fn epsilon_nm_bound(n: u64, m: u64, v0: f64) -> Result<f64> {
    check_pair(n, m)?;
    Ok(PI * v0 / reduced_norm(n, m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn centered(center: Vec2, half_width: f64) -> Self {
        let h = Vec2::new(half_width, half_width);
        Rect { min: center - h, max: center + h }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Fourfold centres `((p-q)/2) b1 + ((p+q)/2) b2` of `V(r, ᾱ, 0)` inside `window`.
pub fn symmetry_centers(angle: &MagicAngle, window: &Rect) -> Vec<Vec2> {
    let c1 = (angle.b1 + angle.b2) * 0.5;
    let c2 = (angle.b2 - angle.b1) * 0.5;
    let c_sq = c1.norm_sq();
    let corners = [
        window.min,
        Vec2::new(window.max.x, window.min.y),
        window.max,
        Vec2::new(window.min.x, window.max.y),
    ];
    let coords: Vec<(f64, f64)> = corners.iter().map(|p| (p.dot(c1) / c_sq, p.dot(c2) / c_sq)).collect();
    let lo = |f: fn(&(f64, f64)) -> f64| coords.iter().map(f).fold(f64::INFINITY, f64::min).floor() as i64;
    let hi = |f: fn(&(f64, f64)) -> f64| coords.iter().map(f).fold(f64::NEG_INFINITY, f64::max).ceil() as i64;
    let (u0, u1) = (lo(|c| c.0), hi(|c| c.0));
    let (v0, v1) = (lo(|c| c.1), hi(|c| c.1));
    let mut out = Vec::new();
    for u in u0..=u1 {
        for v in v0..=v1 {
            let p = c1 * u as f64 + c2 * v as f64;
            if window.contains(p) {
                out.push(p);
            }
        }
    }
    out
}
