//! The two-square-lattice potential family and its four-wave generalisation.
//!
//! `V(r, α, a) = V1(r) + V1(R(-α)(r - a))` with `V1(r) = V0 (cos kx + cos ky)`.
//! At `α = 45°, a = 0` this is the eightfold-symmetric quasicrystal potential.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{rotate, Vec2};

/// Scalar field on the plane with a natural energy and length scale.
///
/// The scales are used for tolerances (level bands, gradient certificates),
/// never for evaluation.
pub trait ScalarField: Sync {
    fn value(&self, r: Vec2) -> f64;

    /// Energy scale (V0).
    fn amplitude(&self) -> f64;

    /// Wavenumber k; the underlying period is `2π / k`.
    fn wavenumber(&self) -> f64;

    fn period(&self) -> f64 {
        TAU / self.wavenumber()
    }
}

/// Angle with an explicit unit, converted to radians on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Degrees(f64),
    Radians(f64),
}

impl Angle {
    pub fn radians(self) -> f64 {
        match self {
            Angle::Degrees(d) => d.to_radians(),
            Angle::Radians(r) => r,
        }
    }
}

#[inline]
pub fn eval_v1(r: Vec2, v0: f64, k: f64) -> f64 {
    v0 * ((k * r.x).cos() + (k * r.y).cos())
}

#[inline]
fn grad_v1(r: Vec2, v0: f64, k: f64) -> Vec2 {
    Vec2::new(-v0 * k * (k * r.x).sin(), -v0 * k * (k * r.y).sin())
}

/// Parameters of `V(r, α, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    v0: f64,
    k: f64,
    alpha: f64,
    shift: Vec2,
    // cached rotation by -alpha
    cos_a: f64,
    sin_a: f64,
}

impl PotentialSpec {
    /// `alpha` must lie in `[0, 90°]`; the family is 90°-periodic in `alpha`.
    pub fn new(v0: f64, k: f64, alpha: Angle, shift: Vec2) -> Result<Self> {
        let alpha = alpha.radians();
        if !(v0.is_finite() && k.is_finite() && alpha.is_finite() && shift.is_finite()) {
            return Err(Error::NonFinite("potential parameters"));
        }
        if v0 <= 0.0 {
            return Err(Error::InvalidParameter(format!("V0 must be positive, got {v0}")));
        }
        if k <= 0.0 {
            return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
        }
        if !(0.0..=FRAC_PI_2 + 1e-15).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 90 deg], got {} deg",
                alpha.to_degrees()
            )));
        }
        let (sin_a, cos_a) = alpha.sin_cos();
        Ok(PotentialSpec { v0, k, alpha, shift, cos_a, sin_a })
    }

    /// The eightfold-symmetric family member `V(r, 45°, a)` with unit scales.
    pub fn eightfold(shift: Vec2) -> Self {
        Self::new(1.0, 1.0, Angle::Degrees(45.0), shift).expect("valid constants")
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn shift(&self) -> Vec2 {
        self.shift
    }
    pub fn period(&self) -> f64 {
        TAU / self.k
    }

    pub fn with_shift(&self, shift: Vec2) -> Self {
        PotentialSpec { shift, ..*self }
    }

    /// `R(-α)(r - a)`, the argument of the rotated lattice.
    #[inline]
    fn rotated_arg(&self, r: Vec2) -> Vec2 {
        let d = r - self.shift;
        Vec2::new(self.cos_a * d.x + self.sin_a * d.y, -self.sin_a * d.x + self.cos_a * d.y)
    }

    /// `R(α) g`
    #[inline]
    fn rotate_back(&self, g: Vec2) -> Vec2 {
        Vec2::new(self.cos_a * g.x - self.sin_a * g.y, self.sin_a * g.x + self.cos_a * g.y)
    }

    #[inline]
    pub fn eval(&self, r: Vec2) -> f64 {
        let u = self.rotated_arg(r);
        let k = self.k;
        self.v0 * ((k * r.x).cos() + (k * r.y).cos() + (k * u.x).cos() + (k * u.y).cos())
    }

    pub fn grad_r(&self, r: Vec2) -> Vec2 {
        let u = self.rotated_arg(r);
        grad_v1(r, self.v0, self.k) + self.rotate_back(grad_v1(u, self.v0, self.k))
    }

    pub fn grad_a(&self, r: Vec2) -> Vec2 {
        -self.rotate_back(grad_v1(self.rotated_arg(r), self.v0, self.k))
    }

    /// Hessian with respect to `r` as `[[xx, xy], [xy, yy]]`.
    pub fn hessian(&self, r: Vec2) -> [[f64; 2]; 2] {
        let k = self.k;
        let s = -self.v0 * k * k;
        let (h1x, h1y) = (s * (k * r.x).cos(), s * (k * r.y).cos());
        let u = self.rotated_arg(r);
        let (h2x, h2y) = (s * (k * u.x).cos(), s * (k * u.y).cos());
        // R diag(h2x, h2y) R^T
        let (c, sn) = (self.cos_a, self.sin_a);
        let xx = c * c * h2x + sn * sn * h2y;
        let yy = sn * sn * h2x + c * c * h2y;
        let xy = c * sn * (h2x - h2y);
        [[h1x + xx, xy], [xy, h1y + yy]]
    }
}

impl ScalarField for PotentialSpec {
    #[inline]
    fn value(&self, r: Vec2) -> f64 {
        self.eval(r)
    }
    fn amplitude(&self) -> f64 {
        self.v0
    }
    fn wavenumber(&self) -> f64 {
        self.k
    }
}

pub fn eval_v(r: Vec2, spec: &PotentialSpec) -> f64 {
    spec.eval(r)
}

pub fn grad_r_v(r: Vec2, spec: &PotentialSpec) -> Vec2 {
    spec.grad_r(r)
}

pub fn grad_a_v(r: Vec2, spec: &PotentialSpec) -> Vec2 {
    spec.grad_a(r)
}

/// `V0 Σ cos(G_j·r - A_j)` with `G_j` the vector `(k, 0)` rotated by
/// 0°, 45°, 90° and 135°.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralPhaseSpec {
    v0: f64,
    k: f64,
    phases: [f64; 4],
}

impl GeneralPhaseSpec {
    pub fn new(v0: f64, k: f64, phases: [f64; 4]) -> Result<Self> {
        if !(v0.is_finite() && k.is_finite() && phases.iter().all(|p| p.is_finite())) {
            return Err(Error::NonFinite("phase parameters"));
        }
        if v0 <= 0.0 || k <= 0.0 {
            return Err(Error::InvalidParameter("V0 and k must be positive".into()));
        }
        Ok(GeneralPhaseSpec { v0, k, phases: phases.map(|p| p.rem_euclid(TAU)) })
    }

    /// Phases reproducing `V(r, 45°, a)` of the shift family.
    pub fn from_shift(v0: f64, k: f64, shift: Vec2) -> Result<Self> {
        let g = Self::wave_vectors(k);
        Self::new(v0, k, [0.0, g[1].dot(shift), 0.0, g[3].dot(shift)])
    }

    pub fn phases(&self) -> [f64; 4] {
        self.phases
    }

    /// All phases advanced by π; this negates the potential.
    pub fn flipped(&self) -> Self {
        Self::new(self.v0, self.k, self.phases.map(|p| p + PI)).expect("finite")
    }

    pub fn wave_vectors(k: f64) -> [Vec2; 4] {
        [0.0, 45.0, 90.0, 135.0].map(|deg: f64| rotate(Vec2::new(k, 0.0), deg.to_radians()))
    }

    pub fn eval(&self, r: Vec2) -> f64 {
        let g = Self::wave_vectors(self.k);
        self.v0
            * g.iter()
                .zip(self.phases)
                .map(|(g, a)| (g.dot(r) - a).cos())
                .sum::<f64>()
    }
}

impl ScalarField for GeneralPhaseSpec {
    fn value(&self, r: Vec2) -> f64 {
        self.eval(r)
    }
    fn amplitude(&self) -> f64 {
        self.v0
    }
    fn wavenumber(&self) -> f64 {
        self.k
    }
}

pub fn eval_v_general(r: Vec2, spec: &GeneralPhaseSpec) -> f64 {
    spec.eval(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn spec(alpha_deg: f64, a: Vec2) -> PotentialSpec {
        PotentialSpec::new(1.0, 1.0, Angle::Degrees(alpha_deg), a).unwrap()
    }

    #[test]
    fn v1_values() {
        assert_eq!(eval_v1(Vec2::ZERO, 1.0, 1.0), 2.0);
        assert!((eval_v1(Vec2::new(PI, PI), 1.0, 1.0) + 2.0).abs() < 1e-15);
        // T = π for k = 2, so T/4 = π/4: 3 (cos(π/2) + cos 0) = 3
        let r = Vec2::new(PI / 4.0, 0.0);
        assert!((eval_v1(r, 3.0, 2.0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn superposition_values() {
        assert!((spec(45.0, Vec2::ZERO).eval(Vec2::ZERO) - 4.0).abs() < 1e-15);
        // α = 90°: R(-90°) maps (x, y) to (y, -x); cosine is even.
        let v = spec(90.0, Vec2::ZERO).eval(Vec2::new(1.0, 0.5));
        let direct = 2.0 * (1.0f64.cos() + 0.5f64.cos());
        assert!((v - direct).abs() < 1e-14);
        assert!((v - 2.835_769_735_517_025).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PotentialSpec::new(0.0, 1.0, Angle::Degrees(45.0), Vec2::ZERO).is_err());
        assert!(PotentialSpec::new(1.0, -1.0, Angle::Degrees(45.0), Vec2::ZERO).is_err());
        assert!(PotentialSpec::new(1.0, 1.0, Angle::Degrees(120.0), Vec2::ZERO).is_err());
        assert!(PotentialSpec::new(1.0, 1.0, Angle::Degrees(45.0), Vec2::new(f64::NAN, 0.0)).is_err());
        assert!(GeneralPhaseSpec::new(1.0, 1.0, [0.0, f64::INFINITY, 0.0, 0.0]).is_err());
    }

    #[test]
    fn general_phase_values() {
        let g = GeneralPhaseSpec::new(1.0, 1.0, [0.0; 4]).unwrap();
        assert!((g.eval(Vec2::ZERO) - 4.0).abs() < 1e-15);
        // oracle: the four terms written out at r = (2π, 0)
        let x = TAU;
        let c45 = FRAC_PI_4.cos();
        let oracle = x.cos() + (x * c45).cos() + 0.0f64.cos() + (-x * c45).cos();
        assert!((g.eval(Vec2::new(x, 0.0)) - oracle).abs() < 1e-13);
        assert!((oracle - (2.0 + 2.0 * (TAU * c45).cos())).abs() < 1e-13);
    }

    #[test]
    fn general_phase_matches_shift_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = Vec2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
            let r = Vec2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let g = GeneralPhaseSpec::from_shift(1.3, 0.7, a).unwrap();
            let s = PotentialSpec::new(1.3, 0.7, Angle::Degrees(45.0), a).unwrap();
            assert!((g.eval(r) - s.eval(r)).abs() < 1e-10);
        }
    }

    #[test]
    fn phase_flip_negates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let phases = [0; 4].map(|_| rng.gen_range(0.0..TAU));
            let g = GeneralPhaseSpec::new(1.0, 1.0, phases).unwrap();
            let r = Vec2::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
            assert!((g.flipped().eval(r) + g.eval(r)).abs() <= 1e-12);
        }
    }

    #[test]
    fn eightfold_and_fourfold_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s45 = spec(45.0, Vec2::ZERO);
        let s = spec(31.7, Vec2::ZERO);
        for _ in 0..1000 {
            let r = Vec2::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0));
            assert!((s45.eval(rotate(r, FRAC_PI_4)) - s45.eval(r)).abs() <= 1e-10);
            assert!((s.eval(rotate(r, FRAC_PI_2)) - s.eval(r)).abs() <= 1e-10);
        }
    }

    #[test]
    fn shift_equivalences() {
        let t = TAU;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let alpha = rng.gen_range(0.1..1.5);
            let a = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let r = Vec2::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
            let s = PotentialSpec::new(1.0, 1.0, Angle::Radians(alpha), a).unwrap();
            let (p, q) = (rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64);
            let lat = Vec2::new(p * t, q * t);
            let shifted = s.with_shift(a + lat);
            assert!((shifted.eval(r) - s.eval(r - lat)).abs() < 1e-10);
            let rot_lat = rotate(lat, alpha);
            assert!((s.with_shift(a + rot_lat).eval(r) - s.eval(r)).abs() < 1e-10);
        }
    }

    fn fd_grad(f: impl Fn(Vec2) -> f64, r: Vec2, h: f64) -> Vec2 {
        Vec2::new(
            (f(r + Vec2::new(h, 0.0)) - f(r - Vec2::new(h, 0.0))) / (2.0 * h),
            (f(r + Vec2::new(0.0, h)) - f(r - Vec2::new(0.0, h))) / (2.0 * h),
        )
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let k = rng.gen_range(0.5..2.0);
            let v0 = rng.gen_range(0.5..2.0);
            let alpha = rng.gen_range(0.0..FRAC_PI_2);
            let a = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let s = PotentialSpec::new(v0, k, Angle::Radians(alpha), a).unwrap();
            let r = Vec2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
            let h = 1e-5 * s.period();
            let tol = 1e-6 * v0 * k;
            let fd = fd_grad(|p| s.eval(p), r, h);
            assert!(fd.dist(s.grad_r(r)) < tol);
            let fda = fd_grad(|p| s.with_shift(p).eval(r), a, h);
            assert!(fda.dist(s.grad_a(r)) < tol);
        }
    }

    #[test]
    fn gradient_special_points() {
        let s = spec(45.0, Vec2::ZERO);
        assert!(s.grad_r(Vec2::ZERO).norm() < 1e-15);
        let s = spec(33.0, Vec2::new(1.5, -2.0));
        assert!(s.grad_a(Vec2::new(1.5, -2.0)).norm() < 1e-15);
        // r = (T/4, 0), α = 90°: V = 2(cos x + cos y), grad = (-2, 0)
        let s = spec(90.0, Vec2::ZERO);
        let g = s.grad_r(Vec2::new(FRAC_PI_2, 0.0));
        let fd = fd_grad(|p| s.eval(p), Vec2::new(FRAC_PI_2, 0.0), 1e-5 * TAU);
        assert!(g.dist(fd) < 1e-6);
        assert!(g.dist(Vec2::new(-2.0, 0.0)) < 1e-12);
    }

    #[test]
    fn shift_gradient_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let s = PotentialSpec::new(
                1.0,
                1.0,
                Angle::Radians(rng.gen_range(0.0..FRAC_PI_2)),
                Vec2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)),
            )
            .unwrap();
            let r = Vec2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            worst = worst.max(s.grad_a(r).norm());
        }
        assert!(worst <= SQRT_2 + 1e-12);
        assert!(worst > 1.3);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let s = PotentialSpec::new(
                1.0,
                1.3,
                Angle::Radians(rng.gen_range(0.0..FRAC_PI_2)),
                Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
            )
            .unwrap();
            let r = Vec2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let h = 1e-5;
            let gx = (s.grad_r(r + Vec2::new(h, 0.0)) - s.grad_r(r - Vec2::new(h, 0.0))) * (0.5 / h);
            let gy = (s.grad_r(r + Vec2::new(0.0, h)) - s.grad_r(r - Vec2::new(0.0, h))) * (0.5 / h);
            let hs = s.hessian(r);
            assert!((hs[0][0] - gx.x).abs() < 1e-6);
            assert!((hs[0][1] - gx.y).abs() < 1e-6);
            assert!((hs[1][0] - gy.x).abs() < 1e-6);
            assert!((hs[1][1] - gy.y).abs() < 1e-6);
        }
    }
}
