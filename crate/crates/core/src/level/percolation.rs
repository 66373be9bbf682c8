//! Percolation class of a periodic approximant at a level, and the width of
//! its interval of open level lines.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::level::grid::GridField;
use crate::level::label::{count_wrapping, Sign};
use crate::magic::MagicAngle;
use crate::potential::{Angle, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PercolationClass {
    /// Only `{V ≥ ε}` has an unbounded component.
    AMinus,
    /// Only `{V < ε}` has an unbounded component.
    APlus,
    OpenLines,
}

impl PercolationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PercolationClass::AMinus => "A_minus",
            PercolationClass::APlus => "A_plus",
            PercolationClass::OpenLines => "open_lines",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WrapCounts {
    pub above: usize,
    pub below: usize,
}

impl WrapCounts {
    /// Class read off directly; `None` when neither set wraps.
    pub fn class(self) -> Option<PercolationClass> {
        match (self.above > 0, self.below > 0) {
            (true, false) => Some(PercolationClass::AMinus),
            (false, true) => Some(PercolationClass::APlus),
            (true, true) => Some(PercolationClass::OpenLines),
            (false, false) => None,
        }
    }
}

pub fn wrap_counts(field: &GridField, epsilon: f64) -> Result<WrapCounts> {
    if !field.is_periodic() {
        return Err(Error::WrongBoundary { expected: "periodic-cell" });
    }
    if !epsilon.is_finite() {
        return Err(Error::NonFinite("epsilon"));
    }
    Ok(WrapCounts {
        above: count_wrapping(field, epsilon, Sign::Above),
        below: count_wrapping(field, epsilon, Sign::Below),
    })
}

/// Level resolution of a grid: `V0 (k h)²`, the size of the interpolation
/// error of sampled values near a critical point.
pub fn level_band(field: &GridField) -> f64 {
    field.amplitude() * (field.wavenumber() * field.spacing()).powi(2)
}

/// Class at `epsilon`, judged on the band `[ε - δ, ε + δ]` with
/// `δ = level_band(field)`: a change from `A_minus` to `A_plus` inside the
/// band means the open-lines level lies within grid resolution of `epsilon`.
pub fn percolation_class(field: &GridField, epsilon: f64) -> Result<PercolationClass> {
    use PercolationClass::*;
    let delta = level_band(field);
    let lo = wrap_counts(field, epsilon - delta)?.class();
    let hi = wrap_counts(field, epsilon + delta)?.class();
    match (lo, hi) {
        (Some(OpenLines), _) | (_, Some(OpenLines)) | (Some(AMinus), Some(APlus)) => Ok(OpenLines),
        (Some(AMinus), Some(AMinus)) => Ok(AMinus),
        (Some(APlus), Some(APlus)) => Ok(APlus),
        _ => Err(Error::Ambiguous { epsilon }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    /// Bracket of the smallest `ε ≥ 0` at which the grid reads `A_plus`.
    pub positive: (f64, f64),
    /// Bracket of the magnitude of the largest `ε ≤ 0` reading `A_minus`.
    pub negative: (f64, f64),
    pub spacing: f64,
}

impl ThresholdEstimate {
    pub fn upper(&self) -> f64 {
        self.positive.1.max(self.negative.1)
    }
}

/// Default spacing of threshold grids, in units of `T`.
pub const THRESHOLD_SPACING: f64 = 1.0 / 256.0;

fn bisect(
    field: &GridField,
    tol: f64,
    hit: impl Fn(Option<PercolationClass>) -> bool,
    level: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let probe = |e: f64| -> Result<bool> {
        let class = wrap_counts(field, level(e))?.class();
        if class.is_none() {
            return Err(Error::Ambiguous { epsilon: level(e) });
        }
        Ok(hit(class))
    };
    if probe(0.0)? {
        return Ok((0.0, 0.0));
    }
    let (mut lo, mut hi) = (0.0, 4.0 * field.amplitude() * (1.0 + 1e-9) + tol);
    if !probe(hi)? {
        return Err(Error::Ambiguous { epsilon: level(hi) });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Brackets `ε_{n,m}(a)` on a periodic grid by bisection on each side of 0.
/// The two sides are computed independently and must agree to within
/// `tol` plus the grid's level band.
pub fn estimate_epsilon_nm_on(field: &GridField, tol: f64) -> Result<ThresholdEstimate> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let positive = bisect(field, tol, |c| c == Some(PercolationClass::APlus), |e| e)?;
    let negative = bisect(field, tol, |c| c == Some(PercolationClass::AMinus), |e| -e)?;
    let mid = |b: (f64, f64)| 0.5 * (b.0 + b.1);
    if (mid(positive) - mid(negative)).abs() > tol + level_band(field) {
        return Err(Error::ThresholdMismatch {
            pos_lo: positive.0,
            pos_hi: positive.1,
            neg_lo: negative.0,
            neg_hi: negative.1,
        });
    }
    Ok(ThresholdEstimate { positive, negative, spacing: field.spacing() })
}

/// Samples `V(r, ᾱ_{n,m}, a)` with unit `V0` and `k` over its period cell
/// at `spacing_over_t · T` and brackets the threshold.
pub fn estimate_epsilon_nm_with(
    n: u64,
    m: u64,
    a: Vec2,
    tol: f64,
    spacing_over_t: f64,
) -> Result<ThresholdEstimate> {
    let angle = MagicAngle::new(n, m, 1.0)?;
    let spec = PotentialSpec::new(1.0, 1.0, Angle::Radians(angle.angle), a)?;
    let cells = (angle.t_nm / (spacing_over_t * spec.period())).ceil() as usize;
    let field = GridField::sample_periodic(&spec, &angle, cells, Vec2::ZERO)?;
    estimate_epsilon_nm_on(&field, tol)
}

pub fn estimate_epsilon_nm(n: u64, m: u64, a: Vec2, tol: f64) -> Result<ThresholdEstimate> {
    estimate_epsilon_nm_with(n, m, a, tol, THRESHOLD_SPACING)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::label::label_components;
    use crate::magic::{make_magic_angle, nearest_symmetric_shift, epsilon_nm_bound};
    use std::f64::consts::TAU;

    fn field21(a: Vec2, per_t: f64) -> GridField {
        let ang = make_magic_angle(2, 1).unwrap();
        let spec = PotentialSpec::new(1.0, 1.0, Angle::Radians(ang.angle), a).unwrap();
        let n = (ang.t_nm / (TAU / per_t)).ceil() as usize;
        GridField::sample_periodic(&spec, &ang, n, Vec2::ZERO).unwrap()
    }

    #[test]
    fn extremes() {
        let g = field21(Vec2::new(0.9, 0.3), 64.0);
        assert_eq!(percolation_class(&g, -3.9).unwrap(), PercolationClass::AMinus);
        assert_eq!(percolation_class(&g, 3.9).unwrap(), PercolationClass::APlus);
    }

    #[test]
    fn symmetric_shift_is_open_at_zero() {
        let g = field21(Vec2::ZERO, 64.0);
        assert_eq!(percolation_class(&g, 0.0).unwrap(), PercolationClass::OpenLines);
        let ang = make_magic_angle(2, 1).unwrap();
        let (g1, g2) = ang.symmetric_shift_basis();
        let g = field21(g1 * 2.0 - g2, 64.0);
        assert_eq!(percolation_class(&g, 0.0).unwrap(), PercolationClass::OpenLines);
    }

    #[test]
    fn unique_unbounded_component_below_threshold() {
        let ang = make_magic_angle(2, 1).unwrap();
        let (g1, _) = ang.symmetric_shift_basis();
        let g = field21(g1 * 3.0, 64.0);
        let above = label_components(&g, -0.5, Sign::Above);
        assert_eq!(above.iter().filter(|c| c.wraps()).count(), 1);
        assert!(label_components(&g, -0.5, Sign::Below).iter().all(|c| !c.wraps()));
    }

    #[test]
    fn open_window_rejected() {
        let g = GridField::from_values(Vec2::ZERO, 0.1, 2, 2, vec![0.0; 4], 1.0, 1.0).unwrap();
        assert!(matches!(percolation_class(&g, 0.0), Err(Error::WrongBoundary { .. })));
    }

    #[test]
    fn thresholds() {
        let tol = 1e-3;
        let est = estimate_epsilon_nm(2, 1, Vec2::new(TAU / 4.0, 0.0), tol).unwrap();
        assert!(est.positive.1 - est.positive.0 <= tol);
        assert!(est.upper() <= epsilon_nm_bound(2, 1, 1.0).unwrap() + tol);
        assert!(est.positive.1 > 0.01, "{est:?}");
        let ang = make_magic_angle(2, 1).unwrap();
        let (sym, _) = nearest_symmetric_shift(Vec2::new(1.0, 2.0), &ang);
        let est = estimate_epsilon_nm(2, 1, sym, tol).unwrap();
        assert!(est.positive.0 <= level_band(&field21(sym, 256.0)), "{est:?}");
        assert!(est.positive.1 <= tol + level_band(&field21(sym, 256.0)), "{est:?}");
    }
}
