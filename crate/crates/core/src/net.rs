//! Critical points of periodic approximants and the cells of the singular
//! net `{V = 0}` for symmetric shifts.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{diameter, Vec2};
use crate::level::grid::{Boundary, GridField};
use crate::level::label::{label_components_masked, LevelComponent, Sign};
use crate::magic::{nearest_symmetric_shift, MagicAngle};
use crate::potential::{Angle, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CriticalKind {
    Min,
    Max,
    Saddle,
    Degenerate,
}

impl CriticalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CriticalKind::Min => "min",
            CriticalKind::Max => "max",
            CriticalKind::Saddle => "saddle",
            CriticalKind::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    /// Representative inside the fundamental cell.
    pub position: Vec2,
    pub kind: CriticalKind,
    pub value: f64,
    pub hessian_det: f64,
    pub hessian_trace: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// `|grad|` after the last Newton step over `|grad|` before it.
    pub convergence_ratio: f64,
}

pub const NEWTON_MAX_ITER: usize = 100;
/// Default seed grid spacing, in units of `T`.
pub const SEED_SPACING: f64 = 1.0 / 64.0;

fn check_symmetric(angle: &MagicAngle, a: Vec2) -> Result<()> {
    let (_, dist) = nearest_symmetric_shift(a, angle);
    if dist > 1e-9 * angle.period {
        return Err(Error::NotSymmetricShift { shift: a, dist });
    }
    Ok(())
}

fn spec_for(angle: &MagicAngle, a: Vec2) -> Result<PotentialSpec> {
    PotentialSpec::new(1.0, TAU / angle.period, Angle::Radians(angle.angle), a)
}

enum Refined {
    Critical { x: Vec2, grad_norm: f64, iterations: usize, ratio: f64 },
    /// The descent ended at a nonzero local minimum of `|grad V|²`.
    NotCritical { seed: Vec2, at: Vec2, grad_norm: f64 },
}

/// Newton iteration on `grad V = 0` with steps capped at `T/8` and halved
/// until `|grad V|` decreases. The Newton direction is a descent direction
/// for `|grad V|²` wherever the Hessian is invertible, so the iteration ends
/// either at a critical point or at a nonzero minimum of `|grad V|²`.
fn newton(spec: &PotentialSpec, seed: Vec2) -> Result<Refined> {
    let (k, v0, t) = (spec.k(), spec.v0(), spec.period());
    let done = 1e-13 * k * v0;
    let accept = 1e-10 * k * v0;
    // quadratic convergence is measured on steps above the roundoff floor
    let witness_floor = 1e-6 * k * v0;
    let stationary = 1e-7 * k * k * v0;
    let mut x = seed;
    let mut g = spec.grad_r(x);
    let mut ratio = 0.0;
    let stop = |x: Vec2, gn: f64, iterations: usize, ratio: f64| {
        if gn <= accept {
            Refined::Critical { x, grad_norm: gn, iterations, ratio }
        } else {
            Refined::NotCritical { seed, at: x, grad_norm: gn }
        }
    };
    for it in 0..NEWTON_MAX_ITER {
        let gn = g.norm();
        if gn <= done {
            return Ok(stop(x, gn, it, ratio));
        }
        let [[a, b], [_, d]] = spec.hessian(x);
        let det = a * d - b * b;
        // H g is half the gradient of |grad V|²
        let hg = Vec2::new(a * g.x + b * g.y, b * g.x + d * g.y);
        if det == 0.0 || (gn > accept && hg.norm() <= stationary * gn) {
            return Ok(stop(x, gn, it, ratio));
        }
        let mut step = Vec2::new((d * g.x - b * g.y) / det, (-b * g.x + a * g.y) / det);
        while step.norm() > t / 8.0 {
            step = step * 0.5;
        }
        let mut improved = None;
        for _ in 0..60 {
            let y = x - step;
            let gy = spec.grad_r(y);
            if gy.norm() < gn {
                improved = Some((y, gy));
                break;
            }
            step = step * 0.5;
        }
        let Some((y, gy)) = improved else {
            return Ok(stop(x, gn, it, ratio));
        };
        if gn > accept && gn - gy.norm() <= 1e-10 * gn {
            // descent has stalled on the |grad V|² landscape
            return Ok(stop(y, gy.norm(), it + 1, ratio));
        }
        if gn >= witness_floor {
            ratio = gy.norm() / gn;
        }
        x = y;
        g = gy;
    }
    if g.norm() <= accept {
        return Ok(stop(x, g.norm(), NEWTON_MAX_ITER, ratio));
    }
    Err(Error::NewtonStall { seed, iterations: NEWTON_MAX_ITER })
}

fn classify(spec: &PotentialSpec, x: Vec2) -> (CriticalKind, f64, f64) {
    let [[a, b], [_, d]] = spec.hessian(x);
    let det = a * d - b * b;
    let tr = a + d;
    let scale = spec.k() * spec.k() * spec.v0();
    let kind = if det.abs() < 1e-8 * scale * scale {
        CriticalKind::Degenerate
    } else if det < 0.0 {
        CriticalKind::Saddle
    } else if tr < 0.0 {
        CriticalKind::Max
    } else {
        CriticalKind::Min
    };
    (kind, det, tr)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonCriticalSeed {
    pub seed: Vec2,
    /// Where the descent stopped, and `|grad V|` there.
    pub at: Vec2,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub seeds: usize,
    pub non_critical: Vec<NonCriticalSeed>,
}

impl CriticalSearch {
    pub fn count(&self, kind: CriticalKind) -> usize {
        self.points.iter().filter(|p| p.kind == kind).count()
    }

    /// `#min + #max - #saddle`, zero on a torus when all points are Morse.
    pub fn euler_sum(&self) -> i64 {
        self.count(CriticalKind::Min) as i64 + self.count(CriticalKind::Max) as i64
            - self.count(CriticalKind::Saddle) as i64
    }
}

/// All critical points of `V(r, ᾱ, a)` in one period cell, for any shift.
pub fn critical_points_any(angle: &MagicAngle, a: Vec2, seed_spacing: f64) -> Result<CriticalSearch> {
    let spec = spec_for(angle, a)?;
    let n = (angle.t_nm / (seed_spacing * angle.period)).ceil().max(4.0) as usize;
    let grad_sq = GridField::sample_periodic(&GradSq(spec), angle, n, Vec2::ZERO)?;
    let mut seeds = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let v = grad_sq.value(i, j);
            let mut is_min = true;
            'nbrs: for dj in [n - 1, 0, 1] {
                for di in [n - 1, 0, 1] {
                    if (di, dj) == (0, 0) {
                        continue;
                    }
                    if grad_sq.value((i + di) % n, (j + dj) % n) < v {
                        is_min = false;
                        break 'nbrs;
                    }
                }
            }
            if is_min {
                seeds.push(grad_sq.position(i, j));
            }
        }
    }
    let refined: Vec<Result<Refined>> = seeds.par_iter().map(|&s| newton(&spec, s)).collect();

    let merge_r = 1e-6 * angle.period;
    let mut points: Vec<CriticalPoint> = Vec::new();
    let mut non_critical = Vec::new();
    for r in refined {
        let (x, grad_norm, iterations, ratio) = match r? {
            Refined::Critical { x, grad_norm, iterations, ratio } => (x, grad_norm, iterations, ratio),
            Refined::NotCritical { seed, at, grad_norm } => {
                non_critical.push(NonCriticalSeed { seed, at, grad_norm });
                continue;
            }
        };
        let x = angle.reduce_to_cell(x);
        if points.iter().any(|c| angle.min_image(c.position, x).norm() < merge_r) {
            continue;
        }
        let (kind, det, tr) = classify(&spec, x);
        points.push(CriticalPoint {
            position: x,
            kind,
            value: spec.eval(x),
            hessian_det: det,
            hessian_trace: tr,
            grad_norm,
            iterations,
            convergence_ratio: ratio,
        });
    }
    points.sort_by(|p, q| {
        p.kind
            .cmp(&q.kind)
            .then(p.value.total_cmp(&q.value))
            .then(p.position.x.total_cmp(&q.position.x))
            .then(p.position.y.total_cmp(&q.position.y))
    });
    Ok(CriticalSearch { points, seeds: seeds.len(), non_critical })
}

struct GradSq(PotentialSpec);

impl crate::potential::ScalarField for GradSq {
    fn value(&self, r: Vec2) -> f64 {
        self.0.grad_r(r).norm_sq()
    }
    fn amplitude(&self) -> f64 {
        self.0.v0()
    }
    fn wavenumber(&self) -> f64 {
        self.0.k()
    }
}

/// Critical points for a symmetric shift `a_sym`, seeded at `seed_spacing · T`.
pub fn find_critical_points(angle: &MagicAngle, a_sym: Vec2, seed_spacing: f64) -> Result<CriticalSearch> {
    check_symmetric(angle, a_sym)?;
    critical_points_any(angle, a_sym, seed_spacing)
}

/// Saddles lying on the zero level, within `1e-8 V0`.
pub fn net_saddles(points: &[CriticalPoint]) -> Vec<CriticalPoint> {
    points
        .iter()
        .filter(|p| p.kind == CriticalKind::Saddle && p.value.abs() <= 1e-8)
        .copied()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub value: f64,
    pub kind: CriticalKind,
    pub count: usize,
}

/// Critical values binned to `1e-8 V0`, per kind.
pub fn saddle_level_histogram(angle: &MagicAngle, a_sym: Vec2) -> Result<Vec<HistogramBin>> {
    let pts = find_critical_points(angle, a_sym, SEED_SPACING)?.points;
    let mut bins: std::collections::BTreeMap<(CriticalKind, i64), usize> = Default::default();
    for p in &pts {
        *bins.entry((p.kind, (p.value / 1e-8).round() as i64)).or_default() += 1;
    }
    Ok(bins
        .into_iter()
        .map(|((kind, key), count)| HistogramBin { value: key as f64 * 1e-8, kind, count })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetCell {
    pub cell_id: usize,
    pub sign: Sign,
    pub component: LevelComponent,
    /// Indices into the net-saddle list of the saddles on this cell's boundary.
    pub boundary_saddles: Vec<usize>,
    /// Unrolled cell centres plus the adjacent saddle copies.
    pub points: Vec<Vec2>,
    pub diameter: f64,
    pub center: Vec2,
    /// Whether the cell is centred on a fourfold centre of the potential.
    pub fourfold: bool,
}

#[derive(Debug, Clone)]
pub struct NetCells {
    /// Components adjacent to net saddles: fourfold cells first, then the
    /// satellite regions between extra zero-level saddles.
    pub cells: Vec<NetCell>,
    pub saddles: Vec<CriticalPoint>,
    pub critical_points: Vec<CriticalPoint>,
    /// Components not adjacent to any net saddle.
    pub islands: usize,
    pub spacing: f64,
}

impl NetCells {
    pub fn fourfold(&self) -> impl Iterator<Item = &NetCell> {
        self.cells.iter().filter(|c| c.fourfold)
    }

    pub fn satellites(&self) -> impl Iterator<Item = &NetCell> {
        self.cells.iter().filter(|c| !c.fourfold)
    }

    /// A generic net has exactly two inequivalent zero-level saddles and
    /// no satellite regions.
    pub fn is_generic(&self) -> bool {
        self.saddles.len() == 2 && self.satellites().next().is_none()
    }
}

/// Cells of the zero-level net on one period cell at `spacing · T`.
///
/// Grid points within `3h` of a net saddle are left out of both sign sets,
/// which cuts the sets cleanly at the saddles; each cell then gets the
/// adjacent saddle positions back before its diameter is measured in the
/// universal cover.
pub fn extract_net_cells(angle: &MagicAngle, a_sym: Vec2, spacing: f64) -> Result<NetCells> {
    let critical_points = find_critical_points(angle, a_sym, SEED_SPACING)?.points;
    if let Some(p) = critical_points.iter().find(|p| p.kind == CriticalKind::Degenerate) {
        return Err(Error::NonGeneric(format!(
            "degenerate critical point at ({}, {})",
            p.position.x, p.position.y
        )));
    }
    let saddles = net_saddles(&critical_points);
    if saddles.is_empty() {
        return Err(Error::NonGeneric("no saddle on the zero level".into()));
    }
    let spec = spec_for(angle, a_sym)?;
    let n = (angle.t_nm / (spacing * angle.period)).ceil() as usize;
    let field = GridField::sample_periodic(&spec, angle, n, Vec2::ZERO)?;
    let h = field.spacing();
    let rho = 3.0 * h;
    let reach = rho + 2.0 * h;

    let excluded: Vec<bool> = (0..field.len())
        .map(|idx| {
            let p = field.position_of(idx);
            saddles.iter().any(|s| angle.min_image(p, s.position).norm() <= rho)
        })
        .collect();

    let Boundary::Periodic { b1, b2 } = field.boundary() else { unreachable!() };
    let c0 = angle
        .symmetry_center_for_shift(a_sym)
        .ok_or(Error::NotSymmetricShift { shift: a_sym, dist: 0.0 })?;
    let mut cells = Vec::new();
    let mut islands = 0;
    for sign in [Sign::Above, Sign::Below] {
        for comp in label_components_masked(&field, 0.0, sign, Some(&excluded)) {
            let mut points = Vec::with_capacity(comp.cells.len() + 8);
            let mut touching = Vec::new();
            for (&idx, &off) in comp.cells.iter().zip(&comp.offsets) {
                let p = field.position_of(idx);
                let up = p + b1 * off.0 as f64 + b2 * off.1 as f64;
                points.push(up);
                for (si, s) in saddles.iter().enumerate() {
                    let d = angle.min_image(p, s.position);
                    if d.norm() <= reach {
                        let copy = up + d;
                        if !touching.iter().any(|&(_, q): &(usize, Vec2)| q.dist(copy) < 1e-6 * angle.period) {
                            touching.push((si, copy));
                        }
                    }
                }
            }
            if touching.is_empty() {
                islands += 1;
                continue;
            }
            let n_cells = points.len();
            let center = points.iter().fold(Vec2::ZERO, |acc, &p| acc + p) * (1.0 / n_cells as f64);
            points.extend(touching.iter().map(|&(_, q)| q));
            let mut boundary_saddles: Vec<usize> = touching.iter().map(|&(si, _)| si).collect();
            boundary_saddles.sort_unstable();
            boundary_saddles.dedup();
            cells.push(NetCell {
                cell_id: 0,
                sign,
                diameter: diameter(&points),
                component: comp,
                boundary_saddles,
                points,
                center,
                fourfold: angle.distance_to_center_lattice(c0, center) <= 2.0 * h,
            });
        }
    }
    cells.sort_by_key(|c| !c.fourfold);
    for (i, c) in cells.iter_mut().enumerate() {
        c.cell_id = i;
    }
    Ok(NetCells { cells, saddles, critical_points, islands, spacing: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotate_about;
    use crate::magic::{make_magic_angle, symmetry_centers, Rect};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn two_one_has_two_zero_saddles() {
        let ang = make_magic_angle(2, 1).unwrap();
        let pts = find_critical_points(&ang, Vec2::ZERO, SEED_SPACING).unwrap().points;
        for p in &pts {
            assert!(p.grad_norm <= 1e-10, "{p:?}");
            assert!(p.convergence_ratio <= 1e-2, "{p:?}");
        }
        assert_eq!(net_saddles(&pts).len(), 2);
        let max = pts.iter().map(|p| p.value).fold(f64::MIN, f64::max);
        assert!((max - 4.0).abs() < 1e-12);
        let top = pts.iter().find(|p| (p.value - 4.0).abs() < 1e-9).unwrap();
        assert!(ang.min_image(top.position, Vec2::ZERO).norm() < 1e-9);
    }

    #[test]
    fn euler_count() {
        for (n, m) in [(2, 1), (3, 1), (5, 2)] {
            let ang = make_magic_angle(n, m).unwrap();
            let search = find_critical_points(&ang, Vec2::ZERO, SEED_SPACING).unwrap();
            assert_eq!(search.count(CriticalKind::Degenerate), 0);
            assert_eq!(search.euler_sum(), 0, "({n},{m})");
            for s in &search.non_critical {
                assert!(s.grad_norm > 1e-3, "{s:?}");
            }
        }
    }

    #[test]
    fn critical_set_invariant_under_center_rotation() {
        let ang = make_magic_angle(3, 1).unwrap();
        let pts = find_critical_points(&ang, Vec2::ZERO, SEED_SPACING).unwrap().points;
        let centers = symmetry_centers(&ang, &Rect::centered(Vec2::ZERO, ang.t_nm));
        for c in centers {
            for p in &pts {
                let q = rotate_about(c, p.position, FRAC_PI_2);
                let hit = pts.iter().any(|o| o.kind == p.kind && ang.min_image(o.position, q).norm() < 1e-8 * ang.period);
                assert!(hit);
            }
        }
    }

    #[test]
    fn non_symmetric_shift_rejected() {
        let ang = make_magic_angle(2, 1).unwrap();
        let a = Vec2::new(0.31, 0.17);
        assert!(matches!(find_critical_points(&ang, a, SEED_SPACING), Err(Error::NotSymmetricShift { .. })));
        assert!(matches!(saddle_level_histogram(&ang, a), Err(Error::NotSymmetricShift { .. })));
    }

    #[test]
    fn histogram_has_zero_level_saddles() {
        let ang = make_magic_angle(2, 1).unwrap();
        let h = saddle_level_histogram(&ang, Vec2::ZERO).unwrap();
        let zero = h.iter().find(|b| b.kind == CriticalKind::Saddle && b.value.abs() <= 1e-8).unwrap();
        assert_eq!(zero.count, 2);
        assert!(h.iter().any(|b| b.kind == CriticalKind::Max && (b.value - 4.0).abs() < 1e-8));
    }

    #[test]
    fn net_cells_obey_diameter_bound() {
        for (n, m) in [(2, 1), (3, 1), (5, 2)] {
            let ang = make_magic_angle(n, m).unwrap();
            let net = extract_net_cells(&ang, Vec2::ZERO, 1.0 / 64.0).unwrap();
            let h = net.spacing;
            assert_eq!(net.fourfold().count(), 2, "({n},{m})");
            assert_eq!(net.is_generic(), (n, m) != (5, 2));
            for c in net.fourfold() {
                assert!(!c.component.wraps());
                assert!(c.diameter >= ang.t_nm - 2.0 * h, "({n},{m}) {}", c.diameter / ang.t_nm);
                assert!(c.diameter <= 2f64.sqrt() * ang.t_nm + 2.0 * h, "({n},{m}) {}", c.diameter / ang.t_nm);
            }
        }
    }

    #[test]
    fn net_cells_are_fourfold_symmetric() {
        let ang = make_magic_angle(2, 1).unwrap();
        let net = extract_net_cells(&ang, Vec2::ZERO, 1.0 / 64.0).unwrap();
        let spec = spec_for(&ang, Vec2::ZERO).unwrap();
        let tol = 2.0 * 2f64.sqrt() * 1.5 * net.spacing;
        for c in &net.cells {
            for &p in c.points.iter().step_by(7) {
                let q = rotate_about(c.center, p, FRAC_PI_2);
                let v = spec.eval(q);
                assert!(c.sign.contains(v, 0.0) || v.abs() <= tol, "{v}");
            }
        }
    }
}
