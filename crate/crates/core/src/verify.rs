//! Invariant suite behind `quasilevel verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use crate::error::Result;
use crate::geometry::{diameter, rotate, rotate_about, Vec2};
use crate::level::grid::GridField;
use crate::level::label::{label_components, Sign};
use crate::level::oracle::{flood_fill, random_field, same_partition};
use crate::level::percolation::{estimate_epsilon_nm, percolation_class, PercolationClass};
use crate::magic::{
    convergent_closed_form, convergents_sqrt2_minus_1, epsilon_nm_bound, make_magic_angle,
    nearest_symmetric_shift,
};
use crate::net::{extract_net_cells, find_critical_points, SEED_SPACING};
use crate::potential::{Angle, GeneralPhaseSpec, PotentialSpec};
use crate::scaling::{fit_exponent, run_sweep, staircase_check, SweepConfig, SweepRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn random_point(rng: &mut ChaCha8Rng, l: f64) -> Vec2 {
    Vec2::new(rng.gen_range(-l..l), rng.gen_range(-l..l))
}

/// Runs every check; deterministic for a given seed.
pub fn run_all(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();

    out.push(check("convergents", || {
        let cs = convergents_sqrt2_minus_1(20)?;
        let mut ok = [(1, 2), (2, 5), (5, 12), (12, 29)]
            .iter()
            .zip(&cs)
            .all(|(&(m, n), c)| c.m == m && c.n == n);
        for w in cs.windows(2) {
            ok &= w[1].m == w[0].n && w[1].n == w[0].m + 2 * w[0].n;
        }
        for c in &cs {
            let (m, n) = convergent_closed_form(c.s);
            ok &= m.round() as u64 == c.m && n.round() as u64 == c.n;
        }
        Ok((ok, format!("{} convergents, recurrence and closed forms", cs.len())))
    }));

    out.push(check("symmetry", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eight = PotentialSpec::eightfold(Vec2::ZERO);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let r = random_point(&mut rng, 100.0);
            worst = worst.max((eight.eval(rotate(r, FRAC_PI_4)) - eight.eval(r)).abs());
        }
        let alpha = rng.gen_range(0.0..FRAC_PI_2);
        let four = PotentialSpec::new(1.0, 1.0, Angle::Radians(alpha), Vec2::ZERO)?;
        let mut worst4: f64 = 0.0;
        for _ in 0..10_000 {
            let r = random_point(&mut rng, 100.0);
            worst4 = worst4.max((four.eval(rotate(r, FRAC_PI_2)) - four.eval(r)).abs());
        }
        let mut flip: f64 = 0.0;
        for _ in 0..1000 {
            let phases = [0; 4].map(|_| rng.gen_range(0.0..TAU));
            let g = GeneralPhaseSpec::new(1.0, 1.0, phases)?;
            let r = random_point(&mut rng, 100.0);
            flip = flip.max((g.flipped().eval(r) + g.eval(r)).abs());
        }
        let ok = worst <= 1e-10 && worst4 <= 1e-10 && flip <= 1e-12;
        Ok((ok, format!("eightfold {worst:.1e}, fourfold {worst4:.1e}, flip {flip:.1e}")))
    }));

    out.push(check("gradients", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let mut max_ga: f64 = 0.0;
        let mut fd_err: f64 = 0.0;
        let h = 1e-5 * TAU;
        for i in 0..100_000 {
            let alpha = rng.gen_range(0.0..FRAC_PI_2);
            let spec = PotentialSpec::new(1.0, 1.0, Angle::Radians(alpha), random_point(&mut rng, 50.0))?;
            let r = random_point(&mut rng, 50.0);
            max_ga = max_ga.max(spec.grad_a(r).norm());
            if i % 100 == 0 {
                let fd = |f: &dyn Fn(Vec2) -> f64| {
                    let dx = (f(r + Vec2::new(h, 0.0)) - f(r - Vec2::new(h, 0.0))) / (2.0 * h);
                    let dy = (f(r + Vec2::new(0.0, h)) - f(r - Vec2::new(0.0, h))) / (2.0 * h);
                    Vec2::new(dx, dy)
                };
                fd_err = fd_err.max((fd(&|p| spec.eval(p)) - spec.grad_r(r)).norm());
                let a = spec.shift();
                let fa = |p: Vec2| spec.with_shift(a + (p - r)).eval(r);
                fd_err = fd_err.max((fd(&fa) - spec.grad_a(r)).norm());
            }
        }
        let ok = max_ga <= 2f64.sqrt() + 1e-12 && fd_err <= 1e-6;
        Ok((ok, format!("max |grad_a V| {max_ga:.6} vs {:.6}, fd error {fd_err:.1e}", 2f64.sqrt())))
    }));

    out.push(check("magic periods", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (n, m) in [(2, 1), (3, 1), (5, 2), (12, 5)] {
            let ang = make_magic_angle(n, m)?;
            ok &= (ang.b1.norm() - ang.t_nm).abs() <= 1e-9 * ang.t_nm && ang.b1.dot(ang.b2).abs() <= 1e-9 * ang.t_nm.powi(2);
            let spec = PotentialSpec::new(1.0, 1.0, Angle::Radians(ang.angle), Vec2::ZERO)?;
            for _ in 0..200 {
                let r = random_point(&mut rng, 50.0);
                worst = worst.max((spec.eval(r + ang.b1) - spec.eval(r)).abs());
                worst = worst.max((spec.eval(r + ang.b2) - spec.eval(r)).abs());
            }
            let radius = ang.symmetric_shift_covering_radius();
            for _ in 0..200 {
                let a = random_point(&mut rng, 50.0);
                let (sym, dist) = nearest_symmetric_shift(a, &ang);
                ok &= dist <= radius * (1.0 + 1e-12);
                let c = ang.symmetry_center_for_shift(sym);
                let s = PotentialSpec::new(1.0, 1.0, Angle::Radians(ang.angle), sym)?;
                if let Some(c) = c {
                    let r = random_point(&mut rng, 20.0);
                    ok &= (s.eval(rotate_about(c, r, FRAC_PI_2)) - s.eval(r)).abs() <= 1e-9;
                } else {
                    ok = false;
                }
            }
        }
        ok &= worst <= 1e-10;
        Ok((ok, format!("periodicity error {worst:.1e}")))
    }));

    out.push(check("net cells", || {
        let mut ok = true;
        let mut detail = Vec::new();
        for (n, m) in [(2, 1), (3, 1), (5, 2), (12, 5)] {
            let ang = make_magic_angle(n, m)?;
            let search = find_critical_points(&ang, Vec2::ZERO, SEED_SPACING)?;
            ok &= search.euler_sum() == 0;
            let net = extract_net_cells(&ang, Vec2::ZERO, 1.0 / 64.0)?;
            let h = net.spacing;
            let cells: Vec<f64> = net.fourfold().map(|c| c.diameter / ang.t_nm).collect();
            ok &= !cells.is_empty();
            ok &= net
                .fourfold()
                .all(|c| c.diameter >= ang.t_nm - 2.0 * h && c.diameter <= 2f64.sqrt() * ang.t_nm + 2.0 * h);
            detail.push(format!("({n},{m}) D/Tnm {:.4}", cells.iter().cloned().fold(0.0, f64::max)));
        }
        Ok((ok, detail.join(", ")))
    }));

    out.push(check("thresholds", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 3);
        let tol = 1e-3;
        let mut ok = true;
        let mut detail = Vec::new();
        for (n, m) in [(2, 1), (3, 1)] {
            let a = random_point(&mut rng, 10.0);
            let est = estimate_epsilon_nm(n, m, a, tol)?;
            ok &= est.upper() <= epsilon_nm_bound(n, m, 1.0)? + tol;
            detail.push(format!("({n},{m}) {:.4}", est.upper()));
        }
        Ok((ok, detail.join(", ")))
    }));

    out.push(check("percolation classes", || {
        let ang = make_magic_angle(2, 1)?;
        let spec = PotentialSpec::new(1.0, 1.0, Angle::Radians(ang.angle), Vec2::new(0.9, 0.3))?;
        let g = GridField::sample_periodic(&spec, &ang, 64, Vec2::ZERO)?;
        let ok = percolation_class(&g, -3.9)? == PercolationClass::AMinus
            && percolation_class(&g, 3.9)? == PercolationClass::APlus;
        Ok((ok, "A_minus at -3.9, A_plus at 3.9".into()))
    }));

    out.push(check("labeling", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 4);
        let mut ok = true;
        for _ in 0..20 {
            let mut g = random_field(&mut rng, 64, 64);
            if rng.gen_bool(0.5) {
                g = g.into_periodic(Vec2::new(6.4, 0.0), Vec2::new(0.0, 6.4));
            }
            let eps = rng.gen_range(-0.5..0.5);
            for sign in [Sign::Above, Sign::Below] {
                ok &= same_partition(&g, &label_components(&g, eps, sign), &flood_fill(&g, eps, sign));
            }
        }
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let n = rng.gen_range(1..200);
            let pts: Vec<Vec2> = (0..n).map(|_| random_point(&mut rng, 10.0)).collect();
            let brute = pts
                .iter()
                .flat_map(|p| pts.iter().map(move |q| p.dist(*q)))
                .fold(0.0, f64::max);
            worst = worst.max((diameter(&pts) - brute).abs());
        }
        ok &= worst <= 1e-12;
        Ok((ok, format!("union-find = flood fill on 40 cases, calipers error {worst:.1e}")))
    }));

    out.push(check("fit", || {
        let recs: Vec<SweepRecord> = [0.5, 0.25, 0.125, 0.0625]
            .iter()
            .map(|&e: &f64| SweepRecord {
                epsilon: e,
                window_edge: 1.0,
                spacing: 0.1,
                d_hat: 3.0 / e,
                closed: 1,
                censored: 0,
                bound: f64::INFINITY,
                bound_satisfied: true,
            })
            .collect();
        let f = fit_exponent(&recs)?;
        Ok(((f.exponent + 1.0).abs() <= 1e-12, format!("exponent {:.12}", f.exponent)))
    }));

    out.push(check("staircase", || {
        let rows = staircase_check(2..=3, Vec2::ZERO)?;
        let ok = rows.iter().all(|r| r.pass);
        let d: Vec<String> = rows.iter().map(|r| format!("s={} {:.2}/{:.2}", r.s, r.d_hat, r.sqrt2_t_s)).collect();
        Ok((ok, d.join(", ")))
    }));

    out.push(check("sweep", || {
        let cfg = SweepConfig {
            epsilon_list: vec![3.0, 2.0, 1.5, 1.0],
            resolution: 1.0 / 16.0,
            ..SweepConfig::default()
        };
        let a = run_sweep(&cfg)?;
        let b = run_sweep(&SweepConfig { workers: 2, ..cfg })?;
        let ok = a.report_csv() == b.report_csv() && a.all_bounds_satisfied();
        Ok((ok, format!("{} records, deterministic, bound holds", a.records.len())))
    }));

    out
}
