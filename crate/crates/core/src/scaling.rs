//! ε-sweeps of the largest closed component, bound checks and exponent fits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::level::grid::{samples_along, SPACING_FLOOR};
use crate::level::scan::{scan_window, scan_working_set, ClosedStats};
use crate::magic::{convergent, diameter_bound, epsilon_s, make_magic_angle, period_s, Rect};
use crate::potential::{Angle, PotentialSpec, ScalarField};

pub const DEFAULT_MEMORY_CAP: u64 = 8 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PotentialKind {
    Eightfold,
    Magic { n: u64, m: u64 },
    GeneralAlpha { degrees: f64 },
    RandomWave { waves: usize, seed: u64 },
}

impl PotentialKind {
    pub fn is_baseline(&self) -> bool {
        matches!(self, PotentialKind::RandomWave { .. })
    }
}

fn call_args<'a>(s: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let rest = s.strip_prefix(name)?.trim_start();
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

impl FromStr for PotentialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Format(format!("unrecognised potential '{s}'"));
        let int = |t: &str| t.parse::<u64>().map_err(|_| bad());
        if s == "eightfold" {
            return Ok(PotentialKind::Eightfold);
        }
        if let Some(a) = call_args(s, "magic") {
            let [n, m] = a[..] else { return Err(bad()) };
            return Ok(PotentialKind::Magic { n: int(n)?, m: int(m)? });
        }
        if let Some(a) = call_args(s, "general_alpha") {
            let [d] = a[..] else { return Err(bad()) };
            return Ok(PotentialKind::GeneralAlpha { degrees: d.parse().map_err(|_| bad())? });
        }
        if let Some(a) = call_args(s, "random_wave") {
            let [w, seed] = a[..] else { return Err(bad()) };
            return Ok(PotentialKind::RandomWave { waves: int(w)? as usize, seed: int(seed)? });
        }
        Err(bad())
    }
}

impl std::fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PotentialKind::Eightfold => write!(f, "eightfold"),
            PotentialKind::Magic { n, m } => write!(f, "magic({n},{m})"),
            PotentialKind::GeneralAlpha { degrees } => write!(f, "general_alpha({degrees})"),
            PotentialKind::RandomWave { waves, seed } => write!(f, "random_wave({waves},{seed})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Anchor {
    Point(Vec2),
    /// Average over this many anchors drawn from the sweep seed.
    Random { trials: usize },
}

/// Random-wave field `V0 √(2/N) Σ cos(k_i·r + φ_i)` with `|k_i| = k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWave {
    v0: f64,
    k: f64,
    waves: Vec<(Vec2, f64)>,
}

impl RandomWave {
    pub fn new(waves: usize, seed: u64, v0: f64, k: f64) -> Result<Self> {
        if waves < 16 {
            return Err(Error::InvalidParameter(format!("random wave needs N >= 16, got {waves}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves = (0..waves)
            .map(|_| {
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (Vec2::new(k * th.cos(), k * th.sin()), ph)
            })
            .collect();
        Ok(RandomWave { v0, k, waves })
    }

    pub fn eval(&self, r: Vec2) -> f64 {
        let s: f64 = self.waves.iter().map(|&(kv, ph)| (kv.dot(r) + ph).cos()).sum();
        self.v0 * (2.0 / self.waves.len() as f64).sqrt() * s
    }
}

impl ScalarField for RandomWave {
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

#[derive(Debug, Clone)]
pub enum SweepField {
    Pair(PotentialSpec),
    Random(RandomWave),
}

impl SweepField {
    pub fn new(kind: PotentialKind, shift: Vec2) -> Result<Self> {
        Ok(match kind {
            PotentialKind::Eightfold => SweepField::Pair(PotentialSpec::eightfold(shift)),
            PotentialKind::Magic { n, m } => {
                let ang = make_magic_angle(n, m)?;
                SweepField::Pair(PotentialSpec::new(1.0, 1.0, Angle::Radians(ang.angle), shift)?)
            }
            PotentialKind::GeneralAlpha { degrees } => {
                SweepField::Pair(PotentialSpec::new(1.0, 1.0, Angle::Degrees(degrees), shift)?)
            }
            PotentialKind::RandomWave { waves, seed } => SweepField::Random(RandomWave::new(waves, seed, 1.0, 1.0)?),
        })
    }
}

impl ScalarField for SweepField {
    fn value(&self, r: Vec2) -> f64 {
        match self {
            SweepField::Pair(p) => p.eval(r),
            SweepField::Random(w) => w.eval(r),
        }
    }
    fn amplitude(&self) -> f64 {
        match self {
            SweepField::Pair(p) => p.v0(),
            SweepField::Random(w) => w.v0,
        }
    }
    fn wavenumber(&self) -> f64 {
        match self {
            SweepField::Pair(p) => p.k(),
            SweepField::Random(w) => w.k,
        }
    }
}

/// Default ε-list: `(√2 - 1)^i` for `i = 0..4`, in units of `V0`.
pub fn default_epsilon_list() -> Vec<f64> {
    (0..4).map(|i| (2f64.sqrt() - 1.0).powi(i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub potential: PotentialKind,
    pub shift: Vec2,
    pub epsilon_list: Vec<f64>,
    pub window_factor: f64,
    /// Grid spacing in units of `T`.
    pub resolution: f64,
    pub output_path: PathBuf,
    pub anchor: Anchor,
    pub seed: u64,
    pub workers: usize,
    pub memory_cap: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            potential: PotentialKind::Eightfold,
            shift: Vec2::ZERO,
            epsilon_list: default_epsilon_list(),
            window_factor: 2.0,
            resolution: 1.0 / 32.0,
            output_path: PathBuf::from("out"),
            anchor: Anchor::Point(Vec2::ZERO),
            seed: 0,
            workers: 1,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }
}

pub fn parse_vec2(s: &str) -> Result<Vec2> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y] = parts[..] else {
        return Err(Error::Format(format!("expected 'x, y', got '{s}'")));
    };
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Format(format!("bad number '{t}'")));
    let v = Vec2::new(num(x)?, num(y)?);
    if !v.is_finite() {
        return Err(Error::NonFinite("vector"));
    }
    Ok(v)
}

pub fn parse_epsilon_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad epsilon '{}'", t.trim()))))
        .collect()
}

pub fn parse_anchor(s: &str, trials: usize) -> Result<Anchor> {
    match s.trim() {
        "origin" => Ok(Anchor::Point(Vec2::ZERO)),
        "random" => Ok(Anchor::Random { trials }),
        other => Ok(Anchor::Point(parse_vec2(other)?)),
    }
}

impl SweepConfig {
    /// Parses flat `key = value` text with `#` comments over the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        let mut anchor = None;
        let mut trials = 8;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line: no + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected 'key = value'".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let wrap = |e: Error| err(e.to_string());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("bad number '{v}'")));
            let int = |v: &str| v.parse::<u64>().map_err(|_| err(format!("bad integer '{v}'")));
            match key {
                "potential" => cfg.potential = value.parse().map_err(wrap)?,
                "shift" => cfg.shift = parse_vec2(value).map_err(wrap)?,
                "epsilon_list" => cfg.epsilon_list = parse_epsilon_list(value).map_err(wrap)?,
                "window_factor" => cfg.window_factor = num(value)?,
                "resolution" => cfg.resolution = num(value)?,
                "output_path" => cfg.output_path = PathBuf::from(value),
                "anchor" => anchor = Some(value.to_string()),
                "trials" => trials = int(value)? as usize,
                "seed" => cfg.seed = int(value)?,
                "workers" => cfg.workers = int(value)? as usize,
                "memory_cap" => cfg.memory_cap = int(value)?,
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }
        if let Some(a) = anchor {
            cfg.anchor = parse_anchor(&a, trials)?;
        } else if trials != 8 {
            return Err(Error::Config { line: 0, message: "'trials' needs 'anchor = random'".into() });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.epsilon_list.is_empty() {
            return bad("epsilon_list is empty".into());
        }
        if self.epsilon_list.iter().any(|e| !(*e > 0.0 && *e < 4.0)) {
            return bad("epsilon_list entries must lie in (0, 4)".into());
        }
        if self.epsilon_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("epsilon_list must be strictly decreasing".into());
        }
        if !(self.window_factor >= 2.0) {
            return bad(format!("window_factor must be >= 2, got {}", self.window_factor));
        }
        if !(self.resolution > 0.0 && self.resolution <= SPACING_FLOOR) {
            return bad(format!("resolution must lie in (0, 1/16], got {}", self.resolution));
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        if let Anchor::Random { trials: 0 } = self.anchor {
            return bad("trials must be >= 1".into());
        }
        if !self.shift.is_finite() {
            return Err(Error::NonFinite("shift"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    /// Signed level.
    pub epsilon: f64,
    pub window_edge: f64,
    pub spacing: f64,
    /// Mean over anchors of the largest closed diameter.
    pub d_hat: f64,
    pub closed: u64,
    pub censored: u64,
    pub bound: f64,
    pub bound_satisfied: bool,
}

impl SweepRecord {
    pub fn sign(&self) -> char {
        if self.epsilon >= 0.0 {
            '+'
        } else {
            '-'
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        let total = self.closed + self.censored;
        if total == 0 {
            1.0
        } else {
            self.censored as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub exponent: f64,
    pub stderr: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub potential: PotentialKind,
    pub baseline: bool,
    /// Descending `|ε|`, `+ε` before `-ε`.
    pub records: Vec<SweepRecord>,
    pub fit: Option<Fit>,
    pub fit_error: Option<String>,
}

/// Least squares slope of `ln y` against `ln x`, with its standard error.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<Fit> {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len();
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all epsilons equal".into()));
    }
    let slope = sxy / sxx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    Ok(Fit { exponent: slope, stderr: (ssr / (n - 2) as f64 / sxx).sqrt(), n_points: n })
}

/// Fits `D_hat ∝ |ε|^p` using, per `|ε|`, the sign with the larger `D_hat`,
/// keeping only points whose censored fraction is below one half.
pub fn fit_exponent(records: &[SweepRecord]) -> Result<Fit> {
    let mut best: Vec<&SweepRecord> = Vec::new();
    for r in records {
        match best.iter_mut().find(|b| b.epsilon.abs() == r.epsilon.abs()) {
            Some(b) if r.d_hat > b.d_hat => *b = r,
            Some(_) => {}
            None => best.push(r),
        }
    }
    let pts: Vec<(f64, f64)> = best
        .into_iter()
        .filter(|r| r.d_hat > 0.0 && r.censored_fraction() < 0.5)
        .map(|r| (r.epsilon.abs(), r.d_hat))
        .collect();
    fit_power_law(&pts)
}

/// Grid spacing that keeps the scan of a window of `edge` under `cap`,
/// starting from `spacing` and coarsening toward the `T/16` floor.
pub fn fit_spacing(edge: f64, spacing: f64, period: f64, levels: usize, cap: u64) -> Result<f64> {
    let floor = SPACING_FLOOR * period;
    let mut h = spacing;
    loop {
        let required = scan_working_set(samples_along(edge, h), levels);
        if required <= cap {
            return Ok(h);
        }
        if h >= floor {
            return Err(Error::MemoryCapExceeded { required, cap });
        }
        h = (h * 2.0).min(floor);
    }
}

fn anchors(cfg: &SweepConfig, period: f64) -> Vec<Vec2> {
    match cfg.anchor {
        Anchor::Point(p) => vec![p],
        Anchor::Random { trials } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let l = 100.0 * period;
            (0..trials).map(|_| Vec2::new(rng.gen_range(-l..l), rng.gen_range(-l..l))).collect()
        }
    }
}

fn measure(field: &SweepField, cfg: &SweepConfig, eps: f64, anchors: &[Vec2]) -> Result<[SweepRecord; 2]> {
    let t = field.period();
    let bound = diameter_bound(eps, field.amplitude(), field.wavenumber())?;
    let edge = cfg.window_factor * bound;
    let spacing = fit_spacing(edge, cfg.resolution * t, t, 2, cfg.memory_cap)?;
    let mut sums = [ClosedStats::default(); 2];
    for &a in anchors {
        let stats = scan_window(field, Rect::centered(a, 0.5 * edge), spacing, &[eps, -eps])?;
        for (acc, s) in sums.iter_mut().zip(stats) {
            acc.d_hat += s.d_hat;
            acc.closed += s.closed;
            acc.censored += s.censored;
        }
    }
    let k = anchors.len() as f64;
    Ok([0, 1].map(|i| {
        let d_hat = sums[i].d_hat / k;
        SweepRecord {
            epsilon: if i == 0 { eps } else { -eps },
            window_edge: edge,
            spacing,
            d_hat,
            closed: sums[i].closed,
            censored: sums[i].censored,
            bound,
            bound_satisfied: d_hat <= bound,
        }
    }))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Measures `D_hat(±ε)` for every configured `ε` and fits the exponent.
/// Levels where no component closes inside the window are recorded with
/// `d_hat = 0` and left out of the fit.
pub fn run_sweep(cfg: &SweepConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let field = SweepField::new(cfg.potential, cfg.shift)?;
    let anchors = anchors(cfg, field.period());
    let per_eps: Vec<Result<[SweepRecord; 2]>> = pool(cfg.workers)?.install(|| {
        cfg.epsilon_list.par_iter().map(|&e| measure(&field, cfg, e, &anchors)).collect()
    });
    let mut records = Vec::with_capacity(2 * per_eps.len());
    for r in per_eps {
        records.extend(r?);
    }
    let (fit, fit_error) = match fit_exponent(&records) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ScalingReport { potential: cfg.potential, baseline: cfg.potential.is_baseline(), records, fit, fit_error })
}

/// The sweep with a random-wave potential of `waves` plane waves.
pub fn random_wave_baseline(waves: usize, seed: u64, cfg: &SweepConfig) -> Result<ScalingReport> {
    let cfg = SweepConfig { potential: PotentialKind::RandomWave { waves, seed }, ..cfg.clone() };
    run_sweep(&cfg)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

impl ScalingReport {
    pub fn report_csv(&self) -> String {
        let mut s = String::from("epsilon,sign,window_edge,spacing,d_hat,censored,bound,bound_satisfied\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                sci(r.epsilon.abs()),
                r.sign(),
                sci(r.window_edge),
                sci(r.spacing),
                sci(r.d_hat),
                r.censored,
                sci(r.bound),
                r.bound_satisfied
            );
        }
        s
    }

    pub fn fit_csv(&self) -> String {
        match self.fit {
            Some(f) => format!("exponent,stderr,n_points\n{},{},{}\n", sci(f.exponent), sci(f.stderr), f.n_points),
            None => "exponent,stderr,n_points\nnan,nan,0\n".into(),
        }
    }

    /// `ln |ε|` and `ln D_hat` per fitted point, one pair per line.
    pub fn loglog(&self) -> String {
        let mut s = String::from("# ln_epsilon ln_d_hat\n");
        for r in self.records.iter().filter(|r| r.d_hat > 0.0) {
            let _ = writeln!(s, "{} {}", sci(r.epsilon.abs().ln()), sci(r.d_hat.ln()));
        }
        s
    }

    pub fn all_bounds_satisfied(&self) -> bool {
        self.records.iter().all(|r| r.bound_satisfied)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("report.csv"), self.report_csv()).map_err(io)?;
        std::fs::write(dir.join("fit.csv"), self.fit_csv()).map_err(io)?;
        std::fs::write(dir.join("loglog.dat"), self.loglog()).map_err(io)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaircaseRow {
    pub s: usize,
    pub epsilon_s: f64,
    pub sqrt2_t_s: f64,
    pub d_hat: f64,
    pub spacing: f64,
    pub pass: bool,
}

/// Staircase spacing, in units of `T`.
pub const STAIRCASE_SPACING: f64 = 1.0 / 32.0;

/// For each `s`, measures `D_hat(±1.05 ε_s)` for `V(r, 45°, a)` on a window
/// of edge `3√2 T_s` and checks `D_hat ≤ √2 T_s + 2h`.
pub fn staircase_check(s_range: std::ops::RangeInclusive<usize>, a: Vec2) -> Result<Vec<StaircaseRow>> {
    let spec = PotentialSpec::eightfold(a);
    let t = spec.period();
    let h = STAIRCASE_SPACING * t;
    let mut rows = Vec::new();
    for s in s_range {
        convergent(s)?;
        let eps = epsilon_s(s, 1.0, 1.0)?.exact;
        let sqrt2_t_s = 2f64.sqrt() * period_s(s, 1.0)?;
        let level = 1.05 * eps;
        let stats = scan_window(&spec, Rect::centered(Vec2::ZERO, 1.5 * sqrt2_t_s), h, &[level, -level])?;
        let d_hat = stats[0].d_hat.max(stats[1].d_hat);
        rows.push(StaircaseRow { s, epsilon_s: eps, sqrt2_t_s, d_hat, spacing: h, pass: d_hat <= sqrt2_t_s + 2.0 * h });
    }
    Ok(rows)
}

pub fn staircase_csv(rows: &[StaircaseRow]) -> String {
    let mut s = String::from("s,epsilon_s,sqrt2_T_s,d_hat,pass\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.s, sci(r.epsilon_s), sci(r.sqrt2_t_s), sci(r.d_hat), r.pass);
    }
    s
}
