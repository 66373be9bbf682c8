use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use quasilevel::level::grid::GridField;
use quasilevel::level::label::{label_components, Sign};
use quasilevel::level::percolation::{estimate_epsilon_nm_with, THRESHOLD_SPACING};
use quasilevel::magic::{
    convergents_sqrt2_minus_1, epsilon_nm_bound, epsilon_s, gap_to_45, make_magic_angle, reduced_pair, Rect,
};
use quasilevel::net::{extract_net_cells, CriticalKind};
use quasilevel::scaling::{
    parse_anchor, parse_epsilon_list, parse_vec2, random_wave_baseline, run_sweep, staircase_check, staircase_csv,
    Anchor, PotentialKind, ScalingReport, SweepConfig, SweepField,
};
use quasilevel::verify;
use quasilevel::Vec2;

#[derive(Parser)]
#[command(name = "quasilevel", version, about = "Level sets of eightfold quasiperiodic potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergents of √2-1 with their angles, periods and thresholds.
    Convergents {
        #[arg(long, default_value_t = 10)]
        max_s: usize,
    },
    /// Sample a potential on a grid and dump it.
    Field {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "csv", value_parser = ["csv", "binary"])]
        format: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Connected components of {V ≥ ε} or {V < ε}.
    Components {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, allow_hyphen_values = true)]
        epsilon: f64,
        #[arg(long)]
        sign: Sign,
    },
    /// Critical points and zero-level net cells of a symmetric approximant.
    SingularNet {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        /// Symmetric shift a'(p, q, i, j).
        #[arg(long, num_args = 4, value_names = ["P", "Q", "I", "J"], allow_hyphen_values = true)]
        shift_index: Option<Vec<i64>>,
        /// Grid spacing in units of T.
        #[arg(long, default_value_t = 1.0 / 64.0)]
        resolution: f64,
        /// Directory for critical_points.csv and net_cells.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// ε-sweep of the largest closed component against the diameter bound.
    Scaling {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Random-wave comparison sweep.
    Baseline {
        #[arg(long, default_value_t = 64)]
        waves: usize,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Staircase check D_hat(1.05 ε_s) ≤ √2 T_s.
    Staircase {
        #[arg(long, default_value_t = 2)]
        s_min: usize,
        #[arg(long, default_value_t = 5)]
        s_max: usize,
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        shift: String,
    },
    /// Bracket the open-lines interval ε_{n,m}(a) of an approximant.
    Threshold {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        shift: String,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Grid spacing in units of T.
        #[arg(long, default_value_t = THRESHOLD_SPACING)]
        resolution: f64,
    },
    /// Run the invariant suite; exits nonzero on any failure.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct GridArgs {
    /// eightfold, magic(n,m), general_alpha(deg) or random_wave(N,seed).
    #[arg(long, default_value = "eightfold")]
    potential: String,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    shift: String,
    /// Window centre of an open window.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    center: String,
    /// Window edge in units of T.
    #[arg(long, default_value_t = 4.0)]
    edge: f64,
    /// Sample one period cell instead (magic potentials only).
    #[arg(long)]
    periodic: bool,
    /// Grid spacing in units of T.
    #[arg(long, default_value_t = 1.0 / 64.0)]
    resolution: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    epsilon_list: Option<String>,
    #[arg(long)]
    window_factor: Option<f64>,
    #[arg(long)]
    resolution: Option<f64>,
    /// origin, "x,y" or random.
    #[arg(long, allow_hyphen_values = true)]
    anchor: Option<String>,
    /// Anchors averaged with --anchor random.
    #[arg(long, default_value_t = 8)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl SweepArgs {
    fn apply(&self, mut cfg: SweepConfig) -> Result<SweepConfig> {
        if let Some(s) = &self.epsilon_list {
            cfg.epsilon_list = parse_epsilon_list(s)?;
        }
        if let Some(w) = self.window_factor {
            cfg.window_factor = w;
        }
        if let Some(r) = self.resolution {
            cfg.resolution = r;
        }
        if let Some(a) = &self.anchor {
            cfg.anchor = parse_anchor(a, self.trials)?;
        } else if let Anchor::Random { .. } = cfg.anchor {
            cfg.anchor = Anchor::Random { trials: self.trials };
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_path = o.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn sample(args: &GridArgs) -> Result<GridField> {
    let kind: PotentialKind = args.potential.parse()?;
    let shift = parse_vec2(&args.shift)?;
    let field = SweepField::new(kind, shift)?;
    let t = quasilevel::potential::ScalarField::period(&field);
    let spacing = args.resolution * t;
    if args.periodic {
        let PotentialKind::Magic { n, m } = kind else {
            bail!("--periodic needs a magic(n,m) potential");
        };
        let angle = make_magic_angle(n, m)?;
        let cells = (angle.t_nm / spacing).ceil() as usize;
        return Ok(GridField::sample_periodic(&field, &angle, cells, Vec2::ZERO)?);
    }
    let center = parse_vec2(&args.center)?;
    Ok(GridField::sample_open(&field, Rect::centered(center, 0.5 * args.edge * t), spacing)?)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn convergents(max_s: usize, w: &mut impl Write) -> Result<()> {
    writeln!(w, "s,m,n,m0,n0,angle_deg,gap_to_45deg_rad,T_s_over_T,epsilon_s_over_V0")?;
    for c in convergents_sqrt2_minus_1(max_s)? {
        let (m0, n0) = reduced_pair(c.n, c.m);
        let angle = 2.0 * (c.m as f64 / c.n as f64).atan();
        let t_s = ((m0 as f64).powi(2) + (n0 as f64).powi(2)).sqrt();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            c.s,
            c.m,
            c.n,
            m0,
            n0,
            sci(angle.to_degrees()),
            sci(gap_to_45(c.m, c.n)),
            sci(t_s),
            sci(epsilon_s(c.s, 1.0, 1.0)?.exact)
        )?;
    }
    Ok(())
}

fn components(grid: &GridArgs, epsilon: f64, sign: Sign, w: &mut impl Write) -> Result<()> {
    let field = sample(grid)?;
    writeln!(w, "label,sign,n_cells,diameter,touches_boundary,wrap_i,wrap_j")?;
    for c in label_components(&field, epsilon, sign) {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            c.label,
            c.sign.as_str(),
            c.cells.len(),
            sci(c.diameter),
            c.touches_boundary,
            c.wrap_vector.0,
            c.wrap_vector.1
        )?;
    }
    Ok(())
}

fn singular_net(n: u64, m: u64, index: Option<&[i64]>, resolution: f64, out: &Path) -> Result<()> {
    let angle = make_magic_angle(n, m)?;
    let a = match index {
        Some(&[p, q, i, j]) => angle.symmetric_shift(p, q, i, j),
        _ => Vec2::ZERO,
    };
    let net = extract_net_cells(&angle, a, resolution)?;
    std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
    let mut cp = BufWriter::new(File::create(out.join("critical_points.csv"))?);
    writeln!(cp, "x,y,value,type,hess_det")?;
    for p in &net.critical_points {
        let kind = match p.kind {
            CriticalKind::Min => "min",
            CriticalKind::Max => "max",
            CriticalKind::Saddle => "saddle",
            CriticalKind::Degenerate => "degenerate",
        };
        writeln!(cp, "{},{},{},{},{}", sci(p.position.x), sci(p.position.y), sci(p.value), kind, sci(p.hessian_det))?;
    }
    cp.flush()?;
    let mut nc = BufWriter::new(File::create(out.join("net_cells.csv"))?);
    writeln!(nc, "cell_id,sign,diameter,diameter_over_Tnm,fourfold")?;
    for c in &net.cells {
        writeln!(
            nc,
            "{},{},{},{},{}",
            c.cell_id,
            c.sign.as_str(),
            sci(c.diameter),
            sci(c.diameter / angle.t_nm),
            c.fourfold
        )?;
    }
    nc.flush()?;
    eprintln!(
        "{} critical points, {} zero-level saddles, {} fourfold cells, {} satellite regions{}",
        net.critical_points.len(),
        net.saddles.len(),
        net.fourfold().count(),
        net.satellites().count(),
        if net.is_generic() { "" } else { " (non-generic net)" }
    );
    Ok(())
}

fn finish_sweep(report: &ScalingReport, out: &Path) -> Result<ExitCode> {
    report.write(out)?;
    print!("{}", report.report_csv());
    match (&report.fit, &report.fit_error) {
        (Some(f), _) => eprintln!("fitted exponent {:.4} ± {:.4} over {} points", f.exponent, f.stderr, f.n_points),
        (None, Some(e)) => eprintln!("no fit: {e}"),
        _ => {}
    }
    if !report.baseline && !report.all_bounds_satisfied() {
        eprintln!("diameter bound violated");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let stdout = io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Convergents { max_s } => convergents(max_s, &mut w)?,
        Command::Field { grid, format, out } => {
            let field = sample(&grid)?;
            let mut sink: Box<dyn Write> = match out {
                Some(p) => Box::new(BufWriter::new(File::create(&p).with_context(|| p.display().to_string())?)),
                None => Box::new(&mut w),
            };
            if format == "binary" {
                field.write_binary(&mut sink)?;
            } else {
                field.write_csv(&mut sink)?;
            }
            sink.flush()?;
        }
        Command::Components { grid, epsilon, sign } => components(&grid, epsilon, sign, &mut w)?,
        Command::SingularNet { n, m, shift_index, resolution, out } => {
            singular_net(n, m, shift_index.as_deref(), resolution, &out)?
        }
        Command::Scaling { config, sweep } => {
            let base = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| p.display().to_string())?;
                    SweepConfig::parse(&text)?
                }
                None => SweepConfig::default(),
            };
            let cfg = sweep.apply(base)?;
            drop(w);
            return finish_sweep(&run_sweep(&cfg)?, &cfg.output_path);
        }
        Command::Baseline { waves, sweep } => {
            let cfg = sweep.apply(SweepConfig::default())?;
            drop(w);
            return finish_sweep(&random_wave_baseline(waves, cfg.seed, &cfg)?, &cfg.output_path);
        }
        Command::Staircase { s_min, s_max, shift } => {
            let rows = staircase_check(s_min..=s_max, parse_vec2(&shift)?)?;
            write!(w, "{}", staircase_csv(&rows))?;
            if !rows.iter().all(|r| r.pass) {
                w.flush()?;
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Threshold { n, m, shift, tol, resolution } => {
            let est = estimate_epsilon_nm_with(n, m, parse_vec2(&shift)?, tol, resolution)?;
            writeln!(w, "n,m,pos_lo,pos_hi,neg_lo,neg_hi,spacing,bound")?;
            writeln!(
                w,
                "{n},{m},{},{},{},{},{},{}",
                sci(est.positive.0),
                sci(est.positive.1),
                sci(est.negative.0),
                sci(est.negative.1),
                sci(est.spacing),
                sci(epsilon_nm_bound(n, m, 1.0)?)
            )?;
        }
        Command::Verify { seed } => {
            let checks = verify::run_all(seed);
            let mut failed = 0;
            for c in &checks {
                writeln!(w, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
                failed += usize::from(!c.passed);
            }
            writeln!(w, "{} checks, {failed} failed", checks.len())?;
            w.flush()?;
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
