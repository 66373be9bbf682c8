//! Uniform sampling of a scalar field, in an open window or over one
//! fundamental cell of a periodic approximant, plus CSV and binary dumps.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::magic::{MagicAngle, Rect};
use crate::potential::{PotentialSpec, ScalarField};

/// Coarsest admissible spacing, in units of the underlying period `T`.
pub const SPACING_FLOOR: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Open,
    /// Grid covers exactly one cell of the lattice spanned by `b1, b2`.
    Periodic { b1: Vec2, b2: Vec2 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    Open(Rect),
    /// The minimal period cell of the potential's magic angle.
    PeriodicCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    origin: Vec2,
    step_i: Vec2,
    step_j: Vec2,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    boundary: Boundary,
    v0: f64,
    k: f64,
}

fn check_spacing(spacing: f64, period: f64) -> Result<()> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    let floor = SPACING_FLOOR * period;
    if spacing > floor * (1.0 + 1e-12) {
        return Err(Error::ResolutionTooCoarse { spacing, floor });
    }
    Ok(())
}

/// Number of samples along an edge of length `len` at `spacing`, both ends included.
pub fn samples_along(len: f64, spacing: f64) -> usize {
    (len / spacing + 1e-9).floor() as usize + 1
}

impl GridField {
    fn fill<F: ScalarField + ?Sized>(
        f: &F,
        origin: Vec2,
        step_i: Vec2,
        step_j: Vec2,
        nx: usize,
        ny: usize,
        boundary: Boundary,
    ) -> Self {
        let mut values = vec![0.0; nx * ny];
        values.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            let base = origin + step_j * j as f64;
            for (i, v) in row.iter_mut().enumerate() {
                *v = f.value(base + step_i * i as f64);
            }
        });
        GridField {
            origin,
            step_i,
            step_j,
            nx,
            ny,
            values,
            boundary,
            v0: f.amplitude(),
            k: f.wavenumber(),
        }
    }

    /// Samples `f` on the square grid of `spacing` anchored at `rect.min`.
    pub fn sample_open<F: ScalarField + ?Sized>(f: &F, rect: Rect, spacing: f64) -> Result<Self> {
        check_spacing(spacing, f.period())?;
        if !(rect.min.is_finite() && rect.max.is_finite())
            || rect.max.x < rect.min.x
            || rect.max.y < rect.min.y
        {
            return Err(Error::InvalidParameter("degenerate window".into()));
        }
        let nx = samples_along(rect.max.x - rect.min.x, spacing);
        let ny = samples_along(rect.max.y - rect.min.y, spacing);
        Ok(Self::fill(
            f,
            rect.min,
            Vec2::new(spacing, 0.0),
            Vec2::new(0.0, spacing),
            nx,
            ny,
            Boundary::Open,
        ))
    }

    /// Samples one period cell `origin + u b1 + v b2`, `u, v ∈ [0, 1)`, with
    /// `n` points per side. `f` must be periodic under the angle's lattice.
    pub fn sample_periodic<F: ScalarField + ?Sized>(
        f: &F,
        angle: &MagicAngle,
        n: usize,
        origin: Vec2,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("need at least 2 samples per side".into()));
        }
        check_spacing(angle.t_nm / n as f64, f.period())?;
        let (b1, b2) = (angle.b1, angle.b2);
        Ok(Self::fill(
            f,
            origin,
            b1 * (1.0 / n as f64),
            b2 * (1.0 / n as f64),
            n,
            n,
            Boundary::Periodic { b1, b2 },
        ))
    }

    /// Builds a field from explicit values on a square open grid.
    pub fn from_values(
        origin: Vec2,
        spacing: f64,
        nx: usize,
        ny: usize,
        values: Vec<f64>,
        v0: f64,
        k: f64,
    ) -> Result<Self> {
        if values.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter(format!(
                "expected {nx} x {ny} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field value"));
        }
        Ok(GridField {
            origin,
            step_i: Vec2::new(spacing, 0.0),
            step_j: Vec2::new(0.0, spacing),
            nx,
            ny,
            values,
            boundary: Boundary::Open,
            v0,
            k,
        })
    }

    /// Same values reinterpreted on a periodic cell (test grids).
    pub fn into_periodic(mut self, b1: Vec2, b2: Vec2) -> Self {
        self.step_i = b1 * (1.0 / self.nx as f64);
        self.step_j = b2 * (1.0 / self.ny as f64);
        self.boundary = Boundary::Periodic { b1, b2 };
        self
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn origin(&self) -> Vec2 {
        self.origin
    }
    pub fn spacing(&self) -> f64 {
        self.step_i.norm()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
    pub fn is_periodic(&self) -> bool {
        matches!(self.boundary, Boundary::Periodic { .. })
    }
    pub fn amplitude(&self) -> f64 {
        self.v0
    }
    pub fn wavenumber(&self) -> f64 {
        self.k
    }
    pub fn steps(&self) -> (Vec2, Vec2) {
        (self.step_i, self.step_j)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Vec2 {
        self.origin + self.step_i * i as f64 + self.step_j * j as f64
    }

    pub fn position_of(&self, idx: usize) -> Vec2 {
        self.position(idx % self.nx, idx / self.nx)
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    /// Negated copy (the phase-flipped field).
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = -*v);
        out
    }
}

/// Samples `V(r, α, a)` in an open window or on its magic-angle period cell.
pub fn sample_grid(spec: &PotentialSpec, window: Window, spacing: f64) -> Result<GridField> {
    match window {
        Window::Open(rect) => GridField::sample_open(spec, rect, spacing),
        Window::PeriodicCell => {
            let angle = MagicAngle::detect(spec.alpha(), spec.k())
                .ok_or(Error::NotPeriodic { alpha: spec.alpha() })?;
            check_spacing(spacing, spec.period())?;
            let n = (angle.t_nm / spacing).ceil() as usize;
            GridField::sample_periodic(spec, &angle, n, Vec2::ZERO)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BinaryHeader {
    magic: String,
    nx: usize,
    ny: usize,
    spacing: f64,
    origin: [f64; 2],
}

const MAGIC: &str = "QLVL1";
const HEADER_BLOCK: usize = 64;

impl GridField {
    /// CSV dump: a metadata header line and its values, then one grid row per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nx,ny,spacing,origin_x,origin_y")?;
        writeln!(
            w,
            "{},{},{:.16e},{:.16e},{:.16e}",
            self.nx,
            self.ny,
            self.spacing(),
            self.origin.x,
            self.origin.y
        )?;
        for j in 0..self.ny {
            let line: Vec<String> = self.row(j).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Binary dump: JSON header padded with spaces to a multiple of 64 bytes
    /// (newline last), then row-major little-endian f64 values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let header = BinaryHeader {
            magic: MAGIC.into(),
            nx: self.nx,
            ny: self.ny,
            spacing: self.spacing(),
            origin: [self.origin.x, self.origin.y],
        };
        let mut text = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
        let total = (text.len() + 1).div_ceil(HEADER_BLOCK) * HEADER_BLOCK;
        text.extend(std::iter::repeat_n(' ', total - 1 - text.len()));
        text.push('\n');
        w.write_all(text.as_bytes())?;
        let mut buf = Vec::with_capacity(self.nx * 8);
        for j in 0..self.ny {
            buf.clear();
            for v in self.row(j) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    /// Reads a binary dump as an open-window field with unit scales.
    pub fn read_binary<R: BufRead>(mut r: R) -> Result<Self> {
        let mut header = Vec::new();
        r.read_until(b'\n', &mut header)?;
        if header.is_empty() || header.len() % HEADER_BLOCK != 0 || !header.ends_with(b"\n") {
            return Err(Error::Format("header is not a whole number of 64-byte blocks".into()));
        }
        let parsed: BinaryHeader = serde_json::from_slice(header.trim_ascii_end())
            .map_err(|e| Error::Format(e.to_string()))?;
        if parsed.magic != MAGIC {
            return Err(Error::Format(format!("bad magic {:?}", parsed.magic)));
        }
        let count = parsed
            .nx
            .checked_mul(parsed.ny)
            .ok_or_else(|| Error::Format("grid size overflows".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != count * 8 {
            return Err(Error::Format(format!(
                "expected {} value bytes, found {}",
                count * 8,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        GridField::from_values(
            Vec2::new(parsed.origin[0], parsed.origin[1]),
            parsed.spacing,
            parsed.nx,
            parsed.ny,
            values,
            1.0,
            1.0,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::label::{label_components, Sign};
    use crate::magic::make_magic_angle;
    use crate::potential::Angle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn spec21(a: Vec2) -> PotentialSpec {
        let ang = make_magic_angle(2, 1).unwrap();
        PotentialSpec::new(1.0, 1.0, Angle::Radians(ang.angle), a).unwrap()
    }

    #[test]
    fn open_values_match_direct_evaluation() {
        let spec = PotentialSpec::eightfold(Vec2::new(0.3, -1.1));
        let rect = Rect::centered(Vec2::new(2.0, 1.0), 10.0);
        let g = sample_grid(&spec, Window::Open(rect), TAU / 32.0).unwrap();
        assert_eq!(g.nx(), samples_along(20.0, TAU / 32.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (i, j) = (rng.gen_range(0..g.nx()), rng.gen_range(0..g.ny()));
            assert_eq!(g.value(i, j), spec.eval(g.position(i, j)));
        }
    }

    #[test]
    fn coarse_spacing_rejected() {
        let spec = PotentialSpec::eightfold(Vec2::ZERO);
        let rect = Rect::centered(Vec2::ZERO, 5.0);
        let err = sample_grid(&spec, Window::Open(rect), TAU / 15.0).unwrap_err();
        assert!(matches!(err, Error::ResolutionTooCoarse { .. }));
        assert!(sample_grid(&spec, Window::Open(rect), TAU / 16.0).is_ok());
    }

    #[test]
    fn periodic_requires_magic_angle() {
        let spec = PotentialSpec::eightfold(Vec2::ZERO);
        let err = sample_grid(&spec, Window::PeriodicCell, TAU / 32.0).unwrap_err();
        assert!(matches!(err, Error::NotPeriodic { .. }));
    }

    #[test]
    fn periodic_seam_continuity() {
        let spec = spec21(Vec2::new(0.7, 0.2));
        let g = sample_grid(&spec, Window::PeriodicCell, TAU / 32.0).unwrap();
        assert!(g.is_periodic());
        let Boundary::Periodic { b1, b2 } = g.boundary() else { unreachable!() };
        let n = g.nx();
        for t in 0..n {
            // the sample one step past the seam is the wrapped sample
            let past_i = g.position(n - 1, t) + g.steps().0;
            assert!((spec.eval(past_i) - g.value(0, t)).abs() < 1e-9);
            assert!(past_i.dist(g.position(0, t) + b1) < 1e-9);
            let past_j = g.position(t, n - 1) + g.steps().1;
            assert!((spec.eval(past_j) - g.value(t, 0)).abs() < 1e-9);
            assert!(past_j.dist(g.position(t, 0) + b2) < 1e-9);
        }
    }

    #[test]
    fn component_counts_stable_under_refinement() {
        let spec = spec21(Vec2::new(0.7, 0.2));
        let count = |spacing: f64| {
            let g = sample_grid(&spec, Window::PeriodicCell, spacing).unwrap();
            (
                label_components(&g, 0.5, Sign::Above).len(),
                label_components(&g, 0.5, Sign::Below).len(),
            )
        };
        assert_eq!(count(TAU / 32.0), count(TAU / 64.0));
    }

    #[test]
    fn binary_round_trip() {
        let spec = PotentialSpec::eightfold(Vec2::ZERO);
        let rect = Rect::centered(Vec2::new(0.1, 0.2), 3.0);
        let g = sample_grid(&spec, Window::Open(rect), TAU / 17.0).unwrap();
        let mut bytes = Vec::new();
        g.write_binary(&mut bytes).unwrap();
        assert!(bytes.starts_with(b"{\"magic\":\"QLVL1\""));
        let header_len = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
        assert_eq!(header_len % 64, 0);
        assert_eq!(bytes.len(), header_len + 8 * g.len());
        let back = GridField::read_binary(&bytes[..]).unwrap();
        assert_eq!(back.values(), g.values());
        assert_eq!((back.nx(), back.ny()), (g.nx(), g.ny()));
        assert_eq!(back.spacing(), g.spacing());
        assert_eq!(back.origin(), g.origin());
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(GridField::read_binary(&b"hello\n"[..]).is_err());
        let mut bad = format!("{:63}\n", r#"{"magic":"NOPE","nx":1,"ny":1,"spacing":0.1,"origin":[0,0]}"#)
            .into_bytes();
        bad.extend_from_slice(&0f64.to_le_bytes());
        assert!(matches!(GridField::read_binary(&bad[..]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_layout() {
        let g = GridField::from_values(Vec2::ZERO, 0.25, 3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 1.0, 1.0)
            .unwrap();
        let mut out = Vec::new();
        g.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "nx,ny,spacing,origin_x,origin_y");
        assert!(lines[1].starts_with("3,2,2.5"));
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3].split(',').count(), 3);
    }
}
