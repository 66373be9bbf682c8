//! Streaming component statistics for open windows too large to hold.
//!
//! Rows are fed one at a time; each row is cut into runs of equal sign and
//! runs are joined to the previous row by the same connectivity rule as
//! [`label_components`](crate::level::label::label_components). A component
//! that has no run in the newest row is complete and is reduced to its
//! diameter immediately. Only run endpoints are kept, since the convex hull
//! of a component's cell centres is the hull of its run endpoints, and point
//! lists are periodically shrunk to their hull.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, hull_diameter, Vec2};
use crate::level::grid::{samples_along, GridField, SPACING_FLOOR};
use crate::magic::Rect;
use crate::potential::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClosedStats {
    /// Largest diameter of a component not touching the window edge, both signs.
    pub d_hat: f64,
    pub d_above: f64,
    pub d_below: f64,
    pub closed: u64,
    /// Components touching the window edge.
    pub censored: u64,
}

#[derive(Debug, Clone, Copy)]
struct Run {
    start: u32,
    end: u32,
    above: bool,
    node: u32,
}

#[derive(Debug, Default)]
struct Comp {
    above: bool,
    touches: bool,
    pts: Vec<Vec2>,
    hull_len: usize,
}

impl Comp {
    fn absorb(&mut self, mut other: Comp) {
        self.touches |= other.touches;
        if self.touches {
            self.pts = Vec::new();
            return;
        }
        if other.pts.len() > self.pts.len() {
            std::mem::swap(&mut self.pts, &mut other.pts);
            self.hull_len = other.hull_len;
        }
        self.pts.extend_from_slice(&other.pts);
        self.maybe_shrink();
    }

    fn maybe_shrink(&mut self) {
        if self.pts.len() > 256.max(2 * self.hull_len) {
            self.pts = convex_hull(&self.pts);
            self.hull_len = self.pts.len();
        }
    }
}

/// Incremental labeler for one threshold over a grid of `nx × ny` samples.
#[derive(Debug)]
pub struct LevelScanner {
    epsilon: f64,
    nx: usize,
    ny: usize,
    spacing: f64,
    row: usize,
    prev_vals: Vec<f64>,
    prev_runs: Vec<Run>,
    comps: Vec<Comp>,
    stats: ClosedStats,
    // scratch
    parent: Vec<u32>,
    slots: Vec<Option<Comp>>,
}

impl LevelScanner {
    pub fn new(epsilon: f64, nx: usize, ny: usize, spacing: f64) -> Self {
        LevelScanner {
            epsilon,
            nx,
            ny,
            spacing,
            row: 0,
            prev_vals: Vec::with_capacity(nx),
            prev_runs: Vec::new(),
            comps: Vec::new(),
            stats: ClosedStats::default(),
            parent: Vec::new(),
            slots: Vec::new(),
        }
    }

    /// Rough bytes held per scanner for a row width of `nx`.
    pub fn working_set(nx: usize) -> u64 {
        // previous values, two run lists in the worst case, per-run scratch
        (nx as u64) * (8 + 2 * std::mem::size_of::<Run>() as u64 + 48)
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let other = self.slots[rb as usize].take().expect("live root");
        self.parent[rb as usize] = ra;
        self.slots[ra as usize].as_mut().expect("live root").absorb(other);
    }

    fn finalize(&mut self, c: Comp) {
        if c.touches {
            self.stats.censored += 1;
            return;
        }
        self.stats.closed += 1;
        let d = hull_diameter(&convex_hull(&c.pts)) * self.spacing;
        let slot = if c.above { &mut self.stats.d_above } else { &mut self.stats.d_below };
        *slot = slot.max(d);
        self.stats.d_hat = self.stats.d_hat.max(d);
    }

    pub fn push_row(&mut self, vals: &[f64]) {
        assert_eq!(vals.len(), self.nx, "row width");
        assert!(self.row < self.ny, "too many rows");
        let (nx, eps, j) = (self.nx, self.epsilon, self.row);
        let edge_row = j == 0 || j + 1 == self.ny;
        let n_prev = self.comps.len() as u32;

        // runs of the new row
        let mut runs: Vec<Run> = Vec::new();
        let mut start = 0usize;
        for i in 1..=nx {
            if i == nx || (vals[i] >= eps) != (vals[start] >= eps) {
                runs.push(Run {
                    start: start as u32,
                    end: (i - 1) as u32,
                    above: vals[start] >= eps,
                    node: n_prev + runs.len() as u32,
                });
                start = i;
            }
        }

        self.parent.clear();
        self.parent.extend(0..n_prev + runs.len() as u32);
        self.slots.clear();
        self.slots.extend(self.comps.drain(..).map(Some));
        for r in &runs {
            let touches = edge_row || r.start == 0 || r.end as usize + 1 == nx;
            let pts = if touches {
                Vec::new()
            } else if r.start == r.end {
                vec![Vec2::new(r.start as f64, j as f64)]
            } else {
                vec![Vec2::new(r.start as f64, j as f64), Vec2::new(r.end as f64, j as f64)]
            };
            self.slots.push(Some(Comp { above: r.above, touches, pts, hull_len: 0 }));
        }

        if j > 0 {
            let prev_runs = std::mem::take(&mut self.prev_runs);
            // vertical contacts
            let (mut p, mut c) = (0, 0);
            while p < prev_runs.len() && c < runs.len() {
                let (pr, cr) = (prev_runs[p], runs[c]);
                if pr.above == cr.above && pr.start <= cr.end && cr.start <= pr.end {
                    self.union(pr.node, cr.node);
                }
                if pr.end < cr.end {
                    p += 1;
                } else {
                    c += 1;
                }
            }
            // diagonal contacts in checkerboard plaquettes, which sit where
            // both rows change sign between i and i + 1
            let mut p = 0;
            for c in 0..runs.len().saturating_sub(1) {
                let i = runs[c].end;
                while prev_runs[p].end < i {
                    p += 1;
                }
                if prev_runs[p].end != i || prev_runs[p].above == runs[c].above {
                    continue;
                }
                let iu = i as usize;
                let centre =
                    0.25 * (self.prev_vals[iu] + self.prev_vals[iu + 1] + vals[iu] + vals[iu + 1]);
                if (centre >= eps) == prev_runs[p].above {
                    self.union(prev_runs[p].node, runs[c + 1].node);
                } else {
                    self.union(prev_runs[p + 1].node, runs[c].node);
                }
            }
            self.prev_runs = prev_runs;
        }

        // components with no run in this row are complete
        let total = self.parent.len();
        let mut alive = vec![false; total];
        for r in &runs {
            let root = self.find(r.node);
            alive[root as usize] = true;
        }
        for p in 0..n_prev {
            let root = self.find(p);
            if !alive[root as usize] {
                if let Some(c) = self.slots[root as usize].take() {
                    self.finalize(c);
                }
            }
        }

        // compact ids for the next row
        let mut new_id = vec![u32::MAX; total];
        for r in runs.iter_mut() {
            let root = self.find(r.node) as usize;
            if new_id[root] == u32::MAX {
                new_id[root] = self.comps.len() as u32;
                let mut c = self.slots[root].take().expect("live root");
                c.maybe_shrink();
                self.comps.push(c);
            }
            r.node = new_id[root];
        }

        self.prev_runs = runs;
        self.prev_vals.clear();
        self.prev_vals.extend_from_slice(vals);
        self.row += 1;
        if self.row == self.ny {
            for c in std::mem::take(&mut self.comps) {
                self.finalize(c);
            }
        }
    }

    pub fn finish(self) -> ClosedStats {
        assert_eq!(self.row, self.ny, "scanner finished early");
        self.stats
    }
}

/// `(D_hat, censored)` of an open-window field over both signs at `epsilon`.
pub fn max_closed_diameter(field: &GridField, epsilon: f64) -> Result<ClosedStats> {
    if field.is_periodic() {
        return Err(Error::WrongBoundary { expected: "open-window" });
    }
    if !epsilon.is_finite() {
        return Err(Error::NonFinite("epsilon"));
    }
    let mut s = LevelScanner::new(epsilon, field.nx(), field.ny(), field.spacing());
    for j in 0..field.ny() {
        s.push_row(field.row(j));
    }
    let stats = s.finish();
    if stats.closed == 0 {
        return Err(Error::WindowTooSmall { epsilon });
    }
    Ok(stats)
}

/// Working-set bytes of [`scan_window`] for a row width of `nx`.
pub fn scan_working_set(nx: usize, levels: usize) -> u64 {
    let block = block_rows(nx) as u64 * nx as u64 * 8;
    block + levels as u64 * LevelScanner::working_set(nx)
}

fn block_rows(nx: usize) -> usize {
    ((1usize << 21) / nx.max(1)).clamp(1, 1024)
}

/// Streams `f` over the square window `rect` at `spacing` into one scanner
/// per level. Rows are evaluated in parallel blocks and scanned in order, so
/// the result does not depend on the thread count.
pub fn scan_window<F: ScalarField + ?Sized>(
    f: &F,
    rect: Rect,
    spacing: f64,
    levels: &[f64],
) -> Result<Vec<ClosedStats>> {
    let floor = SPACING_FLOOR * f.period();
    if !(spacing > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    if spacing > floor * (1.0 + 1e-12) {
        return Err(Error::ResolutionTooCoarse { spacing, floor });
    }
    if levels.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("epsilon"));
    }
    let nx = samples_along(rect.max.x - rect.min.x, spacing);
    let ny = samples_along(rect.max.y - rect.min.y, spacing);
    let mut scanners: Vec<LevelScanner> =
        levels.iter().map(|&e| LevelScanner::new(e, nx, ny, spacing)).collect();
    let rows = block_rows(nx);
    let mut buf = vec![0.0; rows * nx];
    let mut j0 = 0;
    while j0 < ny {
        let count = rows.min(ny - j0);
        buf[..count * nx].par_chunks_mut(nx).enumerate().for_each(|(dj, row)| {
            let y = rect.min.y + (j0 + dj) as f64 * spacing;
            for (i, v) in row.iter_mut().enumerate() {
                *v = f.value(Vec2::new(rect.min.x + i as f64 * spacing, y));
            }
        });
        for row in buf[..count * nx].chunks_exact(nx) {
            for s in scanners.iter_mut() {
                s.push_row(row);
            }
        }
        j0 += count;
    }
    Ok(scanners.into_iter().map(LevelScanner::finish).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::oracle::random_field;
    use crate::level::label::{label_components, Sign};
    use crate::potential::PotentialSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn reference(field: &GridField, eps: f64) -> ClosedStats {
        let mut s = ClosedStats::default();
        for sign in [Sign::Above, Sign::Below] {
            for c in label_components(field, eps, sign) {
                if c.touches_boundary {
                    s.censored += 1;
                } else {
                    s.closed += 1;
                    s.d_hat = s.d_hat.max(c.diameter);
                    let slot = if sign == Sign::Above { &mut s.d_above } else { &mut s.d_below };
                    *slot = slot.max(c.diameter);
                }
            }
        }
        s
    }

    fn assert_close(a: &ClosedStats, b: &ClosedStats) {
        assert_eq!((a.closed, a.censored), (b.closed, b.censored));
        assert!((a.d_hat - b.d_hat).abs() < 1e-9, "{} vs {}", a.d_hat, b.d_hat);
        assert!((a.d_above - b.d_above).abs() < 1e-9);
        assert!((a.d_below - b.d_below).abs() < 1e-9);
    }

    #[test]
    fn streaming_matches_full_labeling_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..300 {
            let (nx, ny) = (rng.gen_range(1..40), rng.gen_range(1..40));
            let g = random_field(&mut rng, nx, ny);
            let eps = rng.gen_range(-0.6..0.6);
            let mut s = LevelScanner::new(eps, nx, ny, g.spacing());
            for j in 0..ny {
                s.push_row(g.row(j));
            }
            assert_close(&s.finish(), &reference(&g, eps));
        }
    }

    #[test]
    fn streaming_matches_full_labeling_potential() {
        let spec = PotentialSpec::eightfold(Vec2::new(0.4, 1.3));
        let rect = Rect::centered(Vec2::ZERO, 40.0);
        let g = GridField::sample_open(&spec, rect, TAU / 32.0).unwrap();
        for eps in [-1.2, -0.3, 0.05, 0.5, 2.0] {
            assert_close(&max_closed_diameter(&g, eps).unwrap(), &reference(&g, eps));
        }
        let levels = [0.5, -0.5];
        let streamed = scan_window(&spec, rect, TAU / 32.0, &levels).unwrap();
        for (s, e) in streamed.iter().zip(levels) {
            assert_close(s, &reference(&g, e));
        }
    }

    #[test]
    fn point_lists_shrink_to_hulls() {
        // one big closed blob forces many hull compressions
        let n = 600;
        let c = (n as f64 - 1.0) / 2.0;
        let vals: Vec<f64> = (0..n * n)
            .map(|idx| {
                let (i, j) = ((idx % n) as f64, (idx / n) as f64);
                let r2 = (i - c).powi(2) + (j - c).powi(2);
                1.0 - r2 / (250.0f64).powi(2)
            })
            .collect();
        let g = GridField::from_values(Vec2::ZERO, 1.0, n, n, vals, 1.0, 1.0).unwrap();
        let s = max_closed_diameter(&g, 0.0).unwrap();
        assert_close(&s, &reference(&g, 0.0));
        assert!((s.d_above - 500.0).abs() < 2.0);
    }

    #[test]
    fn errors() {
        let g = GridField::from_values(Vec2::ZERO, 1.0, 3, 3, vec![1.0; 9], 1.0, 1.0).unwrap();
        assert!(matches!(max_closed_diameter(&g, 0.0), Err(Error::WindowTooSmall { .. })));
        let p = g.clone().into_periodic(Vec2::new(3.0, 0.0), Vec2::new(0.0, 3.0));
        assert!(matches!(max_closed_diameter(&p, 0.0), Err(Error::WrongBoundary { .. })));
        let spec = PotentialSpec::eightfold(Vec2::ZERO);
        let rect = Rect::centered(Vec2::ZERO, 5.0);
        assert!(matches!(
            scan_window(&spec, rect, 1.0, &[0.1]),
            Err(Error::ResolutionTooCoarse { .. })
        ));
    }

    #[test]
    fn deep_caps_are_small() {
        let spec = PotentialSpec::eightfold(Vec2::ZERO);
        let rect = Rect::centered(Vec2::ZERO, 4.0 * TAU);
        let s = scan_window(&spec, rect, TAU / 64.0, &[3.9]).unwrap()[0];
        assert!(s.closed >= 1);
        assert!(s.d_hat <= TAU, "{}", s.d_hat);
    }
}
