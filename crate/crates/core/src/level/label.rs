//! Connected components of a thresholded grid.
//!
//! Cells are 4-connected. In a checkerboard plaquette (two diagonal corners
//! in the set, the other two outside) the bilinear centre value, the mean of
//! the four corners, decides which diagonal pair is joined: the pair whose
//! side the centre falls on. Exactly one of `{V ≥ ε}` and `{V < ε}` gets the
//! diagonal, so the two partitions never cross.

use serde::Serialize;

use crate::geometry::{diameter, Vec2};
use crate::level::grid::{Boundary, GridField};
use crate::unionfind::{Offset, UnionFind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sign {
    /// `V < ε`
    Below,
    /// `V ≥ ε`
    Above,
}

impl Sign {
    #[inline]
    pub fn contains(self, v: f64, epsilon: f64) -> bool {
        match self {
            Sign::Above => v >= epsilon,
            Sign::Below => v < epsilon,
        }
    }

    pub fn opposite(self) -> Sign {
        match self {
            Sign::Above => Sign::Below,
            Sign::Below => Sign::Above,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Above => "above",
            Sign::Below => "below",
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "above" => Ok(Sign::Above),
            "below" => Ok(Sign::Below),
            other => Err(format!("sign must be 'above' or 'below', got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelComponent {
    pub label: usize,
    pub sign: Sign,
    /// Row-major grid indices, ascending.
    pub cells: Vec<usize>,
    /// Lattice translation of each cell's copy in the unrolled component
    /// (periodic grids only; empty otherwise).
    pub offsets: Vec<Offset>,
    pub diameter: f64,
    pub touches_boundary: bool,
    /// First wrap vector found, `(0, 0)` for a bounded component.
    pub wrap_vector: Offset,
    /// Number of independent wrap directions (0, 1 or 2).
    pub wrap_rank: u8,
}

impl LevelComponent {
    pub fn wraps(&self) -> bool {
        self.wrap_rank > 0
    }
}

/// Union-find over all cells of `field`; non-members stay singletons.
pub(crate) fn union_cells(
    field: &GridField,
    epsilon: f64,
    sign: Sign,
    excluded: Option<&[bool]>,
) -> (UnionFind, Vec<bool>) {
    let (nx, ny) = (field.nx(), field.ny());
    let vals = field.values();
    let mut member: Vec<bool> = vals.iter().map(|&v| sign.contains(v, epsilon)).collect();
    if let Some(ex) = excluded {
        assert_eq!(ex.len(), member.len(), "mask size");
        member.iter_mut().zip(ex).for_each(|(m, &x)| *m &= !x);
    }
    let mut uf = UnionFind::new(nx * ny);
    let periodic = field.is_periodic();
    let (imax, jmax) = if periodic { (nx, ny) } else { (nx - 1, ny - 1) };

    for j in 0..ny {
        for i in 0..nx {
            let a = j * nx + i;
            if i < imax {
                let (i1, wi) = if i + 1 == nx { (0, 1) } else { (i + 1, 0) };
                let b = j * nx + i1;
                if member[a] && member[b] {
                    uf.union(a as u32, b as u32, (wi, 0));
                }
            }
            if j < jmax {
                let (j1, wj) = if j + 1 == ny { (0, 1) } else { (j + 1, 0) };
                let b = j1 * nx + i;
                if member[a] && member[b] {
                    uf.union(a as u32, b as u32, (0, wj));
                }
            }
            if i < imax && j < jmax {
                let (i1, wi) = if i + 1 == nx { (0, 1) } else { (i + 1, 0) };
                let (j1, wj) = if j + 1 == ny { (0, 1) } else { (j + 1, 0) };
                let (p00, p10, p01, p11) = (a, j * nx + i1, j1 * nx + i, j1 * nx + i1);
                let main = member[p00] && member[p11] && !member[p10] && !member[p01];
                let anti = member[p10] && member[p01] && !member[p00] && !member[p11];
                if main || anti {
                    let centre = 0.25 * (vals[p00] + vals[p10] + vals[p01] + vals[p11]);
                    if sign.contains(centre, epsilon) {
                        if main {
                            uf.union(p00 as u32, p11 as u32, (wi, wj));
                        } else {
                            uf.union(p10 as u32, p01 as u32, (-wi, wj));
                        }
                    }
                }
            }
        }
    }
    (uf, member)
}

fn unrolled(field: &GridField, idx: usize, off: Offset) -> Vec2 {
    let p = field.position_of(idx);
    match field.boundary() {
        Boundary::Open => p,
        Boundary::Periodic { b1, b2 } => p + b1 * off.0 as f64 + b2 * off.1 as f64,
    }
}

/// Components of `{V ≥ ε}` (`Above`) or `{V < ε}` (`Below`), labeled in
/// order of their first cell.
pub fn label_components(field: &GridField, epsilon: f64, sign: Sign) -> Vec<LevelComponent> {
    label_components_masked(field, epsilon, sign, None)
}

/// As [`label_components`], with cells flagged in `excluded` removed from the set.
pub fn label_components_masked(
    field: &GridField,
    epsilon: f64,
    sign: Sign,
    excluded: Option<&[bool]>,
) -> Vec<LevelComponent> {
    let (nx, ny) = (field.nx(), field.ny());
    let periodic = field.is_periodic();
    let (mut uf, member) = union_cells(field, epsilon, sign, excluded);
    let mut slot = vec![u32::MAX; nx * ny];
    let mut comps: Vec<LevelComponent> = Vec::new();
    for idx in 0..nx * ny {
        if !member[idx] {
            continue;
        }
        let (root, off) = uf.find(idx as u32);
        let k = if slot[root as usize] == u32::MAX {
            let w = uf.wraps(root);
            slot[root as usize] = comps.len() as u32;
            comps.push(LevelComponent {
                label: comps.len(),
                sign,
                cells: Vec::new(),
                offsets: Vec::new(),
                diameter: 0.0,
                touches_boundary: false,
                wrap_vector: w.primary(),
                wrap_rank: w.rank,
            });
            comps.len() - 1
        } else {
            slot[root as usize] as usize
        };
        let c = &mut comps[k];
        c.cells.push(idx);
        if periodic {
            c.offsets.push(off);
        } else {
            let (i, j) = (idx % nx, idx / nx);
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                c.touches_boundary = true;
            }
        }
    }
    for c in &mut comps {
        c.diameter = component_diameter(c, field);
    }
    comps
}

/// Max pairwise distance between member cell centres, in the universal
/// cover for periodic grids.
pub fn component_diameter(c: &LevelComponent, field: &GridField) -> f64 {
    let pts: Vec<Vec2> = if c.offsets.is_empty() {
        c.cells.iter().map(|&idx| field.position_of(idx)).collect()
    } else {
        c.cells
            .iter()
            .zip(&c.offsets)
            .map(|(&idx, &off)| unrolled(field, idx, off))
            .collect()
    };
    diameter(&pts)
}

/// Number of wrapping components of the given sign (periodic grids).
pub fn count_wrapping(field: &GridField, epsilon: f64, sign: Sign) -> usize {
    let (mut uf, member) = union_cells(field, epsilon, sign, None);
    let mut roots = std::collections::HashSet::new();
    for (idx, &m) in member.iter().enumerate() {
        if m {
            roots.insert(uf.root(idx as u32));
        }
    }
    roots.into_iter().filter(|&r| uf.wraps(r).rank > 0).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::oracle::{flood_fill, random_field, same_partition};
    use crate::potential::ScalarField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct TwoWave;
    impl ScalarField for TwoWave {
        fn value(&self, r: Vec2) -> f64 {
            r.x.cos() + r.y.cos()
        }
        fn amplitude(&self) -> f64 {
            1.0
        }
        fn wavenumber(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn everything_below_huge_epsilon() {
        let spec = crate::potential::PotentialSpec::eightfold(Vec2::ZERO);
        let g = GridField::sample_open(&spec, crate::magic::Rect::centered(Vec2::ZERO, 8.0), 0.2).unwrap();
        let c = label_components(&g, 4.5, Sign::Below);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].cells.len(), g.len());
        assert!(label_components(&g, 4.5, Sign::Above).is_empty());
    }

    #[test]
    fn two_wave_checkerboard_of_maxima() {
        // 64 x 64 grid over 4 x 4 periods; maxima of cos x + cos y at 2π Z²
        let h = std::f64::consts::TAU / 16.0;
        let rect = crate::magic::Rect {
            min: Vec2::new(-std::f64::consts::PI + h / 2.0, -std::f64::consts::PI + h / 2.0),
            max: Vec2::new(-std::f64::consts::PI + h / 2.0 + 63.0 * h, -std::f64::consts::PI + h / 2.0 + 63.0 * h),
        };
        let g = GridField::sample_open(&TwoWave, rect, h).unwrap();
        assert_eq!((g.nx(), g.ny()), (64, 64));
        let comps = label_components(&g, 1e-9, Sign::Above);
        assert_eq!(comps.len(), 16);
        let flood = flood_fill(&g, 1e-9, Sign::Above);
        assert!(same_partition(&g, &comps, &flood));
        assert!(comps.iter().all(|c| c.cells.len() == comps[0].cells.len()));
    }

    #[test]
    fn matches_flood_fill_small_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..200 {
            let (nx, ny) = (rng.gen_range(1..24), rng.gen_range(1..24));
            let mut g = random_field(&mut rng, nx, ny);
            if trial % 2 == 1 && nx >= 2 && ny >= 2 {
                g = g.into_periodic(Vec2::new(nx as f64, 0.0), Vec2::new(0.0, ny as f64));
            }
            let eps = rng.gen_range(-0.5..0.5);
            for sign in [Sign::Above, Sign::Below] {
                let comps = label_components(&g, eps, sign);
                assert!(same_partition(&g, &comps, &flood_fill(&g, eps, sign)), "trial {trial}");
            }
        }
    }

    #[test]
    fn periodic_stripe_wraps() {
        // a horizontal stripe on an 8 x 8 torus
        let vals: Vec<f64> = (0..64).map(|idx| if idx / 8 == 3 { 1.0 } else { -1.0 }).collect();
        let g = GridField::from_values(Vec2::ZERO, 1.0, 8, 8, vals, 1.0, 1.0)
            .unwrap()
            .into_periodic(Vec2::new(8.0, 0.0), Vec2::new(0.0, 8.0));
        let above = label_components(&g, 0.0, Sign::Above);
        assert_eq!(above.len(), 1);
        assert_eq!(above[0].wrap_vector.1, 0);
        assert_eq!(above[0].wrap_vector.0.abs(), 1);
        let below = label_components(&g, 0.0, Sign::Below);
        assert_eq!(below.len(), 1);
        assert_eq!(below[0].wrap_rank, 1);
        assert_eq!(count_wrapping(&g, 0.0, Sign::Above), 1);
    }

    #[test]
    fn diagonal_rule_is_exclusive() {
        // checkerboard plaquette: above gets the diagonal iff the centre is above
        let g = GridField::from_values(Vec2::ZERO, 1.0, 2, 2, vec![1.0, -0.5, -0.5, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(label_components(&g, 0.0, Sign::Above).len(), 1);
        assert_eq!(label_components(&g, 0.0, Sign::Below).len(), 2);
        let g = GridField::from_values(Vec2::ZERO, 1.0, 2, 2, vec![0.5, -1.0, -1.0, 0.5], 1.0, 1.0).unwrap();
        assert_eq!(label_components(&g, 0.0, Sign::Above).len(), 2);
        assert_eq!(label_components(&g, 0.0, Sign::Below).len(), 1);
    }

    #[test]
    fn diameters_and_boundary_flags() {
        let vals = vec![
            -1.0, -1.0, -1.0, -1.0, -1.0, //
            -1.0, 1.0, -1.0, -1.0, -1.0, //
            -1.0, -1.0, -1.0, 1.0, -1.0, //
            -1.0, -1.0, -1.0, -1.0, 1.0,
        ];
        let g = GridField::from_values(Vec2::ZERO, 0.5, 5, 4, vals, 1.0, 1.0).unwrap();
        let comps = label_components(&g, 0.0, Sign::Above);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].diameter, 0.0);
        assert!(!comps[0].touches_boundary);
        // (3, 2) and (4, 3) joined through the centre average 0.0 ≥ 0
        assert!((comps[1].diameter - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        assert!(comps[1].touches_boundary);
    }

    #[test]
    fn sign_flip_duality() {
        // {V ≥ ε} on a field equals {-V ≤ -ε}; away from ties this is {-V < -ε}
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let g = random_field(&mut rng, 20, 17);
            let eps = rng.gen_range(-0.5..0.5);
            let a = label_components(&g, eps, Sign::Above);
            let b = label_components(&g.negated(), -eps, Sign::Below);
            let cells_a: Vec<_> = a.iter().map(|c| c.cells.clone()).collect();
            let cells_b: Vec<_> = b.iter().map(|c| c.cells.clone()).collect();
            assert_eq!(cells_a, cells_b);
        }
    }

    proptest::proptest! {
        #[test]
        fn diameter_matches_brute_force(cells in proptest::collection::btree_set(0usize..1600, 1..200)) {
            let g = GridField::from_values(Vec2::new(-3.0, 2.0), 0.3, 40, 40, vec![0.0; 1600], 1.0, 1.0).unwrap();
            let cells: Vec<usize> = cells.into_iter().collect();
            let c = LevelComponent {
                label: 0, sign: Sign::Above, cells: cells.clone(), offsets: Vec::new(), diameter: 0.0,
                touches_boundary: false, wrap_vector: (0, 0), wrap_rank: 0,
            };
            let mut brute: f64 = 0.0;
            for &a in &cells {
                for &b in &cells {
                    brute = brute.max(g.position_of(a).dist(g.position_of(b)));
                }
            }
            proptest::prop_assert!((component_diameter(&c, &g) - brute).abs() <= 1e-12);
        }
    }
}
