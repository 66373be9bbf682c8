//! Reference implementations used to cross-check the labelers.

use std::collections::VecDeque;

use rand::Rng;

use crate::geometry::Vec2;
use crate::level::grid::GridField;
use crate::level::label::{LevelComponent, Sign};

/// Breadth-first flood fill with the same connectivity rule, returning a
/// component id per cell (`usize::MAX` outside the set).
pub fn flood_fill(field: &GridField, epsilon: f64, sign: Sign) -> Vec<usize> {
    let (nx, ny) = (field.nx(), field.ny());
    let v = field.values();
    let periodic = field.is_periodic();
    let inside = |idx: usize| sign.contains(v[idx], epsilon);
    let wrap = |i: isize, n: usize| -> Option<usize> {
        if (0..n as isize).contains(&i) {
            Some(i as usize)
        } else if periodic {
            Some(i.rem_euclid(n as isize) as usize)
        } else {
            None
        }
    };
    let mut comp = vec![usize::MAX; nx * ny];
    let mut next = 0;
    for start in 0..nx * ny {
        if !inside(start) || comp[start] != usize::MAX {
            continue;
        }
        comp[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(idx) = queue.pop_front() {
            let (i, j) = ((idx % nx) as isize, (idx / nx) as isize);
            let mut nbrs = Vec::new();
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                if let (Some(a), Some(b)) = (wrap(i + di, nx), wrap(j + dj, ny)) {
                    nbrs.push(b * nx + a);
                }
            }
            for (di, dj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let (Some(a), Some(b)) = (wrap(i + di, nx), wrap(j + dj, ny)) else { continue };
                let (Some(ci), Some(cj)) = (wrap(i + di, nx), wrap(j, ny)) else { continue };
                let (Some(ei), Some(ej)) = (wrap(i, nx), wrap(j + dj, ny)) else { continue };
                let diag = b * nx + a;
                let (side1, side2) = (cj * nx + ci, ej * nx + ei);
                if inside(diag) && !inside(side1) && !inside(side2) {
                    let centre = 0.25 * (v[idx] + v[diag] + v[side1] + v[side2]);
                    if sign.contains(centre, epsilon) {
                        nbrs.push(diag);
                    }
                }
            }
            for n in nbrs {
                if inside(n) && comp[n] == usize::MAX {
                    comp[n] = next;
                    queue.push_back(n);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Partitions agree iff the map between ids is a bijection.
pub fn same_partition(field: &GridField, comps: &[LevelComponent], flood: &[usize]) -> bool {
    let mut ours = vec![usize::MAX; field.len()];
    for c in comps {
        for &idx in &c.cells {
            ours[idx] = c.label;
        }
    }
    let mut fwd = std::collections::HashMap::new();
    let mut back = std::collections::HashMap::new();
    for (a, b) in ours.iter().zip(flood) {
        if (*a == usize::MAX) != (*b == usize::MAX) {
            return false;
        }
        if *a == usize::MAX {
            continue;
        }
        if *fwd.entry(*a).or_insert(*b) != *b || *back.entry(*b).or_insert(*a) != *a {
            return false;
        }
    }
    true
}

pub fn random_field(rng: &mut impl Rng, nx: usize, ny: usize) -> GridField {
    // smooth-ish values so components have structure
    let vals = (0..nx * ny).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridField::from_values(Vec2::ZERO, 0.1, nx, ny, vals, 1.0, 1.0).unwrap()
}
