//! Union-find with integer translation offsets, for labeling on a torus.
//!
//! Each element carries the lattice translation from its root's copy to its
//! own copy. Joining two elements already in one set with a nonzero net
//! offset closes a non-contractible cycle, which is recorded on the root as
//! a wrap vector.

pub type Offset = (i64, i64);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Wraps {
    /// Independent wrap vectors found so far; `rank` of them are valid.
    pub vectors: [Offset; 2],
    pub rank: u8,
}

impl Wraps {
    fn add(&mut self, w: Offset) {
        if w == (0, 0) {
            return;
        }
        match self.rank {
            0 => {
                self.vectors[0] = w;
                self.rank = 1;
            }
            1 => {
                let v = self.vectors[0];
                if v.0 * w.1 - v.1 * w.0 != 0 {
                    self.vectors[1] = w;
                    self.rank = 2;
                }
            }
            _ => {}
        }
    }

    fn merge(&mut self, other: &Wraps) {
        for w in &other.vectors[..other.rank as usize] {
            self.add(*w);
        }
    }

    pub fn primary(&self) -> Offset {
        if self.rank == 0 {
            (0, 0)
        } else {
            self.vectors[0]
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
    offset: Vec<Offset>,
    wraps: Vec<Wraps>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize);
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            offset: vec![(0, 0); n],
            wraps: vec![Wraps::default(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.rank.push(0);
        self.offset.push((0, 0));
        self.wraps.push(Wraps::default());
        id
    }

    /// Root of `x` and the offset of `x` relative to it, with path compression.
    pub fn find(&mut self, x: u32) -> (u32, Offset) {
        let mut cur = x;
        let mut acc = (0, 0);
        while self.parent[cur as usize] != cur {
            let o = self.offset[cur as usize];
            acc = (acc.0 + o.0, acc.1 + o.1);
            cur = self.parent[cur as usize];
        }
        let root = cur;
        let mut cur = x;
        let mut rem = acc;
        while self.parent[cur as usize] != cur {
            let next = self.parent[cur as usize];
            let o = self.offset[cur as usize];
            self.offset[cur as usize] = rem;
            self.parent[cur as usize] = root;
            rem = (rem.0 - o.0, rem.1 - o.1);
            cur = next;
        }
        (root, acc)
    }

    pub fn root(&mut self, x: u32) -> u32 {
        self.find(x).0
    }

    /// Joins `a` and `b`, where the copy of `b` adjacent to `a` sits at
    /// translation `d` from `a`'s copy. Returns the new root.
    pub fn union(&mut self, a: u32, b: u32, d: Offset) -> u32 {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        // position(b) = position(rb) + ob; want position(b) = position(a) + d
        // so rb sits at oa + d - ob relative to ra
        let rel = (oa.0 + d.0 - ob.0, oa.1 + d.1 - ob.1);
        if ra == rb {
            self.wraps[ra as usize].add(rel);
            return ra;
        }
        let (big, small, off) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb, rel)
        } else {
            (rb, ra, (-rel.0, -rel.1))
        };
        self.parent[small as usize] = big;
        self.offset[small as usize] = off;
        if self.rank[big as usize] == self.rank[small as usize] {
            self.rank[big as usize] += 1;
        }
        let w = self.wraps[small as usize];
        self.wraps[big as usize].merge(&w);
        big
    }

    pub fn wraps(&mut self, x: u32) -> Wraps {
        let r = self.root(x);
        self.wraps[r as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_union_find() {
        let mut uf = UnionFind::new(6);
        uf.union(0, 1, (0, 0));
        uf.union(2, 3, (0, 0));
        uf.union(1, 3, (0, 0));
        assert_eq!(uf.root(0), uf.root(2));
        assert_ne!(uf.root(0), uf.root(4));
        assert_eq!(uf.wraps(0).rank, 0);
    }

    #[test]
    fn ring_wraps_once() {
        // a ring of 5 cells along x with a seam between 4 and 0
        let mut uf = UnionFind::new(5);
        for i in 0..4 {
            uf.union(i, i + 1, (0, 0));
        }
        assert_eq!(uf.wraps(0).rank, 0);
        uf.union(4, 0, (1, 0));
        let w = uf.wraps(2);
        assert_eq!(w.rank, 1);
        assert_eq!(w.primary(), (1, 0));
    }

    #[test]
    fn offsets_compose_along_paths() {
        let mut uf = UnionFind::new(4);
        uf.union(0, 1, (1, 0));
        uf.union(1, 2, (0, 1));
        uf.union(3, 2, (0, 0));
        let (r0, o0) = uf.find(0);
        let (r3, o3) = uf.find(3);
        assert_eq!(r0, r3);
        // 3 sits where 2 sits: (1, 1) from 0
        assert_eq!((o3.0 - o0.0, o3.1 - o0.1), (1, 1));
    }

    #[test]
    fn two_independent_wraps() {
        let mut uf = UnionFind::new(1);
        uf.union(0, 0, (1, 0));
        uf.union(0, 0, (2, 0));
        assert_eq!(uf.wraps(0).rank, 1);
        uf.union(0, 0, (1, 1));
        assert_eq!(uf.wraps(0).rank, 2);
    }

    #[test]
    fn wraps_survive_merges() {
        let mut uf = UnionFind::new(3);
        uf.union(1, 1, (0, 1));
        uf.union(0, 1, (3, 4));
        uf.union(2, 0, (0, 0));
        assert_eq!(uf.wraps(2).primary(), (0, 1));
    }
}
