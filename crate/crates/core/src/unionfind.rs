//! Disjoint-set forest with path halving and union by size.

use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: alloc::vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }

    /// Number of distinct roots among the members selected by `keep`.
    pub fn count_roots(&mut self, keep: impl Fn(usize) -> bool) -> usize {
        let n = self.parent.len();
        let mut seen = alloc::vec![false; n];
        let mut count = 0;
        for i in 0..n {
            if keep(i) {
                let r = self.find(i);
                if !seen[r] {
                    seen[r] = true;
                    count += 1;
                }
            }
        }
        count
    }
}
