//! Block-sparse trailing matrix held between elementary transforms.

use std::collections::{BTreeSet, HashMap};

use crate::dense::Mat;
use crate::error::SparseError;
use crate::sparse::SymSparseMatrix;

#[derive(Clone, Debug)]
pub struct ClusterState {
    /// Global dofs, in block order.
    pub dofs: Vec<usize>,
    pub diag: Mat,
    pub alive: bool,
    /// Separator level from the hierarchy tag; informational.
    pub level: usize,
}

/// Trailing matrix as dense blocks between clusters.
///
/// Off-diagonal block `(i, j)` with `i > j` is stored as `A_ij`
/// (rows are `i`'s dofs).
#[derive(Clone, Debug)]
pub struct TrailingState {
    n: usize,
    pub(crate) clusters: Vec<ClusterState>,
    pub(crate) blocks: HashMap<(usize, usize), Mat>,
    pub(crate) nbrs: Vec<BTreeSet<usize>>,
}

#[inline]
pub(crate) fn key(i: usize, j: usize) -> (usize, usize) {
    if i > j {
        (i, j)
    } else {
        (j, i)
    }
}

impl TrailingState {
    /// Splits `a` into blocks over `clusters`, which must partition `0..n`.
    pub fn from_sparse(a: &SymSparseMatrix, clusters: &[Vec<usize>], levels: &[usize]) -> TrailingState {
        let n = a.dim();
        let (owner, pos) = ownership(n, clusters);
        assert!(owner.iter().all(|&o| o != usize::MAX), "clusters must cover every dof");
        let mut st = TrailingState::empty(n, clusters, levels);
        for (i, j, v) in a.lower_entries() {
            let (ci, cj) = (owner[i], owner[j]);
            let (pi, pj) = (pos[i], pos[j]);
            if ci == cj {
                let d = &mut st.clusters[ci].diag;
                d[(pi, pj)] = v;
                d[(pj, pi)] = v;
            } else {
                let (hi, lo) = key(ci, cj);
                let (r, c) = if ci == hi { (pi, pj) } else { (pj, pi) };
                let blk = st.block_or_insert(hi, lo);
                blk[(r, c)] = v;
            }
        }
        st
    }

    /// Same as [`TrailingState::from_sparse`] for a dense symmetric matrix.
    /// Exact zero coupling between clusters creates no block.
    pub fn from_dense(a: &Mat, clusters: &[Vec<usize>]) -> TrailingState {
        let n = a.nrows();
        let mut st = TrailingState::empty(n, clusters, &vec![0; clusters.len()]);
        for (ci, ri) in clusters.iter().enumerate() {
            st.clusters[ci].diag = a.select(ri, ri);
            for (cj, rj) in clusters.iter().enumerate().take(ci) {
                let blk = a.select(ri, rj);
                if blk.norm_max() > 0.0 {
                    st.blocks.insert((ci, cj), blk);
                    st.nbrs[ci].insert(cj);
                    st.nbrs[cj].insert(ci);
                }
            }
        }
        st
    }

    fn empty(n: usize, clusters: &[Vec<usize>], levels: &[usize]) -> TrailingState {
        let clusters: Vec<ClusterState> = clusters
            .iter()
            .zip(levels)
            .map(|(d, &level)| ClusterState { dofs: d.clone(), diag: Mat::zeros(d.len(), d.len()), alive: true, level })
            .collect();
        let k = clusters.len();
        TrailingState { n, clusters, blocks: HashMap::new(), nbrs: vec![BTreeSet::new(); k] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster(&self, i: usize) -> &ClusterState {
        &self.clusters[i]
    }

    pub fn is_alive(&self, i: usize) -> bool {
        self.clusters[i].alive
    }

    /// Alive clusters with a block against `i`, ascending.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.nbrs[i].iter().copied().collect()
    }

    /// Raw stored block for the unordered pair, as `A_hi,lo` with `hi > lo`.
    pub fn stored_block(&self, i: usize, j: usize) -> Option<&Mat> {
        self.blocks.get(&key(i, j))
    }

    /// Copy of `A_ij` (rows are `i`'s dofs).
    pub fn block(&self, i: usize, j: usize) -> Option<Mat> {
        if i == j {
            return Some(self.clusters[i].diag.clone());
        }
        self.blocks.get(&key(i, j)).map(|b| if i > j { b.clone() } else { b.transpose() })
    }

    /// All stored off-diagonal blocks.
    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &Mat)> {
        self.blocks.iter()
    }

    pub fn active_dofs(&self) -> usize {
        self.clusters.iter().filter(|c| c.alive).map(|c| c.dofs.len()).sum()
    }

    pub(crate) fn block_or_insert(&mut self, hi: usize, lo: usize) -> &mut Mat {
        debug_assert!(hi > lo);
        let (r, c) = (self.clusters[hi].dofs.len(), self.clusters[lo].dofs.len());
        let nbrs = &mut self.nbrs;
        self.blocks.entry((hi, lo)).or_insert_with(|| {
            nbrs[hi].insert(lo);
            nbrs[lo].insert(hi);
            Mat::zeros(r, c)
        })
    }

    /// Removes the block and returns it as `A_ij`.
    pub(crate) fn take_block(&mut self, i: usize, j: usize) -> Mat {
        let b = self.blocks.remove(&key(i, j)).expect("block present");
        self.nbrs[i].remove(&j);
        self.nbrs[j].remove(&i);
        if i > j {
            b
        } else {
            b.transpose()
        }
    }

    /// Stores `m` as `A_ij`.
    pub(crate) fn put_block(&mut self, i: usize, j: usize, m: Mat) {
        let stored = if i > j { m } else { m.transpose() };
        self.blocks.insert(key(i, j), stored);
        self.nbrs[i].insert(j);
        self.nbrs[j].insert(i);
    }

    /// Marks `i` dead and drops all of its blocks.
    pub(crate) fn kill(&mut self, i: usize) {
        for j in std::mem::take(&mut self.nbrs[i]) {
            self.blocks.remove(&key(i, j));
            self.nbrs[j].remove(&i);
        }
        let c = &mut self.clusters[i];
        c.alive = false;
        c.dofs.clear();
        c.diag = Mat::zeros(0, 0);
    }

    /// Replaces every alive cluster by merged parents. `groups[g]` lists the
    /// children of parent `g` in concatenation order; every alive cluster
    /// must appear exactly once. Returns the new cluster ids.
    pub(crate) fn merge(&mut self, groups: &[Vec<usize>], levels: &[usize]) -> Vec<usize> {
        let base = self.clusters.len();
        let mut place = HashMap::new();
        let mut sizes = Vec::with_capacity(groups.len());
        for (g, children) in groups.iter().enumerate() {
            let mut off = 0;
            for &c in children {
                debug_assert!(self.clusters[c].alive);
                place.insert(c, (base + g, off));
                off += self.clusters[c].dofs.len();
            }
            sizes.push(off);
        }
        for (g, children) in groups.iter().enumerate() {
            let mut dofs = Vec::with_capacity(sizes[g]);
            let mut diag = Mat::zeros(sizes[g], sizes[g]);
            for &c in children {
                let off = place[&c].1;
                diag.set_submatrix(off, off, &self.clusters[c].diag);
                dofs.extend_from_slice(&self.clusters[c].dofs);
            }
            self.clusters.push(ClusterState { dofs, diag, alive: true, level: levels[g] });
            self.nbrs.push(BTreeSet::new());
        }
        let old = std::mem::take(&mut self.blocks);
        for ((i, j), blk) in old {
            let (pi, oi) = place[&i];
            let (pj, oj) = place[&j];
            if pi == pj {
                let d = &mut self.clusters[pi].diag;
                d.set_submatrix(oi, oj, &blk);
                d.set_submatrix(oj, oi, &blk.transpose());
            } else if pi > pj {
                self.block_or_insert(pi, pj).set_submatrix(oi, oj, &blk);
            } else {
                self.block_or_insert(pj, pi).set_submatrix(oj, oi, &blk.transpose());
            }
        }
        for &c in place.keys() {
            let cs = &mut self.clusters[c];
            cs.alive = false;
            cs.dofs.clear();
            cs.diag = Mat::zeros(0, 0);
            self.nbrs[c].clear();
        }
        (base..base + groups.len()).collect()
    }

    /// Dense `A[rows, cols]` of the trailing matrix over active dofs.
    pub fn extract_block(&self, rows: &[usize], cols: &[usize]) -> Result<Mat, SparseError> {
        let owners: Vec<Vec<usize>> =
            self.clusters.iter().map(|c| if c.alive { c.dofs.clone() } else { vec![] }).collect();
        let (owner, pos) = ownership(self.n, &owners);
        for &d in rows.iter().chain(cols) {
            if d >= self.n {
                return Err(SparseError::IndexOutOfRange { row: d, col: d, n: self.n });
            }
            if owner[d] == usize::MAX {
                return Err(SparseError::StaleIndex { dof: d });
            }
        }
        Ok(Mat::from_fn(rows.len(), cols.len(), |a, b| {
            let (r, c) = (rows[a], cols[b]);
            let (ci, cj) = (owner[r], owner[c]);
            if ci == cj {
                self.clusters[ci].diag[(pos[r], pos[c])]
            } else {
                match self.blocks.get(&key(ci, cj)) {
                    None => 0.0,
                    Some(m) if ci > cj => m[(pos[r], pos[c])],
                    Some(m) => m[(pos[c], pos[r])],
                }
            }
        }))
    }
}

fn ownership(n: usize, clusters: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let mut owner = vec![usize::MAX; n];
    let mut pos = vec![0; n];
    for (c, dofs) in clusters.iter().enumerate() {
        for (k, &d) in dofs.iter().enumerate() {
            owner[d] = c;
            pos[d] = k;
        }
    }
    (owner, pos)
}
