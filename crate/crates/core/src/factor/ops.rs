//! Elementary operations on the trailing matrix.

use crate::dense::{cholesky_in_place, gemm, pivoted_qr, skeleton_split, solve_lower, solve_right_lower_t, Mat, Op};
use crate::error::DenseError;

use super::state::TrailingState;
use super::transform::ElementaryTransform;

impl TrailingState {
    /// Block Cholesky elimination of cluster `s` with Schur updates on its
    /// neighbors (fill blocks are created as needed).
    pub fn eliminate_cluster(&mut self, s: usize) -> Result<ElementaryTransform, DenseError> {
        let mut l = std::mem::replace(&mut self.clusters[s].diag, Mat::zeros(0, 0));
        cholesky_in_place(&mut l)?;
        let nb = self.neighbors(s);
        let mut xs = Vec::with_capacity(nb.len());
        for &n in &nb {
            let mut x = self.take_block(n, s);
            solve_right_lower_t(&l, &mut x);
            xs.push(x);
        }
        for a in 0..nb.len() {
            let na = nb[a];
            gemm(-1.0, &xs[a], Op::N, &xs[a], Op::T, 1.0, &mut self.clusters[na].diag);
            for b in 0..a {
                // nb is ascending, so na > nb[b] and the block is stored as A_{na, nb[b]}.
                let blk = self.block_or_insert(na, nb[b]);
                gemm(-1.0, &xs[a], Op::N, &xs[b], Op::T, 1.0, blk);
            }
        }
        let dofs = self.clusters[s].dofs.clone();
        let cross = nb.iter().zip(xs).map(|(&n, x)| (self.clusters[n].dofs.clone(), x)).collect();
        self.kill(s);
        Ok(ElementaryTransform::Elimination { dofs, l, cross })
    }

    /// Symmetric block scaling making `A_pp` the identity.
    pub fn scale_interface(&mut self, p: usize) -> Result<ElementaryTransform, DenseError> {
        let np = self.clusters[p].dofs.len();
        let mut l = std::mem::replace(&mut self.clusters[p].diag, Mat::identity(np));
        if let Err(e) = cholesky_in_place(&mut l) {
            self.clusters[p].diag = l;
            return Err(e);
        }
        for n in self.neighbors(p) {
            let blk = self.blocks.get_mut(&super::state::key(p, n)).expect("neighbor block");
            if p > n {
                solve_lower(&l, blk);
            } else {
                solve_right_lower_t(&l, blk);
            }
        }
        Ok(ElementaryTransform::Scaling { dofs: self.clusters[p].dofs.clone(), l })
    }

    /// `A_pn` with rows in `p`'s dof order, over all current neighbors, and
    /// the neighbor list with column offsets.
    fn coupling_rows(&self, p: usize) -> (Mat, Vec<(usize, usize)>) {
        let np = self.clusters[p].dofs.len();
        let nb = self.neighbors(p);
        let parts: Vec<Mat> = nb.iter().map(|&n| self.block(p, n).expect("neighbor block")).collect();
        let refs: Vec<&Mat> = parts.iter().collect();
        let mut off = 0;
        let layout = nb
            .iter()
            .map(|&n| {
                let o = off;
                off += self.clusters[n].dofs.len();
                (n, o)
            })
            .collect();
        (Mat::hcat(np, &refs), layout)
    }

    /// Orthogonal sparsification of a scaled interface (`A_pp = I`). The
    /// dropped rows of `Qᵀ A_pn` are the approximation; neighbor-neighbor
    /// blocks are not touched. The cluster is killed if nothing is kept.
    pub fn sparsify_orth(&mut self, p: usize, eps: f64) -> ElementaryTransform {
        let (apn, layout) = self.coupling_rows(p);
        let qr = pivoted_qr(&apn, Some(eps));
        let rank = qr.steps;
        let q = qr.form_q();
        let dofs = self.clusters[p].dofs.clone();

        if rank == 0 {
            self.kill(p);
            return ElementaryTransform::OrthSparsify { dofs, q, rank };
        }
        let mut w = Mat::zeros(rank, apn.ncols());
        for (j, &orig) in qr.perm.iter().enumerate() {
            let col = &qr.qr.col(j)[..rank.min(j + 1)];
            w.col_mut(orig)[..col.len()].copy_from_slice(col);
        }
        for (k, &(n, off)) in layout.iter().enumerate() {
            let width = layout.get(k + 1).map_or(apn.ncols(), |x| x.1) - off;
            let blk = w.submatrix(0, off, rank, width);
            self.put_block(p, n, blk);
        }
        let c = &mut self.clusters[p];
        c.dofs.truncate(rank);
        c.diag = Mat::identity(rank);
        ElementaryTransform::OrthSparsify { dofs, q, rank }
    }

    /// Interpolative sparsification. `A_nf` is replaced by its interpolation
    /// from `A_nc` and the fine part is eliminated within the cluster.
    /// Returns `None` when no column is redundant.
    pub fn sparsify_interp(&mut self, p: usize, eps: f64) -> Result<Option<ElementaryTransform>, DenseError> {
        let (apn, layout) = self.coupling_rows(p);
        let anp = apn.transpose();
        let qr = pivoted_qr(&anp, Some(eps));
        let (c, f, t) = skeleton_split(&qr, qr.steps);
        if f.is_empty() {
            return Ok(None);
        }
        let d = &self.clusters[p].diag;
        let acc = d.select(&c, &c);
        let acf = d.select(&c, &f);
        let aff = d.select(&f, &f);

        // C_cf = A_cf - A_cc T,  C_ff = A_ff - A_fc T - Tᵀ A_cf + Tᵀ A_cc T
        let mut ccf = acf.clone();
        gemm(-1.0, &acc, Op::N, &t, Op::N, 1.0, &mut ccf);
        let mut cff = aff;
        gemm(-1.0, &acf, Op::T, &t, Op::N, 1.0, &mut cff);
        gemm(-1.0, &t, Op::T, &ccf, Op::N, 1.0, &mut cff);
        cholesky_in_place(&mut cff)?;
        let l_ff = cff;
        let mut k = ccf;
        solve_right_lower_t(&l_ff, &mut k);
        let mut new_cc = acc;
        gemm(-1.0, &k, Op::N, &k, Op::T, 1.0, &mut new_cc);

        let dofs = &self.clusters[p].dofs;
        let coarse: Vec<usize> = c.iter().map(|&i| dofs[i]).collect();
        let fine: Vec<usize> = f.iter().map(|&i| dofs[i]).collect();

        if c.is_empty() {
            self.kill(p);
        } else {
            for (idx, &(n, off)) in layout.iter().enumerate() {
                let width = layout.get(idx + 1).map_or(apn.ncols(), |x| x.1) - off;
                let cols: Vec<usize> = (off..off + width).collect();
                self.put_block(p, n, apn.select(&c, &cols));
            }
            let cl = &mut self.clusters[p];
            cl.dofs = coarse.clone();
            cl.diag = new_cc;
        }
        Ok(Some(ElementaryTransform::InterpSparsify { coarse, fine, t_cf: t, l_ff, k }))
    }
}
