//! Applying `M` and `Mᵀ` to vectors in the global dof indexing.

use crate::dense::{gemv_acc, gemv_t_acc, solve_lower_t_vec, solve_lower_vec};
use crate::error::SolveError;
use crate::factor::{ElementaryTransform, Preconditioner};

fn gather(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

fn scatter(x: &mut [f64], idx: &[usize], v: &[f64]) {
    for (&i, &vi) in idx.iter().zip(v) {
        x[i] = vi;
    }
}

fn check(m: &Preconditioner, len: usize) -> Result<(), SolveError> {
    if len != m.n {
        return Err(SolveError::DimensionMismatch { expected: m.n, got: len });
    }
    Ok(())
}

impl ElementaryTransform {
    /// `x <- G x`
    pub fn apply_forward(&self, x: &mut [f64]) {
        match self {
            ElementaryTransform::Elimination { dofs, l, cross } => {
                let mut xs = gather(x, dofs);
                solve_lower_vec(l, &mut xs);
                scatter(x, dofs, &xs);
                for (nd, xn_blk) in cross {
                    let mut xn = gather(x, nd);
                    gemv_acc(xn_blk, &xs, -1.0, &mut xn);
                    scatter(x, nd, &xn);
                }
            }
            ElementaryTransform::Scaling { dofs, l } => {
                let mut xs = gather(x, dofs);
                solve_lower_vec(l, &mut xs);
                scatter(x, dofs, &xs);
            }
            ElementaryTransform::OrthSparsify { dofs, q, .. } => {
                let xs = gather(x, dofs);
                scatter(x, dofs, &q.matvec_t(&xs));
            }
            ElementaryTransform::InterpSparsify { coarse, fine, t_cf, l_ff, k } => {
                let mut xc = gather(x, coarse);
                let mut xf = gather(x, fine);
                gemv_t_acc(t_cf, &xc, -1.0, &mut xf);
                solve_lower_vec(l_ff, &mut xf);
                gemv_acc(k, &xf, -1.0, &mut xc);
                scatter(x, coarse, &xc);
                scatter(x, fine, &xf);
            }
            ElementaryTransform::MergePermute { .. } => {}
        }
    }

    /// `x <- Gᵀ x`
    pub fn apply_transpose(&self, x: &mut [f64]) {
        match self {
            ElementaryTransform::Elimination { dofs, l, cross } => {
                let mut xs = gather(x, dofs);
                for (nd, xn_blk) in cross {
                    let xn = gather(x, nd);
                    gemv_t_acc(xn_blk, &xn, -1.0, &mut xs);
                }
                solve_lower_t_vec(l, &mut xs);
                scatter(x, dofs, &xs);
            }
            ElementaryTransform::Scaling { dofs, l } => {
                let mut xs = gather(x, dofs);
                solve_lower_t_vec(l, &mut xs);
                scatter(x, dofs, &xs);
            }
            ElementaryTransform::OrthSparsify { dofs, q, .. } => {
                let xs = gather(x, dofs);
                scatter(x, dofs, &q.matvec(&xs));
            }
            ElementaryTransform::InterpSparsify { coarse, fine, t_cf, l_ff, k } => {
                let mut xc = gather(x, coarse);
                let mut xf = gather(x, fine);
                gemv_t_acc(k, &xc, -1.0, &mut xf);
                solve_lower_t_vec(l_ff, &mut xf);
                gemv_acc(t_cf, &xf, -1.0, &mut xc);
                scatter(x, coarse, &xc);
                scatter(x, fine, &xf);
            }
            ElementaryTransform::MergePermute { .. } => {}
        }
    }
}

/// `Mᵀ r`: transforms in creation order.
pub fn apply_mt(m: &Preconditioner, r: &[f64]) -> Result<Vec<f64>, SolveError> {
    check(m, r.len())?;
    let mut x = r.to_vec();
    for t in &m.transforms {
        t.apply_forward(&mut x);
    }
    Ok(x)
}

/// `M y`: transposed transforms in reverse order.
pub fn apply_m(m: &Preconditioner, y: &[f64]) -> Result<Vec<f64>, SolveError> {
    check(m, y.len())?;
    let mut x = y.to_vec();
    for t in m.transforms.iter().rev() {
        t.apply_transpose(&mut x);
    }
    Ok(x)
}

/// Preconditioner action `M Mᵀ r`.
pub fn apply_preconditioner(m: &Preconditioner, r: &[f64]) -> Result<Vec<f64>, SolveError> {
    apply_m(m, &apply_mt(m, r)?)
}
