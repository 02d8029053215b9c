//! Preconditioned conjugate gradient with the `M Mᵀ` preconditioner.

use crate::dense::{axpy, dot};
use crate::error::SolveError;
use crate::factor::Preconditioner;
use crate::precond::apply_preconditioner;
use crate::sparse::SymSparseMatrix;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `‖A x_k − b‖ / ‖b‖`, starting with the initial guess.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub t_solve: f64,
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Solves `A x = b` from `x = 0`. Convergence is tested on the true residual
/// `b − A x` every iteration. If the recurrence residual vanishes before the
/// true one meets `tol`, the solve stops unconverged.
pub fn pcg_solve(
    a: &SymSparseMatrix,
    b: &[f64],
    m: &Preconditioner,
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveStats), SolveError> {
    let start = std::time::Instant::now();
    let n = a.dim();
    if b.len() != n {
        return Err(SolveError::DimensionMismatch { expected: n, got: b.len() });
    }
    if m.n != n {
        return Err(SolveError::DimensionMismatch { expected: n, got: m.n });
    }
    if !(tol > 0.0) {
        return Err(SolveError::BadTolerance(tol));
    }
    let mut stats = SolveStats::default();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        stats.residuals.push(0.0);
        stats.converged = true;
        return Ok((x, stats));
    }

    let mut r = b.to_vec();
    let mut true_r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    stats.residuals.push(1.0);
    let mut z = apply_preconditioner(m, &r)?;
    let mut rz = dot(&r, &z);
    let mut p = z.clone();

    for it in 1..=maxit {
        if rz <= 0.0 {
            if dot(&r, &r) == 0.0 {
                // The recurrence residual underflowed: no further progress.
                break;
            }
            return Err(SolveError::IndefinitePreconditioner(rz, it - 1));
        }
        a.matvec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);

        a.matvec_into(&x, &mut true_r);
        for (t, bi) in true_r.iter_mut().zip(b) {
            *t = bi - *t;
        }
        let rel = norm(&true_r) / bnorm;
        stats.residuals.push(rel);
        stats.iterations = it;
        if rel <= tol {
            stats.converged = true;
            break;
        }

        z = apply_preconditioner(m, &r)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    stats.t_solve = start.elapsed().as_secs_f64();
    Ok((x, stats))
}
