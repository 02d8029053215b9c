use crate::dense::Mat;

/// One factor of the preconditioner. Dof lists are global indices.
#[derive(Clone, Debug)]
pub enum ElementaryTransform {
    /// Block Cholesky step: `x_s <- L⁻¹ x_s`, then `x_n -= X_n x_s` for every
    /// neighbor, with `X_n = A_ns L⁻ᵀ`.
    Elimination { dofs: Vec<usize>, l: Mat, cross: Vec<(Vec<usize>, Mat)> },
    /// `x_p <- L⁻¹ x_p`.
    Scaling { dofs: Vec<usize>, l: Mat },
    /// `x_p <- Qᵀ x_p`; the first `rank` slots stay active, the rest are done.
    OrthSparsify { dofs: Vec<usize>, q: Mat, rank: usize },
    /// `x_f -= T_cfᵀ x_c`, then eliminate `f` with `C_ff = L_ff L_ffᵀ` and
    /// `K = C_cf L_ff⁻ᵀ`.
    InterpSparsify { coarse: Vec<usize>, fine: Vec<usize>, t_cf: Mat, l_ff: Mat, k: Mat },
    /// Cluster merge; acts as the identity on vectors.
    MergePermute { level: usize, parents: Vec<Vec<usize>> },
}

impl ElementaryTransform {
    /// Stored dense entries (lower triangles for Cholesky factors).
    pub fn nnz(&self) -> usize {
        match self {
            ElementaryTransform::Elimination { l, cross, .. } => {
                l.lower_count() + cross.iter().map(|(_, x)| x.nrows() * x.ncols()).sum::<usize>()
            }
            ElementaryTransform::Scaling { l, .. } => l.lower_count(),
            ElementaryTransform::OrthSparsify { q, .. } => q.nrows() * q.ncols(),
            ElementaryTransform::InterpSparsify { t_cf, l_ff, k, .. } => {
                t_cf.nrows() * t_cf.ncols() + l_ff.lower_count() + k.nrows() * k.ncols()
            }
            ElementaryTransform::MergePermute { .. } => 0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ElementaryTransform::Elimination { .. } => "elimination",
            ElementaryTransform::Scaling { .. } => "scaling",
            ElementaryTransform::OrthSparsify { .. } => "orth",
            ElementaryTransform::InterpSparsify { .. } => "interp",
            ElementaryTransform::MergePermute { .. } => "merge",
        }
    }
}
