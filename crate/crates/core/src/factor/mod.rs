//! Sparsified nested-dissection factorization.
//!
//! The factorization walks the cluster hierarchy from the leaves to the top
//! separator. Each stage eliminates the clusters that finish there, then
//! (past the skipped levels) scales and sparsifies every remaining interface,
//! then merges interfaces into their parents. The recorded transforms `G_k`
//! satisfy `G A Gᵀ ≈ I` with `G = … G_2 G_1`; the preconditioner is
//! `M = Gᵀ`.

mod ops;
mod state;
mod transform;

use std::str::FromStr;
use std::time::Instant;

pub use state::{ClusterState, TrailingState};
pub use transform::ElementaryTransform;

use crate::error::{DenseError, FactorError, OrderingError};
use crate::ordering::{default_levels, order_and_cluster, ClusterHierarchy};
use crate::sparse::SymSparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Interpolative, unscaled.
    In,
    /// Interpolative after block scaling.
    InS,
    /// Orthogonal after block scaling.
    OrthS,
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "in" => Ok(Variant::In),
            "ins" => Ok(Variant::InS),
            "orths" => Ok(Variant::OrthS),
            other => Err(format!("unknown variant {other:?} (expected in, ins or orths)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::In => "in",
            Variant::InS => "ins",
            Variant::OrthS => "orths",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Geometric,
    Graph,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorOptions {
    pub eps: f64,
    pub variant: Variant,
    /// Number of levels; 0 picks `default_levels(n)`.
    pub levels: usize,
    /// Leaf-side stages on which scaling and sparsification are skipped.
    pub skip: usize,
    pub backend: Backend,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions { eps: 1e-2, variant: Variant::OrthS, levels: 0, skip: 0, backend: Backend::Geometric }
    }
}

/// Timings (seconds) and sizes for one stage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    pub elim_time: f64,
    pub scale_time: f64,
    pub sparsify_time: f64,
    pub merge_time: f64,
    /// Factor entries stored after this stage, cumulative.
    pub nnz: usize,
    /// Active dofs after this stage.
    pub active: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactorStats {
    /// One record per stage, leaves first.
    pub per_level: Vec<LevelStats>,
    /// Active dofs of the top separator right before its elimination.
    pub size_top: usize,
    pub time: f64,
}

/// Ordered product of elementary transforms.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    pub n: usize,
    pub transforms: Vec<ElementaryTransform>,
    pub stats: FactorStats,
}

impl Preconditioner {
    pub fn identity(n: usize) -> Preconditioner {
        Preconditioner { n, transforms: Vec::new(), stats: FactorStats::default() }
    }
}

/// Total stored entries across all transforms.
pub fn factor_nnz(m: &Preconditioner) -> usize {
    m.transforms.iter().map(|t| t.nnz()).sum()
}

/// Hook points exposed to [`factorize_observed`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    BeforeSparsify,
    AfterSparsify,
}

/// Factorizes `a` over `hierarchy`.
pub fn factorize(
    a: &SymSparseMatrix,
    hierarchy: &ClusterHierarchy,
    opts: &FactorOptions,
) -> Result<Preconditioner, FactorError> {
    factorize_observed(a, hierarchy, opts, &mut |_, _, _| {})
}

/// Orders `a` (geometric separators if `coords` is given and the backend asks
/// for it) and factorizes it.
pub fn factorize_matrix(
    a: &SymSparseMatrix,
    coords: Option<&[Vec<f64>]>,
    opts: &FactorOptions,
) -> Result<(ClusterHierarchy, Preconditioner), FactorError> {
    let levels = if opts.levels == 0 { default_levels(a.dim()) } else { opts.levels };
    let coords = if opts.backend == Backend::Geometric { coords } else { None };
    let h = order_and_cluster(&a.adjacency(), coords, levels)
        .map_err(|e: OrderingError| FactorError::InvalidOptions(e.to_string()))?;
    let m = factorize(a, &h, opts)?;
    Ok((h, m))
}

/// As [`factorize`], calling `observer` around every sparsification with the
/// trailing state and the interface's cluster id.
pub fn factorize_observed(
    a: &SymSparseMatrix,
    hierarchy: &ClusterHierarchy,
    opts: &FactorOptions,
    observer: &mut dyn FnMut(Phase, &TrailingState, usize),
) -> Result<Preconditioner, FactorError> {
    let start = Instant::now();
    let n = a.dim();
    if hierarchy.num_vertices() != n {
        return Err(FactorError::DimensionMismatch { hierarchy: hierarchy.num_vertices(), matrix: n });
    }
    if !(opts.eps >= 0.0 && opts.eps.is_finite()) {
        return Err(FactorError::InvalidOptions(format!("eps must be finite and non-negative, got {}", opts.eps)));
    }
    let levels = hierarchy.levels;
    if opts.skip >= levels && levels > 1 {
        return Err(FactorError::InvalidOptions(format!(
            "skip ({}) must be below the level count ({levels})",
            opts.skip
        )));
    }

    let leaves = hierarchy.clusters(levels);
    let dofs: Vec<Vec<usize>> = leaves.iter().map(|c| c.vertices.clone()).collect();
    let tags: Vec<usize> = leaves.iter().map(|c| c.tag.s.level).collect();
    let mut st = TrailingState::from_sparse(a, &dofs, &tags);
    // Hierarchy cluster index at the current stage -> state cluster id.
    let mut ids: Vec<Option<usize>> = (0..leaves.len()).map(Some).collect();

    let mut transforms = Vec::new();
    let mut stats = FactorStats::default();
    let mut nnz = 0usize;
    let push = |t: ElementaryTransform, transforms: &mut Vec<ElementaryTransform>, nnz: &mut usize| {
        *nnz += t.nnz();
        transforms.push(t);
    };

    for level in (1..=levels).rev() {
        let stage = levels - level;
        let clusters = hierarchy.clusters(level);
        let mut rec = LevelStats { level, ..Default::default() };
        let breakdown = |cluster: usize, e: DenseError, stage: &'static str| {
            let DenseError::NotPositiveDefinite { pivot, .. } = e;
            FactorError::Breakdown { level, cluster, pivot, stage }
        };

        let t0 = Instant::now();
        for (i, c) in clusters.iter().enumerate() {
            if c.tag.s.level != level {
                continue;
            }
            let Some(id) = ids[i].filter(|&id| st.is_alive(id)) else { continue };
            if level == 1 {
                stats.size_top += st.cluster(id).dofs.len();
            }
            let t = st.eliminate_cluster(id).map_err(|e| breakdown(id, e, "elimination"))?;
            push(t, &mut transforms, &mut nnz);
        }
        rec.elim_time = t0.elapsed().as_secs_f64();

        if stage >= opts.skip && level > 1 {
            let interfaces: Vec<usize> = clusters
                .iter()
                .enumerate()
                .filter(|(_, c)| c.tag.s.level < level)
                .filter_map(|(i, _)| ids[i])
                .filter(|&id| st.is_alive(id))
                // Nothing to compress against; the cluster is eliminated exactly later.
                .filter(|&id| !st.neighbors(id).is_empty())
                .collect();
            let t1 = Instant::now();
            if opts.variant != Variant::In {
                for &p in &interfaces {
                    let t = st.scale_interface(p).map_err(|e| breakdown(p, e, "scaling"))?;
                    push(t, &mut transforms, &mut nnz);
                }
            }
            let t2 = Instant::now();
            rec.scale_time = (t2 - t1).as_secs_f64();
            for &p in &interfaces {
                observer(Phase::BeforeSparsify, &st, p);
                match opts.variant {
                    Variant::OrthS => {
                        let t = st.sparsify_orth(p, opts.eps);
                        push(t, &mut transforms, &mut nnz);
                    }
                    Variant::In | Variant::InS => {
                        if let Some(t) =
                            st.sparsify_interp(p, opts.eps).map_err(|e| breakdown(p, e, "sparsification"))?
                        {
                            push(t, &mut transforms, &mut nnz);
                        }
                    }
                }
                observer(Phase::AfterSparsify, &st, p);
            }
            rec.sparsify_time = t2.elapsed().as_secs_f64();
        }

        if level > 1 {
            let t3 = Instant::now();
            let parents = hierarchy.clusters(level - 1);
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); parents.len()];
            for (i, _) in clusters.iter().enumerate() {
                if let (Some(p), Some(id)) = (hierarchy.parent(level, i), ids[i]) {
                    if st.is_alive(id) {
                        groups[p].push(id);
                    }
                }
            }
            let kept: Vec<usize> = (0..parents.len()).filter(|&p| !groups[p].is_empty()).collect();
            let kept_groups: Vec<Vec<usize>> = kept.iter().map(|&p| groups[p].clone()).collect();
            let kept_levels: Vec<usize> = kept.iter().map(|&p| parents[p].tag.s.level).collect();
            let new_ids = st.merge(&kept_groups, &kept_levels);
            ids = vec![None; parents.len()];
            for (&p, id) in kept.iter().zip(new_ids) {
                ids[p] = Some(id);
            }
            let parents_dofs: Vec<Vec<usize>> =
                kept.iter().filter_map(|&p| ids[p]).map(|id| st.cluster(id).dofs.clone()).collect();
            push(ElementaryTransform::MergePermute { level, parents: parents_dofs }, &mut transforms, &mut nnz);
            rec.merge_time = t3.elapsed().as_secs_f64();
        }

        rec.nnz = nnz;
        rec.active = st.active_dofs();
        stats.per_level.push(rec);
    }
    stats.time = start.elapsed().as_secs_f64();
    Ok(Preconditioner { n, transforms, stats })
}
