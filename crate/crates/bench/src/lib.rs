//! Benchmark driver: build or load a problem, order, factorize, solve, report.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use spand::error::{FactorError, SolveError};
use spand::factor::{factor_nnz, factorize, Backend, FactorOptions, Variant};
use spand::ordering::{default_levels, order_and_cluster};
use spand::pcg::pcg_solve;
use spand::problems::{gen_laplacian_2d, gen_laplacian_3d, random_rhs};
use spand::sparse::{load_matrix_market, read_coords, SymSparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Lap2d,
    Lap3d,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Source {
    Matrix { path: PathBuf, coords: Option<PathBuf> },
    Generated { kind: Generator, n: usize, rho: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub source: Source,
    pub seed: u64,
    pub eps: f64,
    pub variant: String,
    /// 0 picks the default from the problem size.
    pub levels: usize,
    /// `None` picks the default from the problem size.
    pub skip: Option<usize>,
    pub backend: String,
    pub tol: f64,
    pub maxit: usize,
    pub random_rhs: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            source: Source::Generated { kind: Generator::Lap2d, n: 32, rho: 1.0 },
            seed: 0,
            eps: 1e-2,
            variant: "orths".into(),
            levels: 0,
            skip: None,
            backend: "geo".into(),
            tol: 1e-12,
            maxit: 500,
            random_rhs: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    NotConverged,
    Breakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub elim: f64,
    pub scale: f64,
    pub sparsify: f64,
    pub merge: f64,
    pub nnz: usize,
    pub active: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub eps: f64,
    pub variant: String,
    pub levels: usize,
    pub skip: usize,
    pub backend: String,
    pub seed: u64,
    pub dofs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    #[serde(rename = "tP")]
    pub t_p: f64,
    #[serde(rename = "tF")]
    pub t_f: f64,
    #[serde(rename = "tS")]
    pub t_s: f64,
    #[serde(rename = "nCG")]
    pub n_cg: usize,
    #[serde(rename = "sizeTop")]
    pub size_top: usize,
    #[serde(rename = "memF")]
    pub mem_f: usize,
    #[serde(rename = "perLevel")]
    pub per_level: Vec<LevelRecord>,
    pub residuals: Vec<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(rename = "failedLevel", skip_serializing_if = "Option::is_none")]
    pub failed_level: Option<usize>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Converged => 0,
            Status::Breakdown => 2,
            Status::NotConverged => 3,
        }
    }
}

/// Errors that stop a run before a report can be produced.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sparse(#[from] spand::error::SparseError),
    #[error(transparent)]
    Ordering(#[from] spand::error::OrderingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn parse_backend(s: &str) -> Result<Backend, BenchError> {
    match s {
        "geo" => Ok(Backend::Geometric),
        "graph" => Ok(Backend::Graph),
        other => Err(BenchError::Usage(format!("unknown backend {other:?} (expected geo or graph)"))),
    }
}

type Problem = (SymSparseMatrix, Option<Vec<Vec<f64>>>, bool);

fn load_problem(cfg: &Config) -> Result<Problem, BenchError> {
    match &cfg.source {
        Source::Matrix { path, coords } => {
            let a = load_matrix_market(path)?;
            let c = coords.as_ref().map(|p| read_coords(p, a.dim())).transpose()?;
            Ok((a, c, false))
        }
        Source::Generated { kind, n, rho } => {
            if *n < 2 {
                return Err(BenchError::Usage(format!("grid size must be at least 2, got {n}")));
            }
            if !(*rho >= 1.0) {
                return Err(BenchError::Usage(format!("contrast must be at least 1, got {rho}")));
            }
            let (a, c) = match kind {
                Generator::Lap2d => gen_laplacian_2d(*n, *rho, cfg.seed),
                Generator::Lap3d => gen_laplacian_3d(*n, *rho, cfg.seed),
            };
            Ok((a, Some(c), *kind == Generator::Lap3d))
        }
    }
}

/// Skip count used when none is given: 4 leaf-side stages for 3D problems
/// with at least 1e5 dofs, 0 otherwise; clamped below the level count.
pub fn default_skip(dofs: usize, is_3d: bool, levels: usize) -> usize {
    let s = if is_3d && dofs >= 100_000 { 4 } else { 0 };
    s.min(levels.saturating_sub(1))
}

/// Runs one configuration. Numerical failures are reported in the result;
/// only bad input produces an error.
pub fn run_benchmark(cfg: &Config) -> Result<RunReport, BenchError> {
    let variant: Variant = cfg.variant.parse().map_err(BenchError::Usage)?;
    let backend = parse_backend(&cfg.backend)?;
    if !(cfg.eps >= 0.0) {
        return Err(BenchError::Usage(format!("eps must be non-negative, got {}", cfg.eps)));
    }
    if !(cfg.tol > 0.0) {
        return Err(BenchError::Usage(format!("tol must be positive, got {}", cfg.tol)));
    }
    let (a, coords, is_3d) = load_problem(cfg)?;
    let dofs = a.dim();
    let levels = if cfg.levels == 0 { default_levels(dofs) } else { cfg.levels };
    let skip = cfg.skip.unwrap_or_else(|| default_skip(dofs, is_3d, levels));
    if skip >= levels && levels > 1 {
        return Err(BenchError::Usage(format!("skip ({skip}) must be below the level count ({levels})")));
    }

    let t0 = Instant::now();
    let coords = if backend == Backend::Geometric { coords } else { None };
    let h = order_and_cluster(&a.adjacency(), coords.as_deref(), levels)?;
    let t_p = t0.elapsed().as_secs_f64();

    let opts = FactorOptions { eps: cfg.eps, variant, levels, skip, backend };
    let mut report = RunReport {
        config: ConfigEcho {
            eps: cfg.eps,
            variant: variant.to_string(),
            levels,
            skip,
            backend: cfg.backend.clone(),
            seed: cfg.seed,
            dofs,
        },
        t_p,
        t_f: 0.0,
        t_s: 0.0,
        n_cg: 0,
        size_top: 0,
        mem_f: 0,
        per_level: Vec::new(),
        residuals: Vec::new(),
        status: Status::Breakdown,
        error: None,
        failed_level: None,
    };

    let t1 = Instant::now();
    let m = match factorize(&a, &h, &opts) {
        Ok(m) => m,
        Err(e @ FactorError::Breakdown { level, .. }) => {
            report.t_f = t1.elapsed().as_secs_f64();
            report.failed_level = Some(level);
            report.error = Some(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(BenchError::Usage(e.to_string())),
    };
    report.t_f = t1.elapsed().as_secs_f64();
    report.size_top = m.stats.size_top;
    report.mem_f = factor_nnz(&m);
    report.per_level = m
        .stats
        .per_level
        .iter()
        .map(|l| LevelRecord {
            level: l.level,
            elim: l.elim_time,
            scale: l.scale_time,
            sparsify: l.sparsify_time,
            merge: l.merge_time,
            nnz: l.nnz,
            active: l.active,
        })
        .collect();

    let b = if cfg.random_rhs { random_rhs(dofs, cfg.seed) } else { a.matvec(&vec![1.0; dofs]) };
    let t2 = Instant::now();
    match pcg_solve(&a, &b, &m, cfg.tol, cfg.maxit) {
        Ok((_, stats)) => {
            report.t_s = t2.elapsed().as_secs_f64();
            report.n_cg = stats.iterations;
            report.residuals = stats.residuals;
            report.status = if stats.converged { Status::Converged } else { Status::NotConverged };
        }
        Err(e @ SolveError::IndefinitePreconditioner(..)) => {
            report.t_s = t2.elapsed().as_secs_f64();
            report.status = Status::Breakdown;
            report.error = Some(e.to_string());
        }
        Err(e) => return Err(BenchError::Usage(e.to_string())),
    }
    Ok(report)
}

/// Expands `"n=16,32;eps=1e-4;rho=1;variant=orths"` over `base`. Keys not
/// listed keep the base value. A key with an empty list yields no runs.
pub fn parse_sweep(spec: &str, base: &Config) -> Result<Vec<Config>, BenchError> {
    let mut configs = vec![base.clone()];
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) =
            part.split_once('=').ok_or_else(|| BenchError::Usage(format!("sweep entry {part:?} is not key=values")))?;
        let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        let mut next = Vec::with_capacity(configs.len() * values.len());
        for cfg in &configs {
            for v in &values {
                let mut c = cfg.clone();
                apply_sweep_value(&mut c, key.trim(), v)?;
                next.push(c);
            }
        }
        configs = next;
    }
    Ok(configs)
}

fn apply_sweep_value(c: &mut Config, key: &str, v: &str) -> Result<(), BenchError> {
    let bad = |what: &str| BenchError::Usage(format!("bad {what} value {v:?} in sweep"));
    match key {
        "n" | "rho" => {
            let Source::Generated { n, rho, .. } = &mut c.source else {
                return Err(BenchError::Usage(format!("sweeping {key} needs a generated problem")));
            };
            if key == "n" {
                *n = v.parse().map_err(|_| bad("n"))?;
            } else {
                *rho = v.parse().map_err(|_| bad("rho"))?;
            }
        }
        "eps" => c.eps = v.parse().map_err(|_| bad("eps"))?,
        "variant" => {
            v.parse::<Variant>().map_err(BenchError::Usage)?;
            c.variant = v.to_string();
        }
        "levels" => c.levels = v.parse().map_err(|_| bad("levels"))?,
        "skip" => c.skip = Some(v.parse().map_err(|_| bad("skip"))?),
        "seed" => c.seed = v.parse().map_err(|_| bad("seed"))?,
        other => return Err(BenchError::Usage(format!("unknown sweep key {other:?}"))),
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    n: Option<usize>,
    rho: Option<f64>,
    dofs: usize,
    eps: f64,
    variant: String,
    levels: usize,
    skip: usize,
    backend: String,
    seed: u64,
    status: String,
    #[serde(rename = "nCG")]
    n_cg: usize,
    #[serde(rename = "tP")]
    t_p: f64,
    #[serde(rename = "tF")]
    t_f: f64,
    #[serde(rename = "tS")]
    t_s: f64,
    #[serde(rename = "sizeTop")]
    size_top: usize,
    #[serde(rename = "memF")]
    mem_f: usize,
    residual: f64,
}

pub const SWEEP_HEADER: [&str; 17] = [
    "n", "rho", "dofs", "eps", "variant", "levels", "skip", "backend", "seed", "status", "nCG", "tP", "tF", "tS",
    "sizeTop", "memF", "residual",
];

/// Runs every configuration in order and writes one CSV row per run.
/// Breakdowns are recorded and the sweep continues.
pub fn run_sweep(configs: &[Config], out: impl Write) -> Result<Vec<RunReport>, BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    let mut reports = Vec::with_capacity(configs.len());
    for cfg in configs {
        let r = run_benchmark(cfg)?;
        let (n, rho) = match &cfg.source {
            Source::Generated { n, rho, .. } => (Some(*n), Some(*rho)),
            Source::Matrix { .. } => (None, None),
        };
        w.serialize(SweepRow {
            n,
            rho,
            dofs: r.config.dofs,
            eps: r.config.eps,
            variant: r.config.variant.clone(),
            levels: r.config.levels,
            skip: r.config.skip,
            backend: r.config.backend.clone(),
            seed: r.config.seed,
            status: serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            n_cg: r.n_cg,
            t_p: r.t_p,
            t_f: r.t_f,
            t_s: r.t_s,
            size_top: r.size_top,
            mem_f: r.mem_f,
            residual: r.residuals.last().copied().unwrap_or(f64::NAN),
        })?;
        reports.push(r);
    }
    w.flush()?;
    Ok(reports)
}
