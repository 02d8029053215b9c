use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use spand_bench::{parse_sweep, run_benchmark, run_sweep, BenchError, Config, Generator, Source, Status};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Gen {
    Lap2d,
    Lap3d,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    In,
    Ins,
    Orths,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Geo,
    Graph,
}

/// Factorize a sparse SPD system with spaND and solve it with PCG.
#[derive(Debug, Parser)]
#[command(name = "spand-bench", version)]
struct Args {
    /// Matrix Market file (coordinate, real, symmetric)
    #[arg(long, conflicts_with = "gen")]
    matrix: Option<PathBuf>,

    /// Vertex coordinates, one line of 2 or 3 numbers per row of the matrix
    #[arg(long, requires = "matrix")]
    coords: Option<PathBuf>,

    /// Generate a high-contrast Laplacian instead of reading a matrix
    #[arg(long, value_enum)]
    gen: Option<Gen>,

    /// Grid size per dimension for generated problems
    #[arg(long, default_value_t = 32)]
    n: usize,

    /// Coefficient contrast for generated problems
    #[arg(long, default_value_t = 1.0)]
    rho: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Compression tolerance
    #[arg(long, default_value_t = 1e-2)]
    eps: f64,

    #[arg(long, value_enum, default_value = "orths")]
    variant: VariantArg,

    /// Number of levels (0 = from problem size)
    #[arg(long, default_value_t = 0)]
    levels: usize,

    /// Leaf-side levels without sparsification (default depends on the problem)
    #[arg(long)]
    skip: Option<usize>,

    #[arg(long, value_enum, default_value = "geo")]
    backend: BackendArg,

    /// Relative residual target
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,

    #[arg(long, default_value_t = 500)]
    maxit: usize,

    /// Use a seeded uniform right-hand side instead of A*1
    #[arg(long)]
    random_rhs: bool,

    /// Write the JSON report (or the sweep CSV) here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,

    /// Sweep specification, e.g. "n=16,32;eps=1e-4;rho=1;variant=orths"
    #[arg(long)]
    sweep: Option<String>,
}

fn config(args: &Args) -> Result<Config, BenchError> {
    let source = match (&args.matrix, args.gen) {
        (Some(path), _) => Source::Matrix { path: path.clone(), coords: args.coords.clone() },
        (None, Some(g)) => Source::Generated {
            kind: match g {
                Gen::Lap2d => Generator::Lap2d,
                Gen::Lap3d => Generator::Lap3d,
            },
            n: args.n,
            rho: args.rho,
        },
        (None, None) => return Err(BenchError::Usage("one of --matrix or --gen is required".into())),
    };
    Ok(Config {
        source,
        seed: args.seed,
        eps: args.eps,
        variant: match args.variant {
            VariantArg::In => "in",
            VariantArg::Ins => "ins",
            VariantArg::Orths => "orths",
        }
        .into(),
        levels: args.levels,
        skip: args.skip,
        backend: match args.backend {
            BackendArg::Geo => "geo",
            BackendArg::Graph => "graph",
        }
        .into(),
        tol: args.tol,
        maxit: args.maxit,
        random_rhs: args.random_rhs,
    })
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(args: &Args) -> Result<u8, BenchError> {
    let base = config(args)?;
    if let Some(spec) = &args.sweep {
        let configs = parse_sweep(spec, &base)?;
        let reports = run_sweep(&configs, output(&args.out)?)?;
        let worst = reports.iter().map(|r| r.exit_code()).max().unwrap_or(0);
        return Ok(worst as u8);
    }
    let report = run_benchmark(&base)?;
    let mut out = output(&args.out)?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    if report.status != Status::Converged {
        if let Some(e) = &report.error {
            eprintln!("spand-bench: {e}");
        }
    }
    Ok(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("spand-bench: {e}");
            ExitCode::from(1)
        }
    }
}
