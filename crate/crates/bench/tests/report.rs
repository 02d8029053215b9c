use spand_bench::{parse_sweep, run_benchmark, run_sweep, Config, Generator, Source, Status};

fn lap(kind: Generator, n: usize, rho: f64) -> Config {
    Config { source: Source::Generated { kind, n, rho }, ..Config::default() }
}

#[test]
fn identical_configs_give_identical_counts() {
    let cfg = Config { eps: 1e-2, seed: 5, ..lap(Generator::Lap2d, 24, 100.0) };
    let a = run_benchmark(&cfg).unwrap();
    let b = run_benchmark(&cfg).unwrap();
    assert_eq!((a.n_cg, a.size_top, a.mem_f), (b.n_cg, b.size_top, b.mem_f));
    assert_eq!(a.residuals, b.residuals);
    let nnz: Vec<usize> = a.per_level.iter().map(|l| l.nnz).collect();
    assert_eq!(nnz, b.per_level.iter().map(|l| l.nnz).collect::<Vec<_>>());
}

#[test]
fn level_times_fit_in_factor_time() {
    let r = run_benchmark(&Config { eps: 1e-3, ..lap(Generator::Lap3d, 12, 1.0) }).unwrap();
    assert_eq!(r.per_level.len(), r.config.levels);
    let levels: Vec<usize> = r.per_level.iter().map(|l| l.level).collect();
    assert_eq!(levels, (1..=r.config.levels).rev().collect::<Vec<_>>());
    let sum: f64 = r.per_level.iter().map(|l| l.elim + l.scale + l.sparsify + l.merge).sum();
    assert!(sum <= r.t_f * 1.05, "{sum} > {}", r.t_f);
    assert!(r.size_top > 0);
    assert_eq!(r.per_level.last().unwrap().active, 0);
}

#[test]
fn orths_beats_in_on_high_contrast() {
    let base = Config { eps: 1e-2, ..lap(Generator::Lap2d, 64, 100.0) };
    let configs = parse_sweep("variant=in,ins,orths", &base).unwrap();
    let mut csv = Vec::new();
    let reports = run_sweep(&configs, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    let (inn, orth) = (&reports[0], &reports[2]);
    assert_eq!(orth.status, Status::Converged);
    if inn.status == Status::Converged {
        assert!(orth.n_cg <= inn.n_cg, "orths {} in {}", orth.n_cg, inn.n_cg);
    }
}

#[test]
fn sweep_parsing() {
    let base = lap(Generator::Lap2d, 8, 1.0);
    assert_eq!(parse_sweep("n=4,8;eps=0.1,0.01", &base).unwrap().len(), 4);
    assert_eq!(parse_sweep("", &base).unwrap().len(), 1);
    assert!(parse_sweep("n=", &base).unwrap().is_empty());
    assert!(parse_sweep("bogus=1", &base).is_err());
    assert!(parse_sweep("variant=lu", &base).is_err());
    assert!(parse_sweep("n", &base).is_err());
}

#[test]
fn bad_configs_are_rejected() {
    assert!(run_benchmark(&Config { variant: "lu".into(), ..Config::default() }).is_err());
    assert!(run_benchmark(&Config { backend: "metis".into(), ..Config::default() }).is_err());
    assert!(run_benchmark(&Config { tol: 0.0, ..Config::default() }).is_err());
    assert!(run_benchmark(&lap(Generator::Lap2d, 1, 1.0)).is_err());
    assert!(run_benchmark(&lap(Generator::Lap2d, 8, 0.5)).is_err());
}

#[test]
fn report_json_keys() {
    let r = run_benchmark(&lap(Generator::Lap2d, 8, 1.0)).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    let obj = v.as_object().unwrap();
    for key in ["config", "tP", "tF", "tS", "nCG", "sizeTop", "memF", "perLevel", "residuals", "status"] {
        assert!(obj.contains_key(key), "missing {key}");
    }
    assert!(!obj.contains_key("error"));
    let back: spand_bench::RunReport = serde_json::from_value(v).unwrap();
    assert_eq!(back, r);
}
