use spand::dense::{cholesky, Mat};
use spand::error::SolveError;
use spand::factor::{factor_nnz, factorize_matrix, Backend, FactorOptions, Preconditioner, Variant};
use spand::pcg::pcg_solve;
use spand::precond::{apply_m, apply_mt, apply_preconditioner};
use spand::problems::{gen_laplacian_2d, gen_laplacian_3d, random_rhs};
use spand::sparse::{read_matrix_market, write_matrix_market, SymSparseMatrix};

fn opts(eps: f64, variant: Variant, levels: usize) -> FactorOptions {
    FactorOptions { eps, variant, levels, skip: 0, backend: Backend::Geometric }
}

fn inverse(a: &Mat) -> Mat {
    let n = a.nrows();
    let l = cholesky(a).unwrap().l;
    let mut x = Mat::identity(n);
    spand::dense::solve_lower(&l, &mut x);
    spand::dense::solve_lower_t(&l, &mut x);
    x
}

#[test]
fn identity_matrix_converges_in_one_step() {
    let trip: Vec<_> = (0..10).map(|i| (i, i, 1.0)).collect();
    let a = SymSparseMatrix::from_triplets(10, &trip).unwrap();
    let b = random_rhs(10, 3);
    let (x, s) = pcg_solve(&a, &b, &Preconditioner::identity(10), 1e-12, 10).unwrap();
    assert_eq!(s.iterations, 1);
    assert!(s.converged);
    for (xi, bi) in x.iter().zip(&b) {
        assert!((xi - bi).abs() < 1e-15);
    }
}

#[test]
fn exact_mode_gives_the_inverse() {
    for variant in [Variant::OrthS, Variant::InS, Variant::In] {
        let (a, c) = gen_laplacian_2d(10, 50.0, 4);
        let (_, m) = factorize_matrix(&a, Some(&c), &opts(0.0, variant, 3)).unwrap();
        let inv = inverse(&a.to_dense());
        let n = a.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let z = apply_preconditioner(&m, &e).unwrap();
            for i in 0..n {
                worst = worst.max((z[i] - inv[(i, j)]).abs());
            }
        }
        assert!(worst < 1e-10, "{variant}: {worst:e}");
    }
}

#[test]
fn exact_mode_solves_in_two_iterations() {
    let (a, c) = gen_laplacian_2d(16, 1.0, 0);
    let (_, m) = factorize_matrix(&a, Some(&c), &opts(0.0, Variant::OrthS, 3)).unwrap();
    let b = a.matvec(&vec![1.0; a.dim()]);
    let (x, s) = pcg_solve(&a, &b, &m, 1e-12, 10).unwrap();
    assert!(s.converged && s.iterations <= 2, "{s:?}");
    assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-10));
}

#[test]
fn loose_tolerance_still_converges() {
    let (a, c) = gen_laplacian_3d(10, 100.0, 1);
    let (_, m) = factorize_matrix(&a, Some(&c), &opts(0.5, Variant::OrthS, 0)).unwrap();
    let b = random_rhs(a.dim(), 9);
    let (x, s) = pcg_solve(&a, &b, &m, 1e-10, 500).unwrap();
    assert!(s.converged);
    let r = a.matvec(&x);
    let err: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(err / bn <= 1e-10);
    assert!(s.residuals.windows(2).any(|w| w[1] < w[0]));
}

#[test]
fn smaller_tolerance_means_fewer_iterations() {
    let (a, c) = gen_laplacian_2d(48, 100.0, 2);
    let b = a.matvec(&vec![1.0; a.dim()]);
    let its: Vec<usize> = [0.5, 1e-2, 1e-5]
        .iter()
        .map(|&eps| {
            let (_, m) = factorize_matrix(&a, Some(&c), &opts(eps, Variant::OrthS, 0)).unwrap();
            pcg_solve(&a, &b, &m, 1e-12, 500).unwrap().1.iterations
        })
        .collect();
    assert!(its[0] >= its[1] && its[1] >= its[2], "{its:?}");
}

#[test]
fn graph_backend_matches_geometric_quality() {
    let (a, c) = gen_laplacian_2d(32, 1.0, 0);
    let b = a.matvec(&vec![1.0; a.dim()]);
    for backend in [Backend::Geometric, Backend::Graph] {
        let o = FactorOptions { backend, ..opts(1e-4, Variant::OrthS, 0) };
        let (_, m) = factorize_matrix(&a, Some(&c), &o).unwrap();
        let (_, s) = pcg_solve(&a, &b, &m, 1e-12, 100).unwrap();
        assert!(s.converged && s.iterations <= 15, "{backend:?}: {s:?}");
    }
}

#[test]
fn relabeled_matrix_gives_the_same_solution() {
    let (a, _) = gen_laplacian_2d(12, 10.0, 5);
    let n = a.dim();
    let perm: Vec<usize> = (0..n).map(|i| (i * 37) % n).collect();
    let pa = a.permuted(&perm);
    let b = random_rhs(n, 1);
    let o = FactorOptions { backend: Backend::Graph, ..opts(1e-3, Variant::OrthS, 3) };
    let (_, m) = factorize_matrix(&a, None, &o).unwrap();
    let (_, pm) = factorize_matrix(&pa, None, &o).unwrap();
    let (x, _) = pcg_solve(&a, &b, &m, 1e-12, 200).unwrap();
    // New index k holds old dof perm[k].
    let pb: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    let (px, _) = pcg_solve(&pa, &pb, &pm, 1e-12, 200).unwrap();
    for k in 0..n {
        assert!((px[k] - x[perm[k]]).abs() < 1e-9, "dof {k}");
    }
}

#[test]
fn mt_and_m_are_adjoint_on_3d() {
    let (a, c) = gen_laplacian_3d(8, 1000.0, 3);
    let (_, m) = factorize_matrix(&a, Some(&c), &opts(1e-1, Variant::OrthS, 0)).unwrap();
    let u = random_rhs(a.dim(), 10);
    let v = random_rhs(a.dim(), 11);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let lhs = dot(&apply_mt(&m, &u).unwrap(), &v);
    let rhs = dot(&u, &apply_m(&m, &v).unwrap());
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    assert!(factor_nnz(&m) > 0);
}

#[test]
fn solver_rejects_bad_input() {
    let (a, _) = gen_laplacian_2d(4, 1.0, 0);
    let id = Preconditioner::identity(16);
    assert!(matches!(pcg_solve(&a, &[1.0; 3], &id, 1e-8, 10), Err(SolveError::DimensionMismatch { .. })));
    assert!(matches!(
        pcg_solve(&a, &[1.0; 16], &Preconditioner::identity(5), 1e-8, 10),
        Err(SolveError::DimensionMismatch { .. })
    ));
    assert!(matches!(pcg_solve(&a, &[1.0; 16], &id, 0.0, 10), Err(SolveError::BadTolerance(_))));
    assert!(apply_mt(&id, &[1.0; 4]).is_err());
    let (x, s) = pcg_solve(&a, &[0.0; 16], &id, 1e-8, 10).unwrap();
    assert!(s.converged && s.iterations == 0 && x.iter().all(|&v| v == 0.0));
}

#[test]
fn matrix_market_round_trip_through_solver() {
    let (a, c) = gen_laplacian_2d(9, 100.0, 6);
    let mut buf = Vec::new();
    write_matrix_market(&a, &mut buf).unwrap();
    let back = read_matrix_market(buf.as_slice()).unwrap();
    assert_eq!(back.dim(), a.dim());
    let o = opts(1e-2, Variant::OrthS, 0);
    let (_, m1) = factorize_matrix(&a, Some(&c), &o).unwrap();
    let (_, m2) = factorize_matrix(&back, Some(&c), &o).unwrap();
    let b = random_rhs(a.dim(), 2);
    let s1 = pcg_solve(&a, &b, &m1, 1e-10, 200).unwrap().1;
    let s2 = pcg_solve(&back, &b, &m2, 1e-10, 200).unwrap().1;
    assert!(s1.converged);
    assert_eq!(s1.iterations, s2.iterations);
}

#[test]
fn stagnation_below_roundoff_is_not_an_error() {
    // One level is a dense Cholesky; the true residual cannot reach 1e-16.
    let (a, c) = gen_laplacian_2d(9, 100.0, 6);
    let (_, m) = factorize_matrix(&a, Some(&c), &opts(1e-2, Variant::OrthS, 1)).unwrap();
    let b = random_rhs(a.dim(), 2);
    let (x, s) = pcg_solve(&a, &b, &m, 1e-16, 200).unwrap();
    assert!(!s.converged);
    assert!(s.iterations < 200);
    assert!(*s.residuals.last().unwrap() < 1e-10);
    assert!(x.iter().all(|v| v.is_finite()));
}

#[test]
fn exact_mode_iterations_ignore_relabeling() {
    let (a, c) = gen_laplacian_2d(14, 100.0, 8);
    let n = a.dim();
    let perm: Vec<usize> = (0..n).rev().collect();
    let pa = a.permuted(&perm);
    let pc: Vec<Vec<f64>> = perm.iter().map(|&p| c[p].clone()).collect();
    let o = opts(0.0, Variant::OrthS, 3);
    let b = a.matvec(&vec![1.0; n]);
    let pb: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    let (_, m) = factorize_matrix(&a, Some(&c), &o).unwrap();
    let (_, pm) = factorize_matrix(&pa, Some(&pc), &o).unwrap();
    let s = pcg_solve(&a, &b, &m, 1e-10, 10).unwrap().1;
    let ps = pcg_solve(&pa, &pb, &pm, 1e-10, 10).unwrap().1;
    assert_eq!(s.iterations, ps.iterations);
    assert!(s.converged && ps.converged);
}
