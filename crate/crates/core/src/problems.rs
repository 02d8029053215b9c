//! High-contrast Laplacians on regular grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparse::SymSparseMatrix;

/// Per-cell coefficients, each either `rho` or `1 / rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContrastField {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
    pub rho: f64,
    pub seed: u64,
}

impl ContrastField {
    fn at(&self, idx: &[usize]) -> f64 {
        self.values[linear(&self.dims, idx)]
    }
}

fn linear(dims: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(dims).rev().fold(0, |acc, (&i, &d)| acc * d + i)
}

const SIGMA: f64 = 1.0;
const RADIUS: i64 = 3;

fn gaussian_kernel() -> Vec<f64> {
    let w: Vec<f64> = (-RADIUS..=RADIUS).map(|x| (-(x * x) as f64 / (2.0 * SIGMA * SIGMA)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Uniform noise, smoothed by a separable unit-width Gaussian (zero padded),
/// then thresholded at 0.5 into `{rho, 1/rho}`.
pub fn gen_field(dims: &[usize], rho: f64, seed: u64) -> ContrastField {
    let total: usize = dims.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..total).map(|_| rng.gen::<f64>()).collect();
    let kernel = gaussian_kernel();

    let mut stride = 1;
    for &d in dims {
        let mut out = vec![0.0; total];
        for (i, o) in out.iter_mut().enumerate() {
            let pos = (i / stride % d) as i64;
            let mut acc = 0.0;
            for (t, &w) in kernel.iter().enumerate() {
                let q = pos + t as i64 - RADIUS;
                if (0..d as i64).contains(&q) {
                    acc += w * values[(i as i64 + (q - pos) * stride as i64) as usize];
                }
            }
            *o = acc;
        }
        values = out;
        stride *= d;
    }
    let low = rho.recip();
    values.iter_mut().for_each(|v| *v = if *v >= 0.5 { rho } else { low });
    ContrastField { dims: dims.to_vec(), values, rho, seed }
}

/// Assembles `-div(a grad u)` on the grid of `field` with homogeneous
/// Dirichlet conditions. Face coefficients are arithmetic means of the two
/// cells; a boundary face takes its cell's value.
pub fn assemble_laplacian(field: &ContrastField) -> (SymSparseMatrix, Vec<Vec<f64>>) {
    let dims = &field.dims;
    let total: usize = dims.iter().product();
    let mut trip = Vec::with_capacity(total * (dims.len() + 1));
    let mut coords = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims.len()];
    for v in 0..total {
        let mut rem = v;
        for (k, &d) in dims.iter().enumerate() {
            idx[k] = rem % d;
            rem /= d;
        }
        coords.push(idx.iter().map(|&i| i as f64).collect());
        let a = field.at(&idx);
        let mut diag = 0.0;
        for k in 0..dims.len() {
            // Lower face.
            if idx[k] == 0 {
                diag += a;
            } else {
                let mut nb = idx.clone();
                nb[k] -= 1;
                let face = 0.5 * (a + field.at(&nb));
                diag += face;
                trip.push((v, linear(dims, &nb), -face));
            }
            // Upper face; its off-diagonal is emitted by the other cell.
            if idx[k] + 1 == dims[k] {
                diag += a;
            } else {
                let mut nb = idx.clone();
                nb[k] += 1;
                diag += 0.5 * (a + field.at(&nb));
            }
        }
        trip.push((v, v, diag));
    }
    let a = SymSparseMatrix::from_triplets(total, &trip).expect("grid indices in range");
    (a, coords)
}

/// 5-point Laplacian on an `n x n` grid.
pub fn gen_laplacian_2d(n: usize, rho: f64, seed: u64) -> (SymSparseMatrix, Vec<Vec<f64>>) {
    assemble_laplacian(&gen_field(&[n, n], rho, seed))
}

/// 7-point Laplacian on an `n x n x n` grid.
pub fn gen_laplacian_3d(n: usize, rho: f64, seed: u64) -> (SymSparseMatrix, Vec<Vec<f64>>) {
    assemble_laplacian(&gen_field(&[n, n, n], rho, seed))
}

/// Uniform `[0, 1)` right-hand side from a seeded generator.
pub fn random_rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen::<f64>()).collect()
}
