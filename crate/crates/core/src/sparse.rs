//! Symmetric sparse storage (lower triangle, compressed rows), its graph,
//! and Matrix Market exchange.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dense::Mat;
use crate::error::SparseError;

/// Symmetric matrix stored as its lower triangle in compressed-row form.
/// Row `i` holds columns `<= i` in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SymSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymSparseMatrix {
    /// Builds from coordinate triplets. Entries above the diagonal are folded
    /// into the lower triangle; duplicates are summed. Explicit zeros are kept.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, SparseError> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(SparseError::IndexOutOfRange { row: r, col: c, n });
            }
            let key = if r >= c { (r, c) } else { (c, r) };
            *map.entry(key).or_insert(0.0) += v;
        }
        Ok(Self::from_sorted_map(n, map))
    }

    fn from_sorted_map(n: usize, map: BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(map.len());
        let mut values = Vec::with_capacity(map.len());
        for (&(r, c), &v) in &map {
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymSparseMatrix { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored (lower-triangle) entries.
    pub fn nnz_lower(&self) -> usize {
        self.values.len()
    }

    /// Lower-triangle entries `(row, col, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    /// All stored entries with `row >= col`.
    pub fn lower_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.col_idx[a..b].binary_search(&c) {
            Ok(k) => self.values[a + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x` using both triangles.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let mut acc = 0.0;
            let xi = x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let v = self.values[k];
                acc += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
    }

    /// Dense copy of `A[rows, cols]`, mirrored from the stored triangle.
    pub fn extract_block(&self, rows: &[usize], cols: &[usize]) -> Result<Mat, SparseError> {
        for &d in rows.iter().chain(cols) {
            if d >= self.n {
                return Err(SparseError::IndexOutOfRange { row: d, col: d, n: self.n });
            }
        }
        let mut pos = vec![usize::MAX; self.n];
        for (k, &c) in cols.iter().enumerate() {
            pos[c] = k;
        }
        let mut out = Mat::zeros(rows.len(), cols.len());
        let want_col = |c: usize| pos[c] != usize::MAX;
        for (ri, &r) in rows.iter().enumerate() {
            // Row r of the full matrix: lower entries of row r, then column r below the diagonal.
            for (c, v) in self.row(r) {
                if want_col(c) {
                    out[(ri, pos[c])] = v;
                }
            }
            for &c in cols {
                if c > r {
                    out[(ri, pos[c])] = self.get(c, r);
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for (i, j, v) in self.lower_entries() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Undirected graph of the off-diagonal pattern.
    pub fn adjacency(&self) -> Graph {
        let mut deg = vec![0usize; self.n];
        for (i, j, _) in self.lower_entries() {
            if i != j {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        let mut ptr = vec![0usize; self.n + 1];
        for i in 0..self.n {
            ptr[i + 1] = ptr[i] + deg[i];
        }
        let mut fill = ptr.clone();
        let mut adj = vec![0usize; ptr[self.n]];
        for (i, j, _) in self.lower_entries() {
            if i != j {
                adj[fill[i]] = j;
                fill[i] += 1;
                adj[fill[j]] = i;
                fill[j] += 1;
            }
        }
        for i in 0..self.n {
            adj[ptr[i]..ptr[i + 1]].sort_unstable();
        }
        Graph { ptr, adj }
    }

    /// Symmetric permutation `P A Pᵀ` where new index `k` is old `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> SymSparseMatrix {
        assert_eq!(perm.len(), self.n);
        let mut inv = vec![0usize; self.n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let trip: Vec<_> = self.lower_entries().map(|(i, j, v)| (inv[i], inv[j], v)).collect();
        SymSparseMatrix::from_triplets(self.n, &trip).expect("permutation keeps indices in range")
    }

    pub fn scaled(&self, alpha: f64) -> SymSparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }
}

/// Undirected graph in compressed adjacency form, no self loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Graph {
        let trip: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).chain((0..n).map(|i| (i, i, 1.0))).collect();
        SymSparseMatrix::from_triplets(n, &trip).expect("edge endpoints in range").adjacency()
    }

    pub fn num_vertices(&self) -> usize {
        self.ptr.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }

    /// Edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_vertices())
            .flat_map(|i| self.neighbors(i).iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }
}

/// Reads a Matrix Market coordinate file holding a real symmetric matrix.
///
/// `general` files are accepted when their content is symmetric to a relative
/// tolerance of 1e-12; the upper triangle is folded away.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SymSparseMatrix, SparseError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| SparseError::Io { path: path.to_path_buf(), source })?;
    read_matrix_market(BufReader::new(file)).map_err(|e| match e {
        SparseError::Io { source, .. } => SparseError::Io { path: path.to_path_buf(), source },
        other => other,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    Symmetric,
    General,
}

pub fn read_matrix_market(reader: impl BufRead) -> Result<SymSparseMatrix, SparseError> {
    let fmt_err = |line: usize, msg: &str| SparseError::Format { line, msg: msg.to_string() };
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| fmt_err(1, "empty file"))?;
    let header = header.map_err(io_err)?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(fmt_err(1, "expected '%%MatrixMarket matrix ...' header"));
    }
    if tokens[2] != "coordinate" {
        return Err(fmt_err(1, "only coordinate format is supported"));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(fmt_err(1, "field must be real or integer"));
    }
    let symmetry = match tokens[4].as_str() {
        "symmetric" => Symmetry::Symmetric,
        "general" => Symmetry::General,
        _ => return Err(fmt_err(1, "symmetry must be symmetric or general")),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut lower: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut upper: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut expected = 0usize;
    let mut seen = 0usize;

    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(io_err)?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace();
        match size {
            None => {
                let nums: Vec<usize> = it
                    .map(|s| s.parse::<usize>().map_err(|_| fmt_err(lineno, "bad size line")))
                    .collect::<Result<_, _>>()?;
                if nums.len() != 3 {
                    return Err(fmt_err(lineno, "size line needs rows, cols, nnz"));
                }
                if nums[0] != nums[1] {
                    return Err(fmt_err(lineno, "matrix is not square"));
                }
                size = Some((nums[0], nums[1]));
                expected = nums[2];
            }
            Some((n, _)) => {
                let mut field = |name: &str| it.next().ok_or_else(|| fmt_err(lineno, &format!("missing {name}")));
                let r: usize = field("row")?.parse().map_err(|_| fmt_err(lineno, "bad row index"))?;
                let c: usize = field("col")?.parse().map_err(|_| fmt_err(lineno, "bad column index"))?;
                let v: f64 = field("value")?.parse().map_err(|_| fmt_err(lineno, "bad value"))?;
                if r == 0 || c == 0 || r > n || c > n {
                    return Err(SparseError::IndexOutOfRange { row: r, col: c, n });
                }
                let (r, c) = (r - 1, c - 1);
                seen += 1;
                if r >= c {
                    *lower.entry((r, c)).or_insert(0.0) += v;
                } else if symmetry == Symmetry::Symmetric {
                    *lower.entry((c, r)).or_insert(0.0) += v;
                } else {
                    *upper.entry((c, r)).or_insert(0.0) += v;
                }
            }
        }
    }
    let (n, _) = size.ok_or_else(|| fmt_err(0, "missing size line"))?;
    if seen != expected {
        return Err(fmt_err(0, &format!("expected {expected} entries, found {seen}")));
    }

    if symmetry == Symmetry::General {
        for (&(r, c), &v) in &lower {
            if r == c {
                continue;
            }
            let Some(&u) = upper.get(&(r, c)) else {
                return Err(SparseError::Asymmetric { row: r, col: c });
            };
            if (v - u).abs() > 1e-12 * v.abs().max(u.abs()) {
                return Err(SparseError::Asymmetric { row: r, col: c });
            }
        }
        if let Some((&(r, c), _)) = upper.iter().find(|(k, _)| !lower.contains_key(k)) {
            return Err(SparseError::Asymmetric { row: c, col: r });
        }
    }
    Ok(SymSparseMatrix::from_sorted_map(n, lower))
}

fn io_err(source: std::io::Error) -> SparseError {
    SparseError::Io { path: Default::default(), source }
}

/// Writes the lower triangle as a `coordinate real symmetric` file.
/// Values are printed with full round-trip precision.
pub fn write_matrix_market(a: &SymSparseMatrix, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.n, a.n, a.nnz_lower())?;
    for (i, j, v) in a.lower_entries() {
        writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn save_matrix_market(a: &SymSparseMatrix, path: impl AsRef<Path>) -> Result<(), SparseError> {
    let path = path.as_ref();
    let wrap = |source| SparseError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(wrap)?;
    let mut w = BufWriter::new(file);
    write_matrix_market(a, &mut w).map_err(wrap)?;
    w.flush().map_err(wrap)
}

/// Reads a whitespace-separated coordinates file: one line per vertex with
/// 2 or 3 columns.
pub fn read_coords(path: impl AsRef<Path>, n: usize) -> Result<Vec<Vec<f64>>, crate::error::OrderingError> {
    use crate::error::OrderingError;
    let path = path.as_ref();
    let bad = |msg: String| OrderingError::CoordsFile { path: path.to_path_buf(), msg };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut coords = Vec::with_capacity(n);
    let mut dim = None;
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("line {}: bad number {s:?}", k + 1))))
            .collect::<Result<_, _>>()?;
        if !(2..=3).contains(&row.len()) {
            return Err(bad(format!("line {}: expected 2 or 3 columns", k + 1)));
        }
        if *dim.get_or_insert(row.len()) != row.len() {
            return Err(bad(format!("line {}: inconsistent column count", k + 1)));
        }
        coords.push(row);
    }
    if coords.len() != n {
        return Err(OrderingError::CoordsMismatch { expected: n, got: coords.len() });
    }
    Ok(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<SymSparseMatrix, SparseError> {
        read_matrix_market(s.as_bytes())
    }

    fn two_by_two() -> SymSparseMatrix {
        SymSparseMatrix::from_triplets(2, &[(0, 0, 4.0), (1, 0, 2.0), (1, 1, 3.0)]).unwrap()
    }

    #[test]
    fn reads_symmetric_file() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 3\n1 1 4\n2 1 2\n2 2 3\n").unwrap();
        assert_eq!(a, two_by_two());
        assert_eq!(a.to_dense(), Mat::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]));
    }

    #[test]
    fn folds_general_file() {
        let a = parse("%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 4\n1 2 2\n2 1 2\n2 2 3\n").unwrap();
        assert_eq!(a, two_by_two());
    }

    #[test]
    fn rejects_bad_inputs() {
        let e = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1.0\n").unwrap_err();
        assert!(matches!(e, SparseError::IndexOutOfRange { row: 3, col: 1, n: 2 }));

        let e = parse("%%MatrixMarket matrix array real symmetric\n2 2\n").unwrap_err();
        assert!(matches!(e, SparseError::Format { .. }));

        let e = parse("%%MatrixMarket matrix coordinate real symmetric\n2 3 0\n").unwrap_err();
        assert!(matches!(e, SparseError::Format { .. }));

        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 2\n2 1 2.5\n").unwrap_err();
        assert!(matches!(e, SparseError::Asymmetric { .. }));

        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 2\n").unwrap_err();
        assert!(matches!(e, SparseError::Asymmetric { .. }));

        let e = parse("garbage\n").unwrap_err();
        assert!(matches!(e, SparseError::Format { .. }));
    }

    #[test]
    fn keeps_explicit_zeros_as_edges() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 1 0\n2 2 1\n").unwrap();
        assert_eq!(a.nnz_lower(), 3);
        assert_eq!(a.adjacency().edges(), vec![(0, 1)]);
    }

    #[test]
    fn extract_block_examples() {
        let a = two_by_two();
        assert_eq!(a.extract_block(&[0], &[1]).unwrap(), Mat::from_rows(&[&[2.0]]));
        assert_eq!(a.extract_block(&[0, 1], &[0, 1]).unwrap(), a.to_dense());
        assert_eq!(a.extract_block(&[1], &[0, 1]).unwrap(), Mat::from_rows(&[&[2.0, 3.0]]));
        assert!(a.extract_block(&[2], &[0]).is_err());
    }

    #[test]
    fn adjacency_examples() {
        assert_eq!(two_by_two().adjacency().edges(), vec![(0, 1)]);
        let diag = SymSparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        assert!(diag.adjacency().edges().is_empty());

        // 3x3 grid, 5-point stencil: 2 * 3 * 2 = 12 edges
        let mut trip = vec![];
        for y in 0..3 {
            for x in 0..3 {
                let v = x + 3 * y;
                trip.push((v, v, 4.0));
                if x + 1 < 3 {
                    trip.push((v + 1, v, -1.0));
                }
                if y + 1 < 3 {
                    trip.push((v + 3, v, -1.0));
                }
            }
        }
        let g = SymSparseMatrix::from_triplets(9, &trip).unwrap().adjacency();
        assert_eq!(g.edges().len(), 12);
    }

    fn arb_matrix() -> impl Strategy<Value = SymSparseMatrix> {
        (1usize..12).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n, -1e3f64..1e3), 0..40)
                .prop_map(move |t| SymSparseMatrix::from_triplets(n, &t).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matrix_market_round_trip_is_bit_exact(a in arb_matrix()) {
            let mut buf = Vec::new();
            write_matrix_market(&a, &mut buf).unwrap();
            let b = read_matrix_market(&buf[..]).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn extract_block_transpose_symmetry(
            a in arb_matrix(),
            seed in any::<u64>(),
        ) {
            let n = a.dim();
            let rows: Vec<usize> = (0..n).filter(|i| (seed >> (i % 64)) & 1 == 1).collect();
            let cols: Vec<usize> = (0..n).filter(|i| (seed >> ((i + 7) % 64)) & 1 == 1).collect();
            let ab = a.extract_block(&rows, &cols).unwrap();
            let ba = a.extract_block(&cols, &rows).unwrap();
            prop_assert_eq!(ab.transpose(), ba);
        }

        #[test]
        fn adjacency_is_symmetric_and_loop_free(a in arb_matrix()) {
            let g = a.adjacency();
            for v in 0..g.num_vertices() {
                for &u in g.neighbors(v) {
                    prop_assert!(u != v);
                    prop_assert!(g.neighbors(u).contains(&v));
                }
            }
        }

        #[test]
        fn matvec_matches_dense(a in arb_matrix()) {
            let x: Vec<f64> = (0..a.dim()).map(|i| (i as f64).sin()).collect();
            let y = a.matvec(&x);
            let yd = a.to_dense().matvec(&x);
            for (p, q) in y.iter().zip(&yd) {
                prop_assert!((p - q).abs() <= 1e-9 * (1.0 + q.abs()));
            }
        }
    }
}
