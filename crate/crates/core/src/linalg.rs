//! Dense and sparse linear algebra used by the block recursion and the
//! Newton-based baselines.
//!
//! Factorizations are immutable once built; `solve` borrows them, so one
//! factor can serve any number of right-hand sides from several threads.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense LU factorization with partial pivoting, `P·A = L·U`.
///
/// A zero (or roundoff-level) pivot does not abort the factorization; it is
/// recorded in [`LuFactor::singular_at`] so callers can report where the
/// matrix lost rank.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: Vec<f64>,
    /// `perm[k]` is the original row placed at position `k`.
    perm: Vec<usize>,
    singular: Option<usize>,
}

pub fn lu_factor(a: &DenseMatrix) -> LuFactor {
    assert_eq!(a.rows, a.cols, "lu_factor needs a square matrix");
    let n = a.rows;
    let mut lu = a.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let tiny = pivot_threshold(n, a.max_abs());
    let mut singular = None;

    for k in 0..n {
        let (mut p, mut best) = (k, lu[k * n + k].abs());
        for i in k + 1..n {
            let v = lu[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tiny {
            singular.get_or_insert(k);
            continue;
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let f = lu[i * n + k] / pivot;
            if f == 0.0 {
                continue;
            }
            lu[i * n + k] = f;
            for j in k + 1..n {
                lu[i * n + j] -= f * lu[k * n + j];
            }
        }
    }
    LuFactor { n, lu, perm, singular }
}

fn pivot_threshold(n: usize, scale: f64) -> f64 {
    (n.max(1) as f64) * f64::EPSILON * scale.max(f64::MIN_POSITIVE)
}

impl LuFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Zero-based index of the first step that found no usable pivot.
    pub fn singular_at(&self) -> Option<usize> {
        self.singular
    }

    pub fn is_singular(&self) -> bool {
        self.singular.is_some()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Unit lower-triangular factor.
    pub fn l(&self) -> DenseMatrix {
        let n = self.n;
        let mut l = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..i {
                l[(i, j)] = self.lu[i * n + j];
            }
        }
        l
    }

    pub fn u(&self) -> DenseMatrix {
        let n = self.n;
        let mut u = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                u[(i, j)] = self.lu[i * n + j];
            }
        }
        u
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        if let Some(pivot) = self.singular {
            return Err(Error::Singular { pivot });
        }
        let n = self.n;
        if b.len() != n {
            return Err(Error::Structural(format!(
                "rhs length {} does not match factor dimension {n}",
                b.len()
            )));
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&y[i + 1..]).map(|(u, v)| u * v).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&y);
        Ok(())
    }
}

/// Free-function form of [`LuFactor::solve`].
pub fn solve(f: &LuFactor, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// explicit zeros kept out.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut t: Vec<(usize, usize, f64)> = triplets.to_vec();
        t.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut counts = vec![0usize; rows];
        for (r, c, v) in t {
            assert!(r < rows && c < cols, "triplet ({r},{c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                counts[r] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] = row_ptr[r] + counts[r];
        }
        let mut m = Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        let mut ptr = vec![0usize; self.rows + 1];
        let mut ci = Vec::with_capacity(self.col_idx.len());
        let mut vs = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != 0.0 {
                    ci.push(self.col_idx[k]);
                    vs.push(self.values[k]);
                }
            }
            ptr[r + 1] = ci.len();
        }
        self.row_ptr = ptr;
        self.col_idx = ci;
        self.values = vs;
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                d[(r, c)] += v;
            }
        }
        d
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        spmv(self, x)
    }
}

/// `y = A·x`.
pub fn spmv(a: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), a.cols, "spmv dimension mismatch");
    (0..a.rows).map(|r| a.row(r).map(|(c, v)| v * x[c]).sum()).collect()
}

/// Right-looking sparse LU with threshold partial pivoting.
///
/// Columns are eliminated in natural order; within a column the pivot is the
/// sparsest row whose magnitude is within a factor of ten of the largest
/// candidate. Adequate for the near-banded matrices produced by pipeline
/// grids with a small nodal border.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    perm: Vec<usize>,
    l_ops: Vec<Vec<(usize, f64)>>,
    u_rows: Vec<Vec<(usize, f64)>>,
}

impl SparseLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Structural(format!(
                "sparse LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|r| a.row(r).collect()).collect();
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &(c, _) in row {
                col_rows[c].push(r);
            }
        }
        let scale = a.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tiny = pivot_threshold(n, scale);
        let mut active = vec![true; n];
        let mut perm = Vec::with_capacity(n);
        let mut l_ops = Vec::with_capacity(n);
        let mut u_rows = Vec::with_capacity(n);
        let mut scratch: Vec<(usize, f64)> = Vec::new();

        for k in 0..n {
            let mut cands: Vec<(usize, f64)> = Vec::new();
            let mut seen = std::mem::take(&mut col_rows[k]);
            seen.sort_unstable();
            seen.dedup();
            for &r in &seen {
                if !active[r] {
                    continue;
                }
                if let Some(v) = lead_value(&rows[r], k) {
                    if v != 0.0 {
                        cands.push((r, v));
                    }
                }
            }
            let max = cands.iter().fold(0.0_f64, |m, &(_, v)| m.max(v.abs()));
            if max <= tiny {
                return Err(Error::Singular { pivot: k });
            }
            let (p, pv) = cands
                .iter()
                .filter(|(_, v)| v.abs() >= 0.1 * max)
                .min_by(|a, b| {
                    rows[a.0]
                        .len()
                        .cmp(&rows[b.0].len())
                        .then(b.1.abs().total_cmp(&a.1.abs()))
                })
                .copied()
                .unwrap();
            active[p] = false;
            let prow = std::mem::take(&mut rows[p]);
            let mut ops = Vec::new();
            for &(r, v) in &cands {
                if r == p {
                    continue;
                }
                let mult = v / pv;
                ops.push((r, mult));
                scratch.clear();
                merge_axpy(&rows[r], &prow, -mult, k, &mut scratch);
                for &(c, _) in &scratch {
                    if rows[r].binary_search_by_key(&c, |e| e.0).is_err() {
                        col_rows[c].push(r);
                    }
                }
                std::mem::swap(&mut rows[r], &mut scratch);
            }
            perm.push(p);
            l_ops.push(ops);
            u_rows.push(prow.into_iter().filter(|&(c, _)| c >= k).collect());
        }
        Ok(Self { n, perm, l_ops, u_rows })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::Structural(format!(
                "rhs length {} does not match factor dimension {}",
                b.len(),
                self.n
            )));
        }
        let mut y = b.to_vec();
        for (k, ops) in self.l_ops.iter().enumerate() {
            let yp = y[self.perm[k]];
            if yp != 0.0 {
                for &(r, m) in ops {
                    y[r] -= m * yp;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for k in (0..self.n).rev() {
            let row = &self.u_rows[k];
            let mut s = y[self.perm[k]];
            let mut diag = 0.0;
            for &(c, v) in row {
                if c == k {
                    diag = v;
                } else {
                    s -= v * x[c];
                }
            }
            x[k] = s / diag;
        }
        Ok(x)
    }
}

fn lead_value(row: &[(usize, f64)], k: usize) -> Option<f64> {
    row.binary_search_by_key(&k, |e| e.0).ok().map(|i| row[i].1)
}

/// `out = a + alpha·b` restricted to columns `> k`, both inputs sorted.
fn merge_axpy(a: &[(usize, f64)], b: &[(usize, f64)], alpha: f64, k: usize, out: &mut Vec<(usize, f64)>) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && a[i].0 <= k {
        i += 1;
    }
    while j < b.len() && b[j].0 <= k {
        j += 1;
    }
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |e| e.0);
        let cb = b.get(j).map_or(usize::MAX, |e| e.0);
        if ca == cb {
            out.push((ca, a[i].1 + alpha * b[j].1));
            i += 1;
            j += 1;
        } else if ca < cb {
            out.push(a[i]);
            i += 1;
        } else {
            out.push((cb, alpha * b[j].1));
            j += 1;
        }
    }
}

/// Factorization that picks dense or sparse storage by dimension.
#[derive(Debug, Clone)]
pub enum Factor {
    Dense(LuFactor),
    Sparse(SparseLu),
}

/// Dimension above which [`Factor::new`] switches to sparse storage.
pub const DENSE_LIMIT: usize = 2000;

impl Factor {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.rows() <= DENSE_LIMIT {
            let f = lu_factor(&a.to_dense());
            if let Some(pivot) = f.singular_at() {
                return Err(Error::Singular { pivot });
            }
            Ok(Factor::Dense(f))
        } else {
            Ok(Factor::Sparse(SparseLu::factor(a)?))
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Factor::Dense(f) => f.solve(b),
            Factor::Sparse(f) => f.solve(b),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Factor::Dense(f) => f.dim(),
            Factor::Sparse(f) => f.dim(),
        }
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.gen_range(-1.0..1.0);
            }
            // diagonal shift keeps the condition number moderate
            a[(i, i)] += n as f64 * 0.5;
        }
        a
    }

    #[test]
    fn identity_factor_solves_trivially() {
        let f = lu_factor(&DenseMatrix::identity(4));
        assert!(!f.is_singular());
        let b = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(f.solve(&b).unwrap(), b.to_vec());
    }

    #[test]
    fn permutation_needs_pivoting() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let f = lu_factor(&a);
        assert_eq!(f.solve(&[1.0, 2.0]).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn rank_one_is_flagged_at_second_pivot() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let f = lu_factor(&a);
        assert_eq!(f.singular_at(), Some(1));
        assert!(matches!(f.solve(&[1.0, 1.0]), Err(Error::Singular { pivot: 1 })));
    }

    #[test]
    fn diagonal_solve() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        assert_eq!(lu_factor(&a).solve(&[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn random_50_recovers_known_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 50);
        let x: Vec<f64> = (0..50).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let b = a.mul_vec(&x);
        let got = lu_factor(&a).solve(&b).unwrap();
        let err = got.iter().zip(&x).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10 * norm_inf(&x), "err {err}");
    }

    #[test]
    fn factor_reuse_is_bitwise_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 20);
        let f = lu_factor(&a);
        for _ in 0..100 {
            let b: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let once = lu_factor(&a).solve(&b).unwrap();
            let reused = f.solve(&b).unwrap();
            assert_eq!(once, reused);
        }
    }

    #[test]
    fn reconstruction_pa_equals_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &n in &[1usize, 5, 37, 120, 200] {
            let a = DenseMatrix::from_rows(
                &(0..n)
                    .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect::<Vec<Vec<f64>>>(),
            );
            let f = lu_factor(&a);
            let (l, u) = (f.l(), f.u());
            let mut worst = 0.0_f64;
            for i in 0..n {
                let pr = f.permutation()[i];
                for j in 0..n {
                    let lu: f64 = (0..n).map(|k| l[(i, k)] * u[(k, j)]).sum();
                    worst = worst.max((a[(pr, j)] - lu).abs());
                }
            }
            assert!(
                worst <= 1e-12 * a.max_abs() * (n as f64).max(1.0).sqrt().max(1.0),
                "n={n} worst={worst}"
            );
        }
    }

    #[test]
    fn spmv_cases() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(spmv(&SparseMatrix::identity(3), &x), x.to_vec());
        let z = SparseMatrix::from_triplets(3, 3, &[]);
        assert_eq!(spmv(&z, &x), vec![0.0; 3]);
        // [[2,0,1],[0,0,0],[0,-1,4]]
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (0, 2, 1.0), (2, 1, -1.0), (2, 2, 4.0)]);
        assert_eq!(a.nnz(), 4);
        assert_eq!(spmv(&a, &x), vec![5.0, 0.0, 10.0]);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.5), (1, 1, 1.0), (1, 0, 0.0)]);
        assert_eq!(a.to_dense(), DenseMatrix::from_rows(&[vec![3.5, 0.0], vec![0.0, 1.0]]));
    }

    #[test]
    fn sparse_lu_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 80;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
            if i + 1 < n {
                t.push((i, i + 1, rng.gen_range(-1.0..1.0)));
                t.push((i + 1, i, rng.gen_range(-1.0..1.0)));
            }
            t.push((i, n - 1, rng.gen_range(-0.5..0.5)));
            t.push((n - 1, i, rng.gen_range(-0.5..0.5)));
        }
        // a zero diagonal forces a row exchange
        t.push((
            3,
            3,
            -t.iter().filter(|e| e.0 == 3 && e.1 == 3).map(|e| e.2).sum::<f64>(),
        ));
        let a = SparseMatrix::from_triplets(n, n, &t);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xs = SparseLu::factor(&a).unwrap().solve(&b).unwrap();
        let xd = lu_factor(&a.to_dense()).solve(&b).unwrap();
        for (s, d) in xs.iter().zip(&xd) {
            assert!((s - d).abs() < 1e-10 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn sparse_lu_reports_singular_column() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 0, 1.0), (2, 2, 1.0)]);
        assert!(matches!(SparseLu::factor(&a), Err(Error::Singular { pivot: 1 })));
    }
}
