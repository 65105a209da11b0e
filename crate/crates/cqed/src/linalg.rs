//! Complex linear-algebra kernels: CSR sparse matrices, a dense Pade matrix
//! exponential, and a Jacobi eigensolver for Hermitian matrices.
//!
//! Operators on truncated Fock spaces are extremely sparse (a handful of
//! entries per row), while the spaces themselves can run to ~1e5 dimensions
//! for deep squeezing, so the sparse type is the workhorse; the dense
//! routines serve small systems, projected subproblems, and test oracles.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;

use crate::error::{CqedError, Result};

/// Square complex matrix in compressed-sparse-row form.
///
/// Entries within a row are kept sorted by column; duplicate triplets are
/// summed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        SparseMatrix {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseMatrix {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: vec![C64::new(1.0, 0.0); dim],
        }
    }

    /// Build from (row, col, value) triplets; duplicates are summed, exact
    /// zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        for &(r, c, _) in &triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dim {dim}");
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut it = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(nr, nc, nv)) = it.peek() {
                if nr == r && nc == c {
                    v += nv;
                    it.next();
                } else {
                    break;
                }
            }
            if v != C64::new(0.0, 0.0) {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] = cols.len();
            }
        }
        // forward-fill rows with no entries
        for r in 0..dim {
            if row_ptr[r + 1] < row_ptr[r] {
                row_ptr[r + 1] = row_ptr[r];
            }
        }
        SparseMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.cols[k] == c {
                return self.vals[k];
            }
        }
        C64::new(0.0, 0.0)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= factor;
        }
        out
    }

    pub fn add(&self, other: &SparseMatrix) -> Self {
        Self::linear_combination(
            self.dim,
            &[(C64::new(1.0, 0.0), self), (C64::new(1.0, 0.0), other)],
        )
    }

    /// Sum of scaled sparse matrices, merged row by row.
    pub fn linear_combination(dim: usize, terms: &[(C64, &SparseMatrix)]) -> Self {
        for (_, m) in terms {
            assert_eq!(m.dim, dim, "linear combination over mixed dimensions");
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut scratch: Vec<C64> = vec![C64::new(0.0, 0.0); dim];
        let mut marked = vec![false; dim];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..dim {
            touched.clear();
            for (coeff, m) in terms {
                for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                    let c = m.cols[k];
                    if !marked[c] {
                        marked[c] = true;
                        touched.push(c);
                    }
                    scratch[c] += coeff * m.vals[k];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if scratch[c] != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(scratch[c]);
                }
                scratch[c] = C64::new(0.0, 0.0);
                marked[c] = false;
            }
            row_ptr[r + 1] = cols.len();
        }
        SparseMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Sparse-sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.dim, other.dim, "matmul over mixed dimensions");
        let dim = self.dim;
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut scratch: Vec<C64> = vec![C64::new(0.0, 0.0); dim];
        let mut marked = vec![false; dim];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..dim {
            touched.clear();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.vals[k];
                let mid = self.cols[k];
                for j in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.cols[j];
                    if !marked[c] {
                        marked[c] = true;
                        touched.push(c);
                    }
                    scratch[c] += a * other.vals[j];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if scratch[c] != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(scratch[c]);
                }
                scratch[c] = C64::new(0.0, 0.0);
                marked[c] = false;
            }
            row_ptr[r + 1] = cols.len();
        }
        SparseMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let dim = self.dim;
        let mut counts = vec![0usize; dim + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![C64::new(0.0, 0.0); self.nnz()];
        let mut next = counts.clone();
        for r in 0..dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                let slot = next[c];
                cols[slot] = r;
                vals[slot] = self.vals[k].conj();
                next[c] += 1;
            }
        }
        SparseMatrix {
            dim,
            row_ptr: counts,
            cols,
            vals,
        }
    }

    pub fn matvec(&self, x: ArrayView1<C64>) -> Array1<C64> {
        let mut y = Array1::zeros(self.dim);
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: ArrayView1<C64>, y: &mut Array1<C64>) {
        assert_eq!(x.len(), self.dim, "matvec length mismatch");
        assert_eq!(y.len(), self.dim, "matvec output length mismatch");
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    /// `y += factor * (self * x)`, for accumulating Hamiltonian terms.
    pub fn matvec_acc(&self, x: ArrayView1<C64>, factor: C64, y: &mut Array1<C64>) {
        assert_eq!(x.len(), self.dim, "matvec length mismatch");
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] += factor * acc;
        }
    }

    /// Dense product `self * rho`.
    pub fn mul_dense(&self, rho: &Array2<C64>) -> Array2<C64> {
        assert_eq!(rho.nrows(), self.dim, "mul_dense shape mismatch");
        let n = rho.ncols();
        let mut out = Array2::zeros((self.dim, n));
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.vals[k];
                let c = self.cols[k];
                for j in 0..n {
                    out[(r, j)] += a * rho[(c, j)];
                }
            }
        }
        out
    }

    /// Dense product `rho * self`.
    pub fn mul_dense_left(&self, rho: &Array2<C64>) -> Array2<C64> {
        assert_eq!(rho.ncols(), self.dim, "mul_dense_left shape mismatch");
        let n = rho.nrows();
        let mut out = Array2::zeros((n, self.dim));
        for k_row in 0..self.dim {
            for k in self.row_ptr[k_row]..self.row_ptr[k_row + 1] {
                let a = self.vals[k];
                let c = self.cols[k];
                for i in 0..n {
                    out[(i, c)] += rho[(i, k_row)] * a;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[(r, self.cols[k])] += self.vals[k];
            }
        }
        out
    }

    pub fn from_dense(m: &Array2<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "from_dense wants a square matrix");
        let dim = m.nrows();
        let mut triplets = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                if m[(r, c)] != C64::new(0.0, 0.0) {
                    triplets.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(dim, triplets)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `self - self^dagger`, as an absolute deviation.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = SparseMatrix::linear_combination(
            self.dim,
            &[
                (C64::new(1.0, 0.0), self),
                (C64::new(-1.0, 0.0), &self.dagger()),
            ],
        );
        diff.max_abs()
    }

    /// Infinity norm (max absolute row sum); cheap upper bound on the
    /// spectral norm, used to pick propagation substeps.
    pub fn norm_inf(&self) -> f64 {
        let mut best: f64 = 0.0;
        for r in 0..self.dim {
            let s: f64 = (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(|k| self.vals[k].norm())
                .sum();
            best = best.max(s);
        }
        best
    }
}

/// Plain triple-loop dense product; sized for test oracles and projected
/// subproblems, not bulk numerics.
pub fn matmul_dense(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (n, m) = (a.nrows(), a.ncols());
    assert_eq!(m, b.nrows(), "matmul_dense shape mismatch");
    let p = b.ncols();
    let mut out = Array2::zeros((n, p));
    for i in 0..n {
        for k in 0..m {
            let aik = a[(i, k)];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..p {
                out[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    out
}

/// Kronecker product of dense matrices, row-major block layout.
pub fn kron_dense(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

fn one_norm(a: &Array2<C64>) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..a.ncols() {
        let s: f64 = (0..a.nrows()).map(|i| a[(i, j)].norm()).sum();
        best = best.max(s);
    }
    best
}

/// Solve `a * x = b` for dense complex `a` (consumed) by LU with partial
/// pivoting.
fn solve_dense(mut a: Array2<C64>, mut b: Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    let ncols = b.ncols();
    for col in 0..n {
        let mut piv = col;
        let mut best = a[(col, col)].norm();
        for r in (col + 1)..n {
            let v = a[(r, col)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Err(CqedError::SingularParameter(
                "singular matrix in dense solve".into(),
            ));
        }
        if piv != col {
            for j in 0..n {
                a.swap((col, j), (piv, j));
            }
            for j in 0..ncols {
                b.swap((col, j), (piv, j));
            }
        }
        let d = a[(col, col)];
        for r in (col + 1)..n {
            let f = a[(r, col)] / d;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            a[(r, col)] = C64::new(0.0, 0.0);
            for j in (col + 1)..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
            for j in 0..ncols {
                let v = b[(col, j)];
                b[(r, j)] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = a[(col, col)];
        for j in 0..ncols {
            let mut acc = b[(col, j)];
            for k in (col + 1)..n {
                acc -= a[(col, k)] * b[(k, j)];
            }
            b[(col, j)] = acc / d;
        }
    }
    Ok(b)
}

/// Dense matrix exponential by degree-13 Pade approximation with scaling and
/// squaring.
pub fn expm_dense(a: &Array2<C64>) -> Result<Array2<C64>> {
    const THETA_13: f64 = 5.371_920_351_148_152;
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "expm_dense wants a square matrix");
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let a = a.mapv(|v| v / C64::new(2f64.powi(s as i32), 0.0));
    let ident: Array2<C64> = Array2::eye(n);
    let a2 = matmul_dense(&a, &a);
    let a4 = matmul_dense(&a2, &a2);
    let a6 = matmul_dense(&a2, &a4);
    let u_inner = &a6.mapv(|v| v * B[13]) + &a4.mapv(|v| v * B[11]) + &a2.mapv(|v| v * B[9]);
    let u_poly = matmul_dense(&a6, &u_inner)
        + a6.mapv(|v| v * B[7])
        + a4.mapv(|v| v * B[5])
        + a2.mapv(|v| v * B[3])
        + ident.mapv(|v| v * B[1]);
    let u = matmul_dense(&a, &u_poly);
    let v_inner = &a6.mapv(|v| v * B[12]) + &a4.mapv(|v| v * B[10]) + &a2.mapv(|v| v * B[8]);
    let v = matmul_dense(&a6, &v_inner)
        + a6.mapv(|v| v * B[6])
        + a4.mapv(|v| v * B[4])
        + a2.mapv(|v| v * B[2])
        + ident.mapv(|v| v * B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve_dense(q, p)?;
    for _ in 0..s {
        r = matmul_dense(&r, &r);
    }
    Ok(r)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix,
/// by cyclic complex Jacobi rotations.
pub fn eigh_hermitian(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let n = m.nrows();
    assert_eq!(m.ncols(), n, "eigh wants a square matrix");
    let mut a = m.clone();
    let mut v: Array2<C64> = Array2::eye(n);
    let scale = one_norm(&a).max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;
    let max_sweeps = 100;
    for _sweep in 0..max_sweeps {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= tol {
            let mut pairs: Vec<(f64, usize)> =
                (0..n).map(|i| (a[(i, i)].re, i)).collect();
            pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let mut evals = Array1::zeros(n);
            let mut evecs = Array2::zeros((n, n));
            for (slot, &(lambda, i)) in pairs.iter().enumerate() {
                evals[slot] = lambda;
                for r in 0..n {
                    evecs[(r, slot)] = v[(r, i)];
                }
            }
            return Ok((evals, evecs));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = a[(p, q)];
                if beta.norm() <= tol * 1e-2 {
                    continue;
                }
                let phi = beta.arg();
                let phase = C64::from_polar(1.0, -phi);
                let alpha = a[(p, p)].re;
                let gamma = a[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * beta.norm());
                // small-magnitude root of t^2 - 2 tau t - 1 = 0
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = [[c, -s], [s*e^{-i phi}, c*e^{-i phi}]] on (p, q)
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(-s, 0.0);
                let jqp = phase * s;
                let jqq = phase * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }
    let mut off: f64 = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            off = off.max(a[(p, q)].norm());
        }
    }
    Err(CqedError::Convergence {
        achieved: off / scale,
        requested: 1e-14,
        context: "jacobi eigensolver".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_dense(n: usize, seed: u64) -> Array2<C64> {
        // small deterministic LCG so the oracle inputs are reproducible
        let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
        let mut next = move || {
            state = state
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        Array2::from_shape_fn((n, n), |_| c(next(), next()))
    }

    #[test]
    fn triplets_merge_duplicates_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(
            3,
            vec![
                (0, 1, c(1.0, 0.0)),
                (0, 1, c(2.0, -1.0)),
                (2, 2, c(0.0, 0.0)),
                (1, 0, c(0.5, 0.5)),
            ],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), c(3.0, -1.0));
        assert_eq!(m.get(1, 0), c(0.5, 0.5));
        assert_eq!(m.get(2, 2), c(0.0, 0.0));
    }

    #[test]
    fn sparse_ops_match_dense() {
        let a_dense = random_dense(12, 7);
        let b_dense = random_dense(12, 13);
        let a = SparseMatrix::from_dense(&a_dense);
        let b = SparseMatrix::from_dense(&b_dense);

        let sum = a.add(&b).to_dense();
        let expected = &a_dense + &b_dense;
        assert!((&sum - &expected).iter().all(|v| v.norm() < 1e-14));

        let prod = a.matmul(&b).to_dense();
        let expected = matmul_dense(&a_dense, &b_dense);
        assert!((&prod - &expected).iter().all(|v| v.norm() < 1e-12));

        let dag = a.dagger().to_dense();
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(dag[(i, j)], a_dense[(j, i)].conj());
            }
        }

        let x = Array1::from_shape_fn(12, |i| c(i as f64 + 0.25, -(i as f64) * 0.5));
        let y = a.matvec(x.view());
        let y_expected = matmul_dense(&a_dense, &x.clone().insert_axis(ndarray::Axis(1)));
        for i in 0..12 {
            assert!((y[i] - y_expected[(i, 0)]).norm() < 1e-12);
        }
    }

    #[test]
    fn dense_products_from_sparse_match() {
        let a_dense = random_dense(9, 3);
        let rho = random_dense(9, 4);
        let a = SparseMatrix::from_dense(&a_dense);
        let left = a.mul_dense(&rho);
        let right = a.mul_dense_left(&rho);
        let left_expected = matmul_dense(&a_dense, &rho);
        let right_expected = matmul_dense(&rho, &a_dense);
        assert!((&left - &left_expected).iter().all(|v| v.norm() < 1e-12));
        assert!((&right - &right_expected).iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn hermiticity_defect_detects_asymmetry() {
        let h = SparseMatrix::from_triplets(
            2,
            vec![(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, 1.0))],
        );
        assert!(h.hermiticity_defect() > 1.9);
        let h = SparseMatrix::from_triplets(
            2,
            vec![(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))],
        );
        assert!(h.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn expm_of_diagonal_is_elementwise_exp() {
        let a = array![
            [c(0.3, -0.7), c(0.0, 0.0)],
            [c(0.0, 0.0), c(-1.2, 2.0)]
        ];
        let e = expm_dense(&a).unwrap();
        assert!((e[(0, 0)] - a[(0, 0)].exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - a[(1, 1)].exp()).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_of_pauli_x_rotation() {
        // exp(-i theta sigma_x) = cos(theta) I - i sin(theta) sigma_x
        let theta = 0.83;
        let a = array![
            [c(0.0, 0.0), c(0.0, -theta)],
            [c(0.0, -theta), c(0.0, 0.0)]
        ];
        let e = expm_dense(&a).unwrap();
        assert!((e[(0, 0)] - c(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - c(0.0, -theta.sin())).norm() < 1e-14);
    }

    #[test]
    fn expm_inverse_pairs_to_identity() {
        let a = random_dense(14, 21).mapv(|v| v * 1.7);
        let e = expm_dense(&a).unwrap();
        let einv = expm_dense(&a.mapv(|v| -v)).unwrap();
        let prod = matmul_dense(&e, &einv);
        for i in 0..14 {
            for j in 0..14 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (prod[(i, j)] - c(expect, 0.0)).norm() < 1e-11,
                    "({i},{j}) = {:?}",
                    prod[(i, j)]
                );
            }
        }
    }

    #[test]
    fn expm_of_hermitian_times_minus_i_is_unitary() {
        let g = random_dense(11, 5);
        let h = (&g + &g.t().mapv(|v: C64| v.conj())).mapv(|v| v * 2.0);
        let u = expm_dense(&h.mapv(|v| v * c(0.0, -1.0))).unwrap();
        let udag_u = matmul_dense(&u.t().mapv(|v: C64| v.conj()).to_owned(), &u);
        for i in 0..11 {
            for j in 0..11 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((udag_u[(i, j)] - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigh_two_by_two_known() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let m = array![[c(1.0, 0.0), c(0.0, 1.0)], [c(0.0, -1.0), c(1.0, 0.0)]];
        let (vals, vecs) = eigh_hermitian(&m).unwrap();
        assert!((vals[0] - 0.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        // residual check A v = lambda v
        for k in 0..2 {
            for i in 0..2 {
                let av: C64 = (0..2).map(|j| m[(i, j)] * vecs[(j, k)]).sum();
                assert!((av - vecs[(i, k)] * vals[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigh_random_hermitian_residuals() {
        let g = random_dense(16, 9);
        let h = &g + &g.t().mapv(|v: C64| v.conj());
        let (vals, vecs) = eigh_hermitian(&h).unwrap();
        let trace: f64 = (0..16).map(|i| h[(i, i)].re).sum();
        let sum: f64 = vals.iter().sum();
        assert!((trace - sum).abs() < 1e-10);
        for k in 0..16 {
            for i in 0..16 {
                let av: C64 = (0..16).map(|j| h[(i, j)] * vecs[(j, k)]).sum();
                assert!(
                    (av - vecs[(i, k)] * vals[k]).norm() < 1e-9,
                    "residual too large at ({i},{k})"
                );
            }
        }
        // eigenvectors orthonormal
        for k in 0..16 {
            for l in 0..16 {
                let dot: C64 = (0..16).map(|i| vecs[(i, k)].conj() * vecs[(i, l)]).sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((dot - c(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn solve_rejects_singular() {
        let a = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]];
        let b = Array2::eye(2);
        assert!(solve_dense(a, b).is_err());
    }
}
