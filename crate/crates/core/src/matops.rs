//! Dense complex-matrix algebra over labeled multipartite systems.
//!
//! Everything downstream (states, channels, games, the comparison pipeline)
//! is built on the handful of primitives in this module: Kronecker products,
//! factor permutation, partial traces, and a Hermitian eigensolver. Matrices
//! are stored row-major with the left tensor factor varying slowest; all
//! other modules inherit this convention.

use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

/// Relative tolerance for the Hermitian-validation check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Off-diagonal threshold of the Jacobi sweep, relative to the matrix scale.
const JACOBI_TOL: f64 = 1e-14;

/// Maximum number of Jacobi sweeps before the eigensolver gives up.
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error)]
pub enum MatError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix is not hermitian: deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("unknown system label `{0}`")]
    UnknownLabel(String),
    #[error("invalid system layout: {0}")]
    BadLayout(String),
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::DimMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(MatError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from rows of `[re, im]` pairs.
    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Self, MatError> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != nc) {
            return Err(MatError::DimMismatch("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)))
            .collect();
        Self::new(nr, nc, data)
    }

    /// Column vector |i> in dimension `dim`.
    pub fn basis_column(dim: usize, index: usize) -> Self {
        let mut m = Self::zeros(dim, 1);
        m[(index, 0)] = Complex64::new(1.0, 0.0);
        m
    }

    /// Rank-1 projector |i><j| in dimension `dim`.
    pub fn unit_matrix(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conjugate(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-abs deviation from the conjugate transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                let d = (self[(r, c)] - self[(c, r)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl std::ops::Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Square matrix validated to be (numerically) equal to its conjugate transpose.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    mat: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(mat: ComplexMatrix) -> Result<Self, MatError> {
        if !mat.is_square() {
            return Err(MatError::DimMismatch(format!(
                "hermitian operator must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        let tolerance = HERMITIAN_TOL * (1.0 + mat.max_abs());
        let deviation = mat.hermiticity_defect();
        if deviation > tolerance {
            return Err(MatError::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(Self { mat })
    }

    /// Constructs from the Hermitian part (m + m†)/2; never fails on square input.
    pub fn hermitian_part(mat: &ComplexMatrix) -> Self {
        assert!(mat.is_square());
        let adj = mat.adjoint();
        let sym = (mat + &adj).scale_re(0.5);
        Self { mat: sym }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            mat: self.mat.scale_re(factor),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    /// Real Frobenius inner product tr(A B).
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                acc += self.mat[(r, c)].conj() * other.mat[(r, c)];
            }
        }
        acc.re
    }
}

/// Ordered labels and dimensions of the tensor factors a matrix lives on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemLayout {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl SystemLayout {
    pub fn new(factors: &[(&str, usize)]) -> Result<Self, MatError> {
        let labels: Vec<String> = factors.iter().map(|(l, _)| l.to_string()).collect();
        let dims: Vec<usize> = factors.iter().map(|&(_, d)| d).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[i + 1..].contains(l) {
                return Err(MatError::BadLayout(format!("duplicate label `{l}`")));
            }
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(MatError::BadLayout("zero-dimensional factor".into()));
        }
        Ok(Self { labels, dims })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn position(&self, label: &str) -> Result<usize, MatError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| MatError::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize, MatError> {
        Ok(self.dims[self.position(label)?])
    }

    pub fn permuted(&self, new_order: &[&str]) -> Result<Self, MatError> {
        if new_order.len() != self.len() {
            return Err(MatError::BadLayout(format!(
                "permutation lists {} labels, layout has {}",
                new_order.len(),
                self.len()
            )));
        }
        let mut factors = Vec::with_capacity(new_order.len());
        for &l in new_order {
            factors.push((l, self.dim_of(l)?));
        }
        SystemLayout::new(&factors)
    }

    /// Sub-layout of `keep` labels, preserving this layout's factor order.
    pub fn subset(&self, keep: &[&str]) -> Result<Self, MatError> {
        for &l in keep {
            self.position(l)?;
        }
        let factors: Vec<(&str, usize)> = self
            .labels
            .iter()
            .zip(&self.dims)
            .filter(|(l, _)| keep.contains(&l.as_str()))
            .map(|(l, &d)| (l.as_str(), d))
            .collect();
        SystemLayout::new(&factors)
    }

    /// A copy with the same dims under new labels.
    pub fn relabeled(&self, new_labels: &[&str]) -> Result<Self, MatError> {
        if new_labels.len() != self.len() {
            return Err(MatError::BadLayout("label count mismatch".into()));
        }
        let factors: Vec<(&str, usize)> = new_labels
            .iter()
            .zip(&self.dims)
            .map(|(&l, &d)| (l, d))
            .collect();
        SystemLayout::new(&factors)
    }

    /// Row-major strides (left factor slowest).
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.len()];
        for i in (0..self.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }
}

/// Kronecker product with the left factor varying slowest.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ra in 0..a.rows() {
        for ca in 0..a.cols() {
            let f = a[(ra, ca)];
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for rb in 0..b.rows() {
                for cb in 0..b.cols() {
                    out[(ra * b.rows() + rb, ca * b.cols() + cb)] = f * b[(rb, cb)];
                }
            }
        }
    }
    out
}

/// Conjugation by the permutation unitary that reorders the tensor factors
/// of `layout` into `new_order`. Entry moves only, so applying a permutation
/// and then its inverse restores the input exactly.
pub fn permute_systems(
    m: &ComplexMatrix,
    layout: &SystemLayout,
    new_order: &[&str],
) -> Result<(ComplexMatrix, SystemLayout), MatError> {
    if m.rows() != layout.total_dim() || m.cols() != layout.total_dim() {
        return Err(MatError::DimMismatch(format!(
            "matrix is {}x{}, layout dimension {}",
            m.rows(),
            m.cols(),
            layout.total_dim()
        )));
    }
    let new_layout = layout.permuted(new_order)?;
    let k = layout.len();
    // old factor position of each new factor
    let mut source = vec![0usize; k];
    for (newpos, &l) in new_order.iter().enumerate() {
        source[newpos] = layout.position(l)?;
    }
    let old_strides = layout.strides();
    let new_dims = new_layout.dims().to_vec();
    let d = layout.total_dim();
    // index map: new flat index -> old flat index
    let mut map = vec![0usize; d];
    for (new_flat, entry) in map.iter_mut().enumerate() {
        let mut rem = new_flat;
        let mut old_flat = 0usize;
        for f in 0..k {
            let block: usize = new_dims[f + 1..].iter().product();
            let idx = rem / block;
            rem %= block;
            old_flat += idx * old_strides[source[f]];
        }
        *entry = old_flat;
    }
    let mut out = ComplexMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            out[(r, c)] = m[(map[r], map[c])];
        }
    }
    Ok((out, new_layout))
}

/// Partial trace keeping the `keep` factors (in layout order).
pub fn partial_trace(
    m: &ComplexMatrix,
    layout: &SystemLayout,
    keep: &[&str],
) -> Result<(ComplexMatrix, SystemLayout), MatError> {
    if m.rows() != layout.total_dim() || m.cols() != layout.total_dim() {
        return Err(MatError::DimMismatch(format!(
            "matrix is {}x{}, layout dimension {}",
            m.rows(),
            m.cols(),
            layout.total_dim()
        )));
    }
    if keep.is_empty() {
        return Err(MatError::BadLayout("keep set must be nonempty".into()));
    }
    let kept_layout = layout.subset(keep)?;
    let strides = layout.strides();
    let mut kept_pos = Vec::new();
    let mut traced_pos = Vec::new();
    for (i, l) in layout.labels().iter().enumerate() {
        if keep.contains(&l.as_str()) {
            kept_pos.push(i);
        } else {
            traced_pos.push(i);
        }
    }
    // additive offsets into the full flat index for each kept / traced sub-index
    let offsets = |positions: &[usize]| -> Vec<usize> {
        let dims: Vec<usize> = positions.iter().map(|&p| layout.dims()[p]).collect();
        let total: usize = dims.iter().product::<usize>().max(1);
        let mut out = vec![0usize; total];
        for (flat, entry) in out.iter_mut().enumerate() {
            let mut rem = flat;
            let mut off = 0usize;
            for (j, &p) in positions.iter().enumerate() {
                let block: usize = dims[j + 1..].iter().product();
                let idx = rem / block;
                rem %= block;
                off += idx * strides[p];
            }
            *entry = off;
        }
        out
    };
    let kept_off = offsets(&kept_pos);
    let traced_off = offsets(&traced_pos);
    let dk = kept_off.len();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for (ri, &roff) in kept_off.iter().enumerate() {
        for (ci, &coff) in kept_off.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &t in &traced_off {
                acc += m[(roff + t, coff + t)];
            }
            out[(ri, ci)] = acc;
        }
    }
    Ok((out, kept_layout))
}

/// Eigendecomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct EighDecomposition {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary with eigenvectors as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

impl EighDecomposition {
    /// V diag(f(lambda)) V†.
    pub fn apply_spectral(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            for i in 0..d {
                scaled[(i, j)] *= Complex64::new(fl, 0.0);
            }
        }
        scaled.matmul(&self.vectors.adjoint())
    }
}

/// Cyclic Jacobi eigensolver for a real symmetric matrix (row-major).
/// Returns eigenvalues (descending, ties by original index) and the matching
/// eigenvector columns.
pub(crate) fn eigh_real_symmetric(
    a_in: &[f64],
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>), MatError> {
    assert_eq!(a_in.len(), n * n);
    let mut a = a_in.to_vec();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let thr = JACOBI_TOL * scale;
    if scale > 0.0 {
        let mut converged = false;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a[p * n + q].abs());
                }
            }
            if off <= thr {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= thr {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    // A <- Jᵀ A J with J the (p,q) rotation
                    for i in 0..n {
                        let aip = a[i * n + p];
                        let aiq = a[i * n + q];
                        a[i * n + p] = c * aip - s * aiq;
                        a[i * n + q] = s * aip + c * aiq;
                    }
                    for j in 0..n {
                        let apj = a[p * n + j];
                        let aqj = a[q * n + j];
                        a[p * n + j] = c * apj - s * aqj;
                        a[q * n + j] = s * apj + c * aqj;
                    }
                    for i in 0..n {
                        let vip = v[i * n + p];
                        let viq = v[i * n + q];
                        v[i * n + p] = c * vip - s * viq;
                        v[i * n + q] = s * vip + c * viq;
                    }
                }
            }
        }
        if !converged {
            // final check after the last sweep
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a[p * n + q].abs());
                }
            }
            if off > thr {
                return Err(MatError::NoConvergence(JACOBI_MAX_SWEEPS));
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0f64; n * n];
    for (newj, &oldj) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + newj] = v[i * n + oldj];
        }
    }
    Ok((values, vectors))
}

/// Hermitian eigendecomposition via cyclic Jacobi on the 2d x 2d
/// real-symmetric embedding [[Re H, -Im H], [Im H, Re H]].
pub fn eigh(h: &HermitianOperator) -> Result<EighDecomposition, MatError> {
    let d = h.dim();
    let m = h.matrix();
    let n = 2 * d;
    let mut emb = vec![0.0f64; n * n];
    for r in 0..d {
        for c in 0..d {
            // symmetrize so the embedding is exactly symmetric
            let z = (m[(r, c)] + m[(c, r)].conj()).scale(0.5);
            emb[r * n + c] = z.re;
            emb[r * n + (d + c)] = -z.im;
            emb[(d + r) * n + c] = z.im;
            emb[(d + r) * n + (d + c)] = z.re;
        }
    }
    let (real_vals, real_vecs) = eigh_real_symmetric(&emb, n)?;

    // Each eigenvalue of H appears twice in the embedding: [x; y] and
    // [-y; x] both map to the same complex eigenvector x + iy up to phase.
    // Deduplicate by Gram-Schmidt over the complex candidates.
    let mut values = Vec::with_capacity(d);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for (k, &lam) in real_vals.iter().enumerate() {
        if basis.len() == d {
            break;
        }
        let mut cand: Vec<Complex64> = (0..d)
            .map(|i| Complex64::new(real_vecs[i * n + k], real_vecs[(d + i) * n + k]))
            .collect();
        for q in &basis {
            let ip: Complex64 = q.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
            for (ci, qi) in cand.iter_mut().zip(q) {
                *ci -= ip * qi;
            }
        }
        let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for z in cand.iter_mut() {
                *z /= Complex64::new(norm, 0.0);
            }
            // normalizing a small residual amplifies roundoff; a second
            // orthogonalization pass scrubs it back to machine precision
            for q in &basis {
                let ip: Complex64 = q.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
                for (ci, qi) in cand.iter_mut().zip(q) {
                    *ci -= ip * qi;
                }
            }
            let norm2 = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in cand.iter_mut() {
                *z /= Complex64::new(norm2, 0.0);
            }
            basis.push(cand);
            values.push(lam);
        }
    }
    if basis.len() != d {
        return Err(MatError::NoConvergence(JACOBI_MAX_SWEEPS));
    }
    let mut vectors = ComplexMatrix::zeros(d, d);
    for (j, q) in basis.iter().enumerate() {
        for i in 0..d {
            vectors[(i, j)] = q[i];
        }
    }
    Ok(EighDecomposition { values, vectors })
}

/// Spectral calculus: V diag(f(lambda)) V†.
pub fn hermitian_function(
    h: &HermitianOperator,
    f: impl Fn(f64) -> f64,
) -> Result<HermitianOperator, MatError> {
    let dec = eigh(h)?;
    Ok(HermitianOperator::hermitian_part(&dec.apply_spectral(f)))
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(h: &HermitianOperator) -> Result<f64, MatError> {
    Ok(eigh(h)?.values.iter().map(|l| l.abs()).sum())
}

pub fn min_eigenvalue(h: &HermitianOperator) -> Result<f64, MatError> {
    Ok(eigh(h)?.values.last().copied().expect("nonempty spectrum"))
}

pub fn max_eigenvalue(h: &HermitianOperator) -> Result<f64, MatError> {
    Ok(eigh(h)?.values.first().copied().expect("nonempty spectrum"))
}

/// Spectral norm of a Hermitian operator.
pub fn operator_norm(h: &HermitianOperator) -> Result<f64, MatError> {
    Ok(eigh(h)?.values.iter().map(|l| l.abs()).fold(0.0, f64::max))
}

/// Eigenvalue clamp to [lo, hi]; lo = 0, hi = inf is the PSD projection.
pub fn clip_spectrum(
    h: &HermitianOperator,
    lo: f64,
    hi: f64,
) -> Result<HermitianOperator, MatError> {
    hermitian_function(h, |l| l.clamp(lo, hi))
}

/// Projection onto the PSD cone (Frobenius-nearest).
pub fn positive_part(h: &HermitianOperator) -> Result<HermitianOperator, MatError> {
    hermitian_function(h, |l| l.max(0.0))
}

/// Trace-norm distance between two matrices of equal shape, via the Hermitian
/// part of their difference (callers pass operators that are Hermitian up to
/// roundoff).
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, MatError> {
    let diff = a - b;
    trace_norm(&HermitianOperator::hermitian_part(&diff))
}

/// Orthonormal basis of the real vector space of d x d Hermitian matrices
/// under the Frobenius inner product: diagonal units, then symmetric pairs,
/// then antisymmetric (phase) pairs.
pub(crate) fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(ComplexMatrix::unit_matrix(d, i, i));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut s = ComplexMatrix::zeros(d, d);
            s[(i, j)] = Complex64::new(inv_sqrt2, 0.0);
            s[(j, i)] = Complex64::new(inv_sqrt2, 0.0);
            out.push(s);
            let mut a = ComplexMatrix::zeros(d, d);
            a[(i, j)] = Complex64::new(0.0, inv_sqrt2);
            a[(j, i)] = Complex64::new(0.0, -inv_sqrt2);
            out.push(a);
        }
    }
    out
}

/// Frobenius coordinates of a (numerically) Hermitian matrix in the
/// `hermitian_basis` ordering. Inverse of `coords_to_matrix`.
pub(crate) fn matrix_to_coords(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.rows();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let sym = (m[(i, j)].re + m[(j, i)].re) * inv_sqrt2;
            let asym = (m[(i, j)].im - m[(j, i)].im) * inv_sqrt2;
            out.push(sym);
            out.push(asym);
        }
    }
    out
}

pub(crate) fn coords_to_matrix(x: &[f64], d: usize) -> ComplexMatrix {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = ComplexMatrix::zeros(d, d);
    let mut idx = 0;
    for i in 0..d {
        m[(i, i)] = Complex64::new(x[idx], 0.0);
        idx += 1;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let s = x[idx] * inv_sqrt2;
            idx += 1;
            let a = x[idx] * inv_sqrt2;
            idx += 1;
            m[(i, j)] = Complex64::new(s, a);
            m[(j, i)] = Complex64::new(s, -a);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_complex_matrix, random_hermitian, rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma3() -> HermitianOperator {
        HermitianOperator::new(
            ComplexMatrix::new(
                2,
                2,
                vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn sigma1() -> HermitianOperator {
        HermitianOperator::new(
            ComplexMatrix::new(
                2,
                2,
                vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            )
            .unwrap(),
        )
        .unwrap()
    }

    /// The explicit 4x4 singlet matrix, used as a partial-trace oracle.
    fn singlet_matrix() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(1, 1)] = c(0.5, 0.0);
        m[(2, 2)] = c(0.5, 0.0);
        m[(1, 2)] = c(-0.5, 0.0);
        m[(2, 1)] = c(-0.5, 0.0);
        m
    }

    #[test]
    fn tensor_identities() {
        let i2 = ComplexMatrix::identity(2);
        let t = tensor(&i2, &i2);
        assert_eq!(t, ComplexMatrix::identity(4));

        let s3 = sigma3().into_matrix();
        let tt = tensor(&s3, &s3);
        let expected = ComplexMatrix::from_fn(4, 4, |r, c_| {
            if r != c_ {
                c(0.0, 0.0)
            } else {
                c([1.0, -1.0, -1.0, 1.0][r], 0.0)
            }
        });
        assert_eq!(tt, expected);

        let p0 = ComplexMatrix::unit_matrix(2, 0, 0);
        let p1 = ComplexMatrix::unit_matrix(2, 1, 1);
        let t01 = tensor(&p0, &p1);
        assert_eq!(t01, ComplexMatrix::unit_matrix(4, 1, 1));
    }

    #[test]
    fn tensor_associativity_and_trace() {
        let mut r = rng(7);
        for _ in 0..20 {
            let a = random_complex_matrix(&mut r, 2, 2);
            let b = random_complex_matrix(&mut r, 3, 3);
            let cm = random_complex_matrix(&mut r, 2, 2);
            let left = tensor(&tensor(&a, &b), &cm);
            let right = tensor(&a, &tensor(&b, &cm));
            assert!(left.max_abs_diff(&right) <= 1e-14);
            let tab = tensor(&a, &b).trace();
            let prod = a.trace() * b.trace();
            assert!((tab - prod).norm() <= 1e-12 * (1.0 + prod.norm()));
        }
    }

    #[test]
    fn permute_swap_of_product() {
        let a = ComplexMatrix::unit_matrix(2, 0, 0);
        let b = ComplexMatrix::unit_matrix(2, 1, 1);
        let layout = SystemLayout::new(&[("A", 2), ("B", 2)]).unwrap();
        let ab = tensor(&a, &b);
        let (ba, new_layout) = permute_systems(&ab, &layout, &["B", "A"]).unwrap();
        assert_eq!(ba, tensor(&b, &a));
        assert_eq!(new_layout.labels(), &["B".to_string(), "A".to_string()]);

        let (same, _) = permute_systems(&ab, &layout, &["A", "B"]).unwrap();
        assert_eq!(same, ab);
    }

    #[test]
    fn permute_twice_is_identity_exactly() {
        let mut r = rng(11);
        let m = random_complex_matrix(&mut r, 4, 4);
        let layout = SystemLayout::new(&[("A", 2), ("B", 2)]).unwrap();
        let (sw, swl) = permute_systems(&m, &layout, &["B", "A"]).unwrap();
        let (back, _) = permute_systems(&sw, &swl, &["A", "B"]).unwrap();
        assert_eq!(back, m); // bit-exact: entries only move
    }

    #[test]
    fn permute_rejects_bad_labels() {
        let layout = SystemLayout::new(&[("A", 2), ("B", 2)]).unwrap();
        let m = ComplexMatrix::identity(4);
        assert!(permute_systems(&m, &layout, &["A", "C"]).is_err());
        let wrong = ComplexMatrix::identity(3);
        assert!(permute_systems(&wrong, &layout, &["B", "A"]).is_err());
    }

    #[test]
    fn partial_trace_singlet() {
        // oracle: sum of diagonal blocks of the explicit 4x4 matrix
        let layout = SystemLayout::new(&[("N", 2), ("S", 2)]).unwrap();
        let (red, l) = partial_trace(&singlet_matrix(), &layout, &["N"]).unwrap();
        assert_eq!(l.labels(), &["N".to_string()]);
        let expected = ComplexMatrix::identity(2).scale_re(0.5);
        assert!(red.max_abs_diff(&expected) <= 1e-14);
    }

    #[test]
    fn partial_trace_product_and_full() {
        let mut r = rng(3);
        let a = random_hermitian(&mut r, 2);
        let b = random_hermitian(&mut r, 3);
        let layout = SystemLayout::new(&[("A", 2), ("B", 3)]).unwrap();
        let prod = tensor(a.matrix(), b.matrix());
        let scaled_a = a.matrix().scale(b.matrix().trace());
        let (keep_a, _) = partial_trace(&prod, &layout, &["A"]).unwrap();
        assert!(keep_a.max_abs_diff(&scaled_a) <= 1e-12);

        let (all, _) = partial_trace(&prod, &layout, &["A", "B"]).unwrap();
        assert_eq!(all, prod);

        // trace preserved
        let (keep_b, _) = partial_trace(&prod, &layout, &["B"]).unwrap();
        assert!((keep_b.trace() - prod.trace()).norm() <= 1e-12);

        assert!(partial_trace(&prod, &layout, &["C"]).is_err());
    }

    #[test]
    fn partial_trace_linearity() {
        let mut r = rng(5);
        for _ in 0..10 {
            let x = random_complex_matrix(&mut r, 6, 6);
            let y = random_complex_matrix(&mut r, 6, 6);
            let layout = SystemLayout::new(&[("A", 2), ("B", 3)]).unwrap();
            let alpha = c(0.7, -0.3);
            let beta = c(-1.1, 0.4);
            let lin = &x.scale(alpha) + &y.scale(beta);
            let (tl, _) = partial_trace(&lin, &layout, &["B"]).unwrap();
            let (tx, _) = partial_trace(&x, &layout, &["B"]).unwrap();
            let (ty, _) = partial_trace(&y, &layout, &["B"]).unwrap();
            let combo = &tx.scale(alpha) + &ty.scale(beta);
            assert!(tl.max_abs_diff(&combo) <= 1e-12);
        }
    }

    #[test]
    fn eigh_pauli_spectra() {
        let dec = eigh(&sigma3()).unwrap();
        assert!((dec.values[0] - 1.0).abs() <= 1e-12);
        assert!((dec.values[1] + 1.0).abs() <= 1e-12);

        let dec1 = eigh(&sigma1()).unwrap();
        assert!((dec1.values[0] - 1.0).abs() <= 1e-12);
        assert!((dec1.values[1] + 1.0).abs() <= 1e-12);
        // eigenvectors (1,1)/sqrt2 and (1,-1)/sqrt2 up to phase
        let v0 = (dec1.vectors[(0, 0)].conj() * c(1.0, 0.0)
            + dec1.vectors[(1, 0)].conj() * c(1.0, 0.0))
        .norm();
        assert!((v0 - 2.0_f64.sqrt()).abs() <= 1e-10);
        let v1 = (dec1.vectors[(0, 1)].conj() * c(1.0, 0.0)
            + dec1.vectors[(1, 1)].conj() * c(-1.0, 0.0))
        .norm();
        assert!((v1 - 2.0_f64.sqrt()).abs() <= 1e-10);
    }

    #[test]
    fn eigh_reconstruction_random() {
        let mut r = rng(42);
        for trial in 0..100 {
            let d = 2 + (trial % 15);
            let h = random_hermitian(&mut r, d);
            let dec = eigh(&h).unwrap();
            let rec = dec.apply_spectral(|l| l);
            let scale = 1.0 + h.matrix().max_abs();
            assert!(
                rec.max_abs_diff(h.matrix()) <= 1e-10 * scale,
                "reconstruction failed at dim {d}"
            );
            let vtv = dec.vectors.adjoint().matmul(&dec.vectors);
            assert!(vtv.max_abs_diff(&ComplexMatrix::identity(d)) <= 1e-10);
            // descending order
            for w in dec.values.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
        }
    }

    #[test]
    fn eigh_degenerate_spectrum() {
        // 4-fold identity plus a rank-1 bump: 3-fold degenerate eigenvalue
        let mut m = ComplexMatrix::identity(4);
        m[(0, 0)] = c(2.0, 0.0);
        let h = HermitianOperator::new(m).unwrap();
        let dec = eigh(&h).unwrap();
        assert!((dec.values[0] - 2.0).abs() <= 1e-12);
        for k in 1..4 {
            assert!((dec.values[k] - 1.0).abs() <= 1e-12);
        }
        let rec = dec.apply_spectral(|l| l);
        assert!(rec.max_abs_diff(h.matrix()) <= 1e-10);
    }

    #[test]
    fn permute_preserves_spectrum() {
        let mut r = rng(9);
        for _ in 0..10 {
            let h = random_hermitian(&mut r, 8);
            let layout = SystemLayout::new(&[("A", 2), ("B", 2), ("C", 2)]).unwrap();
            let (p, _) = permute_systems(h.matrix(), &layout, &["C", "A", "B"]).unwrap();
            let hp = HermitianOperator::new(p).unwrap();
            let ev1 = eigh(&h).unwrap().values;
            let ev2 = eigh(&hp).unwrap().values;
            for (a, b) in ev1.iter().zip(&ev2) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn hermitian_function_cases() {
        let pos = hermitian_function(&sigma3(), |l| l.max(0.0)).unwrap();
        assert!((pos.matrix()[(0, 0)].re - 1.0).abs() <= 1e-12);
        assert!(pos.matrix()[(1, 1)].norm() <= 1e-12);

        let mut r = rng(13);
        let h = random_hermitian(&mut r, 5);
        let id = hermitian_function(&h, |l| l).unwrap();
        assert!(id.matrix().max_abs_diff(h.matrix()) <= 1e-10);

        // f = x log2 x with 0 log 0 = 0 on I/2
        let half = HermitianOperator::new(ComplexMatrix::identity(2).scale_re(0.5)).unwrap();
        let xlx = hermitian_function(&half, |l| if l > 0.0 { l * l.log2() } else { 0.0 }).unwrap();
        let expected = ComplexMatrix::identity(2).scale_re(-0.5);
        assert!(xlx.matrix().max_abs_diff(&expected) <= 1e-12);
        assert!((xlx.trace() + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn hermitian_function_commutes_with_input() {
        let mut r = rng(17);
        let h = random_hermitian(&mut r, 6);
        let f = hermitian_function(&h, |l| l * l + 0.5).unwrap();
        let hf = h.matrix().matmul(f.matrix());
        let fh = f.matrix().matmul(h.matrix());
        assert!(hf.max_abs_diff(&fh) <= 1e-9 * (1.0 + h.matrix().max_abs().powi(3)));
    }

    #[test]
    fn trace_norm_cases() {
        assert!((trace_norm(&sigma3()).unwrap() - 2.0).abs() <= 1e-12);
        assert!(trace_norm(&HermitianOperator::zeros(3)).unwrap() <= 1e-15);

        // singlet - I/4 has eigenvalues {3/4, -1/4, -1/4, -1/4}
        let diff = &singlet_matrix() - &ComplexMatrix::identity(4).scale_re(0.25);
        let h = HermitianOperator::new(diff).unwrap();
        assert!((trace_norm(&h).unwrap() - 1.5).abs() <= 1e-12);
        assert!(trace_norm(&h).unwrap() >= h.trace().abs());
    }

    #[test]
    fn hermitian_validation() {
        let bad = ComplexMatrix::new(
            2,
            2,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert!(HermitianOperator::new(bad.clone()).is_err());
        let fixed = HermitianOperator::hermitian_part(&bad);
        assert!(fixed.matrix().hermiticity_defect() <= 1e-15);
    }

    #[test]
    fn hermitian_basis_is_orthonormal_and_coords_roundtrip() {
        let d = 3;
        let basis = hermitian_basis(d);
        assert_eq!(basis.len(), d * d);
        for (i, a) in basis.iter().enumerate() {
            let ha = HermitianOperator::new(a.clone()).unwrap();
            for (j, b) in basis.iter().enumerate() {
                let ip = ha.inner(&HermitianOperator::new(b.clone()).unwrap());
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() <= 1e-14);
            }
        }
        let mut r = rng(23);
        let h = random_hermitian(&mut r, d);
        let coords = matrix_to_coords(h.matrix());
        let back = coords_to_matrix(&coords, d);
        assert!(back.max_abs_diff(h.matrix()) <= 1e-14);
        // coordinates against the explicit basis agree
        for (alpha, b) in basis.iter().enumerate() {
            let ip = HermitianOperator::new(b.clone()).unwrap().inner(&h);
            assert!((ip - coords[alpha]).abs() <= 1e-13);
        }
    }

    #[test]
    fn layout_validation() {
        assert!(SystemLayout::new(&[("A", 2), ("A", 3)]).is_err());
        assert!(SystemLayout::new(&[("A", 0)]).is_err());
        let l = SystemLayout::new(&[("N", 2), ("S", 3)]).unwrap();
        assert_eq!(l.total_dim(), 6);
        assert_eq!(l.dim_of("S").unwrap(), 3);
        assert!(l.dim_of("T").is_err());
    }
}
