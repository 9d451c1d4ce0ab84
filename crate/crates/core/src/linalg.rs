//! Dense row-major linear algebra: containers, a positive-semidefinite
//! Cholesky with diagonal repair, multivariate normal sampling, and the
//! covariance constructors used by the synthetic designs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float;
use crate::rng::RngStream;
use crate::synthdata::CovarianceSpec;

/// Dense real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn from_vec(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![0.0; len],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        self.data[i] = v;
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        dot(&self.data, &other.data)
    }

    /// Euclidean norm.
    pub fn norm2(&self) -> f64 {
        float::sqrt(dot(&self.data, &self.data))
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(float::abs(v)))
    }

    pub fn norm1(&self) -> f64 {
        self.data.iter().map(|&v| float::abs(v)).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.len(), other.len());
        DenseVector::from_vec(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn add(&self, other: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.len(), other.len());
        DenseVector::from_vec(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> DenseVector {
        DenseVector::from_vec(self.data.iter().map(|a| a * c).collect())
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(data: Vec<f64>) -> Self {
        Self { data }
    }
}

/// Dot product with four independent accumulators. The fixed association
/// order keeps results identical across platforms while letting the CPU
/// overlap the multiply-adds.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let k = 4 * i;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in (4 * chunks)..n {
        tail += a[k] * b[k];
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

/// `y += c * x` over slices, unrolled like [`dot`].
#[inline]
pub(crate) fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    let n = x.len().min(y.len());
    for (yi, xi) in y[..n].iter_mut().zip(&x[..n]) {
        *yi += c * xi;
    }
}

/// Dense real matrix in row-major order.
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
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Convenience constructor from row slices; rows must share a length.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Shape(format!(
                    "ragged rows: expected {c}, found {}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> DenseVector {
        DenseVector::from_vec((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(float::abs(v)))
    }

    /// `A v`.
    pub fn matvec(&self, v: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.cols, v.len());
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            out.push(dot(self.row(i), v.as_slice()));
        }
        DenseVector::from_vec(out)
    }

    /// `Aᵀ v`, accumulated row-wise to stay cache friendly.
    pub fn tr_matvec(&self, v: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.rows, v.len());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v.get(i);
            if vi != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(i)) {
                    *o += vi * a;
                }
            }
        }
        DenseVector::from_vec(out)
    }

    /// `A B`.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik != 0.0 {
                    let b_row = other.row(k);
                    for (o, &b) in out_row.iter_mut().zip(b_row) {
                        *o += aik * b;
                    }
                }
            }
        }
        out
    }

    /// Gram matrix `AᵀA`, built from row outer products so the result is
    /// exactly symmetric.
    pub fn gram(&self) -> DenseMatrix {
        let p = self.cols;
        let mut g = DenseMatrix::zeros(p, p);
        for i in 0..self.rows {
            let row = self.row(i);
            for (a, &xa) in row.iter().enumerate() {
                if xa != 0.0 {
                    let grow = &mut g.data[a * p..(a + 1) * p];
                    for (b, &xb) in row.iter().enumerate().skip(a) {
                        grow[b] += xa * xb;
                    }
                }
            }
        }
        for a in 0..p {
            for b in (a + 1)..p {
                let v = g.get(a, b);
                g.set(b, a, v);
            }
        }
        g
    }

    /// Squared Euclidean norm of every column.
    pub fn column_sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * a;
            }
        }
        out
    }

    /// New matrix keeping `indices` columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, indices.len());
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = out.row_mut(i);
            for (d, &j) in dst.iter_mut().zip(indices) {
                *d = src[j];
            }
        }
        out
    }

    /// New matrix with the (sorted, distinct) `indices` columns removed.
    pub fn drop_columns(&self, indices: &[usize]) -> DenseMatrix {
        let keep: Vec<usize> = (0..self.cols).filter(|j| !indices.contains(j)).collect();
        self.select_columns(&keep)
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::Shape("hstack blocks differ in row count".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            let dst = out.row_mut(i);
            let mut offset = 0;
            for b in blocks {
                dst[offset..offset + b.cols].copy_from_slice(b.row(i));
                offset += b.cols;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                out.set(j, i, v);
            }
        }
        out
    }
}

/// Lower-triangular factor produced by [`cholesky_psd`], together with the
/// diagonal jitter that was needed to make the factorization go through.
#[derive(Debug, Clone)]
pub struct CholFactor {
    lower: DenseMatrix,
    jitter_used: f64,
}

impl CholFactor {
    #[inline]
    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    #[inline]
    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.rows()
    }
}

const JITTER_LADDER: [f64; 5] = [0.0, 1e-12, 1e-10, 1e-8, 1e-6];
const SYMMETRY_TOL: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Cholesky factorization with positive-semidefinite repair.
///
/// Returns lower-triangular `L` with `L Lᵀ = A + jitter·I`; the jitter is 0
/// for numerically positive-definite input and otherwise the smallest value
/// from an escalation ladder that lets the factorization succeed.
pub fn cholesky_psd(a: &DenseMatrix) -> Result<CholFactor> {
    let p = a.rows();
    if a.cols() != p {
        return Err(Error::Shape(format!(
            "cholesky needs a square matrix, got {p}x{}",
            a.cols()
        )));
    }
    let mut asym: f64 = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            asym = asym.max(float::abs(a.get(i, j) - a.get(j, i)));
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::Shape(format!(
            "matrix is asymmetric by {asym:e} (tolerance {SYMMETRY_TOL:e})"
        )));
    }

    let diag_max = (0..p).fold(0.0f64, |m, i| m.max(float::abs(a.get(i, i))));
    for &jitter in &JITTER_LADDER {
        if let Some(lower) = try_factor(a, jitter, diag_max) {
            if reconstruction_error(&lower, a, jitter) <= RECONSTRUCTION_TOL {
                return Ok(CholFactor {
                    lower,
                    jitter_used: jitter,
                });
            }
        }
    }
    Err(Error::Numerical(
        "cholesky failed at the maximum jitter level".into(),
    ))
}

fn try_factor(a: &DenseMatrix, jitter: f64, diag_max: f64) -> Option<DenseMatrix> {
    let p = a.rows();
    let threshold = diag_max * f64::EPSILON;
    let mut l = DenseMatrix::zeros(p, p);
    for j in 0..p {
        let mut d = a.get(j, j) + jitter;
        for k in 0..j {
            let v = l.get(j, k);
            d -= v * v;
        }
        if d <= threshold {
            return None;
        }
        let ljj = float::sqrt(d);
        l.set(j, j, ljj);
        for i in (j + 1)..p {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Some(l)
}

fn reconstruction_error(l: &DenseMatrix, a: &DenseMatrix, jitter: f64) -> f64 {
    let p = a.rows();
    let mut err: f64 = 0.0;
    for i in 0..p {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..=j {
                s += l.get(i, k) * l.get(j, k);
            }
            let target = a.get(i, j) + if i == j { jitter } else { 0.0 };
            err = err.max(float::abs(s - target));
        }
    }
    err
}

/// Draws `count` independent rows from `N(0, L Lᵀ)` given the factor `L`.
/// Output is deterministic in the stream state.
pub fn sample_mvn(factor: &CholFactor, count: usize, rng: &mut RngStream) -> DenseMatrix {
    let p = factor.dim();
    let l = factor.lower();
    let mut out = DenseMatrix::zeros(count, p);
    let mut g = vec![0.0; p];
    for r in 0..count {
        for gi in g.iter_mut() {
            *gi = rng.standard_normal();
        }
        let row = out.row_mut(r);
        for i in 0..p {
            let li = l.row(i);
            row[i] = dot(&li[..=i], &g[..=i]);
        }
    }
    out
}

/// Builds the `p x p` covariance matrix described by `spec`. The result is
/// exactly symmetric (entries above and below the diagonal are the same
/// computed value).
pub fn build_covariance(spec: &CovarianceSpec, p: usize) -> Result<DenseMatrix> {
    if p == 0 {
        return Err(Error::Domain("covariance dimension must be positive".into()));
    }
    match spec {
        CovarianceSpec::Identity => Ok(DenseMatrix::identity(p)),
        CovarianceSpec::Toeplitz { rho } => {
            if !(*rho > -1.0 && *rho < 1.0) {
                return Err(Error::Domain(format!(
                    "toeplitz correlation {rho} outside (-1, 1)"
                )));
            }
            let mut m = DenseMatrix::zeros(p, p);
            for i in 0..p {
                for j in i..p {
                    let v = float::powi(*rho, j - i);
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
            Ok(m)
        }
        CovarianceSpec::Equicorrelated { rho } => {
            let lo = if p > 1 { -1.0 / (p as f64 - 1.0) } else { -1.0 };
            if !(*rho > lo && *rho < 1.0) {
                return Err(Error::Domain(format!(
                    "equicorrelation {rho} outside ({lo}, 1) for p={p}"
                )));
            }
            let mut m = DenseMatrix::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    m.set(i, j, if i == j { 1.0 } else { *rho });
                }
            }
            Ok(m)
        }
        CovarianceSpec::Scaled { base, factor } => {
            if !(*factor > 0.0) {
                return Err(Error::Domain(format!(
                    "covariance scale factor {factor} must be positive"
                )));
            }
            let mut m = build_covariance(base, p)?;
            for v in m.data.iter_mut() {
                *v *= *factor;
            }
            Ok(m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::boxed::Box;

    fn toeplitz(rho: f64) -> CovarianceSpec {
        CovarianceSpec::Toeplitz { rho }
    }

    #[test]
    fn covariance_toeplitz_entries() {
        let m = build_covariance(&toeplitz(0.4), 3).unwrap();
        let expect = [[1.0, 0.4, 0.16], [0.4, 1.0, 0.4], [0.16, 0.4, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn covariance_identity() {
        let m = build_covariance(&CovarianceSpec::Identity, 2).unwrap();
        assert_eq!(m, DenseMatrix::identity(2));
    }

    #[test]
    fn covariance_scaled_toeplitz() {
        let spec = CovarianceSpec::Scaled {
            base: Box::new(toeplitz(0.4)),
            factor: 2.0,
        };
        let m = build_covariance(&spec, 2).unwrap();
        assert!((m.get(0, 0) - 2.0).abs() < 1e-15);
        assert!((m.get(0, 1) - 0.8).abs() < 1e-15);
        assert!((m.get(1, 0) - 0.8).abs() < 1e-15);
        assert!((m.get(1, 1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_bit_symmetric() {
        let m = build_covariance(&toeplitz(-0.73), 17).unwrap();
        for i in 0..17 {
            for j in 0..17 {
                assert!(m.get(i, j).to_bits() == m.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn covariance_rejects_bad_parameters() {
        assert!(matches!(
            build_covariance(&toeplitz(1.0), 3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            build_covariance(&CovarianceSpec::Equicorrelated { rho: -0.6 }, 3),
            Err(Error::Domain(_))
        ));
        let bad = CovarianceSpec::Scaled {
            base: Box::new(CovarianceSpec::Identity),
            factor: 0.0,
        };
        assert!(matches!(build_covariance(&bad, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn cholesky_identity_is_exact() {
        let f = cholesky_psd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(f.jitter_used(), 0.0);
        assert_eq!(f.lower(), &DenseMatrix::identity(3));
    }

    #[test]
    fn cholesky_reconstructs_pd_input() {
        let a = DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]).unwrap();
        let f = cholesky_psd(&a).unwrap();
        assert_eq!(f.jitter_used(), 0.0);
        assert!(reconstruction_error(f.lower(), &a, 0.0) <= 1e-10);
    }

    #[test]
    fn cholesky_repairs_rank_deficient_input() {
        let a = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let f = cholesky_psd(&a).unwrap();
        assert!(f.jitter_used() > 0.0);
        // error against the unjittered input stays within twice the jitter
        assert!(reconstruction_error(f.lower(), &a, 0.0) <= 2.0 * f.jitter_used());
    }

    #[test]
    fn cholesky_rejects_asymmetric_input() {
        let a = DenseMatrix::from_rows(&[&[1.0, 0.5], &[0.1, 1.0]]).unwrap();
        assert!(matches!(cholesky_psd(&a), Err(Error::Shape(_))));
    }

    #[test]
    fn cholesky_reconstruction_tolerance_holds_on_random_psd() {
        let mut rng = RngStream::from_seed(11);
        for trial in 0..20 {
            let p = 2 + (trial % 4);
            let b = sample_mvn(
                &cholesky_psd(&DenseMatrix::identity(p)).unwrap(),
                p + 2,
                &mut rng,
            );
            let a = b.gram();
            let f = cholesky_psd(&a).unwrap();
            assert!(reconstruction_error(f.lower(), &a, f.jitter_used()) <= 1e-8);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = cholesky_psd(&build_covariance(&toeplitz(0.4), 3).unwrap()).unwrap();
        let a = sample_mvn(&f, 50, &mut RngStream::from_seed(9));
        let b = sample_mvn(&f, 50, &mut RngStream::from_seed(9));
        assert_eq!(a, b);
    }

    fn empirical_cov(x: &DenseMatrix) -> DenseMatrix {
        let mut g = x.gram();
        let n = x.rows() as f64;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let v = g.get(i, j) / n;
                g.set(i, j, v);
            }
        }
        g
    }

    #[test]
    fn sampling_matches_identity_covariance() {
        let f = cholesky_psd(&DenseMatrix::identity(2)).unwrap();
        let x = sample_mvn(&f, 100_000, &mut RngStream::from_seed(1));
        let c = empirical_cov(&x);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c.get(i, j) - target).abs() < 0.05);
            }
        }
    }

    #[test]
    fn sampling_matches_toeplitz_covariance() {
        let sigma = build_covariance(&toeplitz(0.4), 3).unwrap();
        let f = cholesky_psd(&sigma).unwrap();
        let x = sample_mvn(&f, 100_000, &mut RngStream::from_seed(2));
        let c = empirical_cov(&x);
        for i in 0..3 {
            for j in 0..3 {
                assert!((c.get(i, j) - sigma.get(i, j)).abs() < 0.05);
            }
        }
    }

    #[test]
    fn sampling_within_five_standard_errors() {
        // entrywise standard error of a covariance estimate at n draws is
        // roughly sqrt((1 + sigma_ij^2) / n) for unit-variance margins
        let sigma = build_covariance(&toeplitz(0.4), 5).unwrap();
        let f = cholesky_psd(&sigma).unwrap();
        let n = 100_000usize;
        let x = sample_mvn(&f, n, &mut RngStream::from_seed(3));
        let c = empirical_cov(&x);
        for i in 0..5 {
            for j in 0..5 {
                let sij = sigma.get(i, j);
                let se = ((1.0 + sij * sij) / n as f64).sqrt();
                assert!(
                    (c.get(i, j) - sij).abs() < 5.0 * se,
                    "entry ({i},{j}) off by {} vs 5se {}",
                    (c.get(i, j) - sij).abs(),
                    5.0 * se
                );
            }
        }
    }
}
