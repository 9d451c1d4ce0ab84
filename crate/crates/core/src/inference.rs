//! The two test pipelines.
//!
//! One-sample: to test whether a coefficient group equals a reference
//! value, the model is rewritten around the pseudo-response
//! `V = Y − Z·β⁰_G` so the null becomes a moment condition
//! `E[(z − πᵀw)(v − wᵀθ)] = 0`. Both nuisance fits come from the selector
//! in [`crate::mds`], the statistic is the normalized sup-norm of the
//! residual cross moment, and the critical value is a simulated quantile
//! of the sup-norm of a centered Gaussian with the estimated residual
//! covariance.
//!
//! Two-sample: equality of coefficient groups across two samples reduces
//! to the same moment structure after pairing the samples into a combined
//! regression whose group-difference block carries the contrast of
//! interest; the null is that this block's coefficients vanish.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float;
use crate::linalg::{cholesky_psd, DenseMatrix, DenseVector};
use crate::mds::{mds_pi, mds_theta, MdsConfig};
use crate::rng::RngStream;

/// A group null hypothesis: the coefficients at `group` (0-based, strictly
/// increasing) equal `beta_g0`. Two-sample homogeneity uses `beta_g0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    group: Vec<usize>,
    beta_g0: DenseVector,
}

impl Hypothesis {
    pub fn new(group: Vec<usize>, beta_g0: DenseVector, p: usize) -> Result<Self> {
        if group.is_empty() {
            return Err(Error::Domain("group must be nonempty".into()));
        }
        if group.len() >= p {
            return Err(Error::Domain(format!(
                "group of size {} must be a proper subset of {p} coefficients",
                group.len()
            )));
        }
        if !group.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Domain(
                "group indices must be strictly increasing".into(),
            ));
        }
        if *group.last().unwrap() >= p {
            return Err(Error::Domain(format!(
                "group index {} out of range for {p} coefficients",
                group.last().unwrap()
            )));
        }
        if beta_g0.len() != group.len() {
            return Err(Error::Shape(format!(
                "reference vector has {} entries for a group of {}",
                beta_g0.len(),
                group.len()
            )));
        }
        Ok(Self { group, beta_g0 })
    }

    #[inline]
    pub fn group(&self) -> &[usize] {
        &self.group
    }

    #[inline]
    pub fn beta_g0(&self) -> &DenseVector {
        &self.beta_g0
    }

    #[inline]
    pub fn group_size(&self) -> usize {
        self.group.len()
    }
}

/// Outcome of a test: the statistic, the simulated critical value, and the
/// decision `reject = statistic > critical_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub sigma_hat: f64,
    pub quantile_draws: usize,
}

impl TestOutcome {
    fn decide(
        statistic: f64,
        critical_value: f64,
        alpha: f64,
        sigma_hat: f64,
        quantile_draws: usize,
    ) -> Self {
        Self {
            statistic,
            critical_value,
            alpha,
            reject: statistic > critical_value,
            sigma_hat,
            quantile_draws,
        }
    }
}

/// Splits the design into the group block `Z`, the complement `W`, and the
/// pseudo-response `V = Y − Z·β⁰_G`.
pub fn reconstruct(
    x: &DenseMatrix,
    y: &DenseVector,
    hyp: &Hypothesis,
) -> Result<(DenseMatrix, DenseMatrix, DenseVector)> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::Shape(format!(
            "response length {} does not match {n} rows",
            y.len()
        )));
    }
    if hyp.group.last().copied().unwrap_or(0) >= p {
        return Err(Error::Shape("hypothesis group exceeds design width".into()));
    }
    let z = x.select_columns(&hyp.group);
    let w = x.drop_columns(&hyp.group);
    let shift = z.matvec(&hyp.beta_g0);
    let v = y.sub(&shift);
    Ok((z, w, v))
}

/// Empirical `(1 − alpha)` quantile of `‖ξ‖_∞` for `ξ ~ N(0, cov)`,
/// estimated from `draws` simulated vectors (order statistic at the
/// 1-based index `⌈(1−alpha)·draws⌉`).
pub fn gaussian_max_quantile(
    cov: &DenseMatrix,
    alpha: f64,
    draws: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    if draws < 1000 {
        return Err(Error::Domain(format!(
            "need at least 1000 draws for a stable quantile, got {draws}"
        )));
    }
    let factor = cholesky_psd(cov)?;
    let k = factor.dim();
    let lower = factor.lower();
    let mut maxima = Vec::with_capacity(draws);
    let mut g = alloc::vec![0.0; k];
    for _ in 0..draws {
        for gi in g.iter_mut() {
            *gi = rng.standard_normal();
        }
        let mut m = 0.0f64;
        for i in 0..k {
            let row = lower.row(i);
            let mut acc = 0.0;
            for (l, &gl) in row[..=i].iter().zip(&g[..=i]) {
                acc += l * gl;
            }
            m = m.max(float::abs(acc));
        }
        maxima.push(m);
    }
    maxima.sort_by(|a, b| a.total_cmp(b));
    let target = (1.0 - alpha) * draws as f64;
    let mut index = target as usize;
    if (index as f64) < target {
        index += 1;
    }
    let index = index.clamp(1, draws);
    Ok(maxima[index - 1])
}

/// Normalized sup-norm cross moment `‖Ûᵀê‖_∞ / (√n·σ̂)`.
fn cross_moment_statistic(
    residual_cols: &DenseMatrix,
    residual: &DenseVector,
    sigma_hat: f64,
    n: usize,
) -> Result<f64> {
    if !(sigma_hat > 0.0) {
        return Err(Error::Numerical(
            "noise scale collapsed to zero; statistic undefined".into(),
        ));
    }
    let cross = residual_cols.tr_matvec(residual);
    Ok(cross.norm_inf() / (float::sqrt(n as f64) * sigma_hat))
}

fn check_group_columns(z: &DenseMatrix) -> Result<()> {
    for (j, sq) in z.column_sq_norms().iter().enumerate() {
        if !(*sq > 0.0) {
            return Err(Error::DegenerateInput(format!(
                "group column {j} has zero norm"
            )));
        }
    }
    Ok(())
}

/// One-sample group significance test.
///
/// Pipeline: reconstruct, fit the coefficient selector for `(W, V)` and
/// for every group column of `Z` on `W`, form the statistic, then compare
/// with the simulated Gaussian sup-norm quantile of the residual
/// covariance. The supplied stream is used only for the quantile
/// simulation.
pub fn one_sample_test(
    x: &DenseMatrix,
    y: &DenseVector,
    hyp: &Hypothesis,
    alpha: f64,
    cfg: &MdsConfig,
    draws: usize,
    rng: &mut RngStream,
) -> Result<TestOutcome> {
    let n = x.rows();
    if n < 10 {
        return Err(Error::Domain(format!("need at least 10 observations, got {n}")));
    }
    let (z, w, v) = reconstruct(x, y, hyp)?;
    check_group_columns(&z)?;
    let theta_fit = mds_theta(&w, &v, cfg)?;
    let pi_fit = mds_pi(&w, &z, cfg)?;
    let statistic =
        cross_moment_statistic(&pi_fit.residuals, &theta_fit.residual, theta_fit.sigma_hat, n)?;
    let critical_value = gaussian_max_quantile(&pi_fit.q_hat, alpha, draws, rng)?;
    Ok(TestOutcome::decide(
        statistic,
        critical_value,
        alpha,
        theta_fit.sigma_hat,
        draws,
    ))
}

/// Pairs two equally sized samples into the combined regression used by
/// the homogeneity test: `Z = X_{A,G} − X_{B,G}`,
/// `W = (X_{A,G}+X_{B,G}, X_{A,−G}, X_{B,−G})` and `Y = Y_A + Y_B`.
pub fn convolve(
    xa: &DenseMatrix,
    ya: &DenseVector,
    xb: &DenseMatrix,
    yb: &DenseVector,
    group: &[usize],
) -> Result<(DenseMatrix, DenseMatrix, DenseVector)> {
    let n = xa.rows();
    let p = xa.cols();
    if xb.rows() != n || xb.cols() != p {
        return Err(Error::Shape(format!(
            "samples must match in shape: {n}x{p} vs {}x{}",
            xb.rows(),
            xb.cols()
        )));
    }
    if ya.len() != n || yb.len() != n {
        return Err(Error::Shape("responses must match the sample size".into()));
    }
    if group.is_empty() || !group.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Domain("group must be nonempty and strictly increasing".into()));
    }
    if *group.last().unwrap() >= p {
        return Err(Error::Domain("group index out of range".into()));
    }

    let za = xa.select_columns(group);
    let zb = xb.select_columns(group);
    let k = group.len();
    let mut z = DenseMatrix::zeros(n, k);
    let mut zsum = DenseMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            let (a, b) = (za.get(i, j), zb.get(i, j));
            z.set(i, j, a - b);
            zsum.set(i, j, a + b);
        }
    }
    let wa = xa.drop_columns(group);
    let wb = xb.drop_columns(group);
    let w = DenseMatrix::hstack(&[&zsum, &wa, &wb])?;
    let y = ya.add(yb);
    Ok((z, w, y))
}

/// Two-sample partial homogeneity test on paired samples of equal size.
pub fn two_sample_test(
    xa: &DenseMatrix,
    ya: &DenseVector,
    xb: &DenseMatrix,
    yb: &DenseVector,
    group: &[usize],
    alpha: f64,
    cfg: &MdsConfig,
    draws: usize,
    rng: &mut RngStream,
) -> Result<TestOutcome> {
    let n = xa.rows();
    if n < 10 {
        return Err(Error::Domain(format!("need at least 10 observations, got {n}")));
    }
    let (z, w, y) = convolve(xa, ya, xb, yb, group)?;
    if !(y.norm2() > 0.0) {
        return Err(Error::DegenerateInput("combined response has zero norm".into()));
    }
    check_group_columns(&z)?;
    let theta_fit = mds_theta(&w, &y, cfg)?;
    let pi_fit = mds_pi(&w, &z, cfg)?;
    let statistic =
        cross_moment_statistic(&pi_fit.residuals, &theta_fit.residual, theta_fit.sigma_hat, n)?;
    let critical_value = gaussian_max_quantile(&pi_fit.q_hat, alpha, draws, rng)?;
    Ok(TestOutcome::decide(
        statistic,
        critical_value,
        alpha,
        theta_fit.sigma_hat,
        draws,
    ))
}
