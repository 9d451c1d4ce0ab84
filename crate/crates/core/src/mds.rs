//! The coefficient estimator at the center of the test pipelines: an
//! ℓ1-minimization subject to sup-norm correlation constraints whose noise
//! ratio is a jointly optimized program variable, solved as a linear
//! program.
//!
//! For a design `W` (n x q) and response `V`, the estimate solves
//!
//! ```text
//! min ‖θ‖₁   s.t.  |W_jᵀ(V − Wθ)| ≤ η·ρ·√n·‖V‖₂       for every column j,
//!                  Vᵀ(V − Wθ) ≥ ρ₀·ρ·‖V‖₂²/2,
//!                  ρ ∈ [ρ₀, 1]
//! ```
//!
//! with θ split into positive and negative parts. The ratio ρ is a decision
//! variable bounded below by a configured ρ₀, so the whole program stays
//! linear and no outer grid search is needed. A multi-column variant fits
//! one program per response column and assembles the residual covariance.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::lp::{solve_lp, LpProblem, LpStatus};

/// Tuning for the selector programs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdsConfig {
    /// Sup-norm budget multiplier η.
    pub eta: f64,
    /// Lower bound ρ₀ for the noise ratio, in (0, 1).
    pub rho0: f64,
    /// Iteration budget forwarded to the solver; 0 selects its default.
    pub lp_max_iters: usize,
}

impl MdsConfig {
    /// The recommended tuning for a regression with `ambient_dim` candidate
    /// predictors and `n` observations: `η = 0.5·√(ln(ambient_dim)/n)`,
    /// `ρ₀ = 0.01`.
    pub fn recommended(ambient_dim: usize, n: usize) -> Self {
        Self {
            eta: 0.5 * float::sqrt(float::ln(ambient_dim as f64) / n as f64),
            rho0: 0.01,
            lp_max_iters: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Domain(format!("eta {} must be positive", self.eta)));
        }
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return Err(Error::Domain(format!(
                "rho0 {} must lie in (0, 1)",
                self.rho0
            )));
        }
        Ok(())
    }
}

/// Single-response fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MdsFit {
    /// Coefficient estimate, length q.
    pub theta: DenseVector,
    /// Optimized noise-ratio variable, in `[rho0, 1]`.
    pub rho1: f64,
    /// Residual `V − Wθ`.
    pub residual: DenseVector,
    /// Noise scale `‖V − Wθ‖₂ / √n`.
    pub sigma_hat: f64,
}

/// Multi-response fit: one program per column of `Z`, plus the residual
/// covariance of the stacked residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct PiFit {
    /// Coefficients, q x k (column j explains `Z_j`).
    pub pi: DenseMatrix,
    /// Residuals `Z − Wπ`, n x k.
    pub residuals: DenseMatrix,
    /// Residual covariance `(Z − Wπ)ᵀ(Z − Wπ)/n`, k x k.
    pub q_hat: DenseMatrix,
    /// Per-column optimized ratio variables.
    pub rho2: Vec<f64>,
}

/// Builds the program for `(W, V)` in the original variable scale:
/// variables `(θ⁺, θ⁻, ρ)`, objective `Σ(θ⁺+θ⁻)`, and `2q+1` rows (a
/// two-row sup-norm pair per design column plus the residual-alignment
/// row).
pub fn build_mds_lp(w: &DenseMatrix, v: &DenseVector, cfg: &MdsConfig) -> Result<LpProblem> {
    let (gram, wv, v_norm) = program_data(w, v, cfg)?;
    let q = w.cols();
    let scales = alloc::vec![1.0; q];
    let working: Vec<usize> = (0..q).collect();
    encode_working(&gram, &wv, v_norm, w.rows(), cfg, &scales, &working)
}

fn program_data(
    w: &DenseMatrix,
    v: &DenseVector,
    cfg: &MdsConfig,
) -> Result<(DenseMatrix, DenseVector, f64)> {
    cfg.validate()?;
    let n = w.rows();
    let q = w.cols();
    if n < 2 || q < 1 {
        return Err(Error::Shape(format!(
            "design must have at least 2 rows and 1 column, got {n}x{q}"
        )));
    }
    if v.len() != n {
        return Err(Error::Shape(format!(
            "response length {} does not match {n} rows",
            v.len()
        )));
    }
    let v_norm = v.norm2();
    if !(v_norm > 0.0) {
        return Err(Error::DegenerateInput("response has zero norm".into()));
    }
    Ok((w.gram(), w.tr_matvec(v), v_norm))
}

/// Builds the program restricted to the sup-norm row pairs of `working`
/// columns (plus the alignment row). The `j`-th coefficient column is
/// rescaled by `1/scales[j]`; rows keep their original meaning, only the
/// internal variable scaling changes.
fn encode_working(
    gram: &DenseMatrix,
    wv: &DenseVector,
    v_norm: f64,
    n: usize,
    cfg: &MdsConfig,
    scales: &[f64],
    working: &[usize],
) -> Result<LpProblem> {
    let q = gram.cols();
    let eta_budget = cfg.eta * float::sqrt(n as f64) * v_norm;
    let align_rhs = v_norm * v_norm;

    let d = 2 * q + 1;
    let m = 2 * working.len() + 1;
    let mut a = DenseMatrix::zeros(m, d);
    let mut b = DenseVector::zeros(m);

    // row pair per working column j:
    //   -Σ G[j][l]/s_l (θ⁺_l - θ⁻_l) - budget·ρ ≤ -WᵀV[j]
    //   +Σ G[j][l]/s_l (θ⁺_l - θ⁻_l) - budget·ρ ≤ +WᵀV[j]
    for (r, &j) in working.iter().enumerate() {
        let grow = gram.row(j);
        {
            let row = a.row_mut(2 * r);
            for l in 0..q {
                let g = grow[l] / scales[l];
                row[l] = -g;
                row[q + l] = g;
            }
            row[2 * q] = -eta_budget;
        }
        b.set(2 * r, -wv.get(j));
        {
            let row = a.row_mut(2 * r + 1);
            for l in 0..q {
                let g = grow[l] / scales[l];
                row[l] = g;
                row[q + l] = -g;
            }
            row[2 * q] = -eta_budget;
        }
        b.set(2 * r + 1, wv.get(j));
    }
    // residual alignment: VᵀWθ + (ρ₀‖V‖²/2)·ρ ≤ ‖V‖²
    {
        let row = a.row_mut(m - 1);
        for l in 0..q {
            let g = wv.get(l) / scales[l];
            row[l] = g;
            row[q + l] = -g;
        }
        row[2 * q] = cfg.rho0 * align_rhs / 2.0;
        b.set(m - 1, align_rhs);
    }

    let mut c = DenseVector::zeros(d);
    for l in 0..q {
        c.set(l, 1.0 / scales[l]);
        c.set(q + l, 1.0 / scales[l]);
    }
    let mut lo = DenseVector::zeros(d);
    let mut hi = DenseVector::from_vec(alloc::vec![f64::INFINITY; d]);
    lo.set(2 * q, cfg.rho0);
    hi.set(2 * q, 1.0);

    LpProblem::new(c, a, b, lo, hi)
}

/// How many sup-norm row pairs seed the working set.
const SEED_ROWS: usize = 32;
/// Most violated pairs added per outer round.
const ADD_MAX: usize = 64;

/// Solves the program by row generation: only a working subset of sup-norm
/// row pairs enters the solver, violated pairs are added until none remain.
/// Dropping rows relaxes the program, so the first iterate that satisfies
/// every pair is optimal for the full program.
fn fit(w: &DenseMatrix, v: &DenseVector, cfg: &MdsConfig, context: &str) -> Result<MdsFit> {
    let q = w.cols();
    let n = w.rows();
    let (gram, wv, v_norm) = program_data(w, v, cfg)?;
    // unit-norm column scaling improves conditioning; zero columns are
    // left alone (their coefficients are never forced away from zero)
    let scales: Vec<f64> = (0..q)
        .map(|j| {
            let norm = float::sqrt(gram.get(j, j));
            if norm > 0.0 {
                norm
            } else {
                1.0
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| {
        float::abs(wv.get(b))
            .total_cmp(&float::abs(wv.get(a)))
            .then(a.cmp(&b))
    });
    let mut working: Vec<usize> = order[..q.min(SEED_ROWS)].to_vec();
    let mut in_working = alloc::vec![false; q];
    for &j in &working {
        in_working[j] = true;
    }

    let sqrt_n = float::sqrt(n as f64);
    let mut rounds = 0usize;
    loop {
        rounds += 1;
        if rounds > 2 * q + 4 {
            return Err(Error::Numerical(
                "row generation failed to settle".into(),
            ));
        }
        let problem = encode_working(&gram, &wv, v_norm, n, cfg, &scales, &working)?;
        let solution = solve_lp(&problem, cfg.lp_max_iters)?;
        if solution.status != LpStatus::Optimal {
            return Err(Error::Estimation {
                status: solution.status,
                context: String::from(context),
                column: None,
            });
        }
        let x = solution.x;
        let mut theta = DenseVector::zeros(q);
        for l in 0..q {
            theta.set(l, (x.get(l) - x.get(q + l)) / scales[l]);
        }
        let rho1 = x.get(2 * q);
        let residual = v.sub(&w.matvec(&theta));
        let corr = w.tr_matvec(&residual);
        let budget = cfg.eta * rho1 * sqrt_n * v_norm;
        let add_tol = 1e-9 * budget.max(1.0);
        let mut violated: Vec<(f64, usize)> = (0..q)
            .filter(|&j| !in_working[j])
            .filter_map(|j| {
                let excess = float::abs(corr.get(j)) - budget;
                (excess > add_tol).then_some((excess, j))
            })
            .collect();
        if violated.is_empty() {
            let sigma_hat = residual.norm2() / sqrt_n;
            return Ok(MdsFit {
                theta,
                rho1,
                residual,
                sigma_hat,
            });
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, j) in violated.iter().take(ADD_MAX) {
            working.push(j);
            in_working[j] = true;
        }
    }
}

/// Fits the selector for a single response. Non-optimal solves surface as
/// estimation errors rather than fallback estimates.
pub fn mds_theta(w: &DenseMatrix, v: &DenseVector, cfg: &MdsConfig) -> Result<MdsFit> {
    fit(w, v, cfg, "mds theta")
}

/// Fits one program per column of `Z` and assembles the coefficient
/// matrix, the residual matrix `Z − Wπ`, and the residual covariance.
pub fn mds_pi(w: &DenseMatrix, z: &DenseMatrix, cfg: &MdsConfig) -> Result<PiFit> {
    let n = w.rows();
    let q = w.cols();
    let k = z.cols();
    if z.rows() != n {
        return Err(Error::Shape(format!(
            "auxiliary responses have {} rows, design has {n}",
            z.rows()
        )));
    }
    if k == 0 {
        return Err(Error::Shape("need at least one response column".into()));
    }
    let mut pi = DenseMatrix::zeros(q, k);
    let mut residuals = DenseMatrix::zeros(n, k);
    let mut rho2 = Vec::with_capacity(k);
    for j in 0..k {
        let zj = z.column(j);
        let fit_j = fit(w, &zj, cfg, "mds pi").map_err(|e| match e {
            Error::Estimation {
                status, context, ..
            } => Error::Estimation {
                status,
                context,
                column: Some(j),
            },
            other => other,
        })?;
        for l in 0..q {
            pi.set(l, j, fit_j.theta.get(l));
        }
        for i in 0..n {
            residuals.set(i, j, fit_j.residual.get(i));
        }
        rho2.push(fit_j.rho1);
    }
    // residual covariance, exactly symmetric by construction
    let mut q_hat = residuals.gram();
    let scale = 1.0 / n as f64;
    for i in 0..k {
        for j in 0..k {
            let v = q_hat.get(i, j) * scale;
            q_hat.set(i, j, v);
        }
    }
    Ok(PiFit {
        pi,
        residuals,
        q_hat,
        rho2,
    })
}

/// Worst violation of the two constraint families at `(theta, rho)`,
/// recomputed from raw data; used by callers to audit returned fits.
pub fn constraint_violation(
    w: &DenseMatrix,
    v: &DenseVector,
    cfg: &MdsConfig,
    theta: &DenseVector,
    rho: f64,
) -> f64 {
    let n = w.rows();
    let v_norm = v.norm2();
    let resid = v.sub(&w.matvec(theta));
    let corr = w.tr_matvec(&resid).norm_inf();
    let budget = cfg.eta * rho * float::sqrt(n as f64) * v_norm;
    let align = v.dot(&resid) - cfg.rho0 * rho * v_norm * v_norm / 2.0;
    (corr - budget).max(-align).max(0.0)
}
