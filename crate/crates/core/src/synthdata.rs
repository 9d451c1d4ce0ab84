//! Synthetic designs (placeholder while the module is under construction).
use alloc::boxed::Box;

/// Covariance families used by the synthetic designs.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    Toeplitz { rho: f64 },
    Identity,
    Equicorrelated { rho: f64 },
    Scaled { base: Box<CovarianceSpec>, factor: f64 },
}
