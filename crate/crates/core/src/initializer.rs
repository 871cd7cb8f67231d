//! Monte Carlo feasible starting points.
//!
//! Draws from the Gaussian implied by the unpenalized least-squares fit
//! (mean `(X'X)^-1 X'y`, covariance `(X'X)^-1`) and keeps the feasible draw
//! with the largest log-density. The returned point serves strictly as a
//! starting point for the solver, never as a reported estimate.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constraints::ConstraintSet;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Feasibility tolerance shared with the estimator.
pub(crate) const FEASIBILITY_TOL: f64 = 1e-9;

/// Sampling configuration: draw count, seed, and the Gaussian `N(mu, sigma)`.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub draws: usize,
    pub seed: u64,
    mu: DVector<f64>,
    /// Lower Cholesky factor of sigma (jittered when necessary).
    chol: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_det: f64,
}

impl McConfig {
    /// Builds the configuration from an explicit mean and covariance.
    /// A ridge of `1e-10 * trace(sigma)/p` is added if the factorization
    /// fails; a covariance that still fails to factor is rejected.
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, draws: usize, seed: u64) -> Result<Self> {
        if draws == 0 {
            return Err(Error::Dimension("draw count must be at least 1".into()));
        }
        let p = mu.len();
        if sigma.nrows() != p || sigma.ncols() != p {
            return Err(Error::Dimension(format!(
                "sigma is {}x{} but mu has length {p}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let sym = (&sigma + sigma.transpose()) * 0.5;
        let chol = match sym.clone().cholesky() {
            Some(c) => c,
            None => {
                let jitter = 1e-10 * sym.trace() / p as f64;
                let jittered = &sym + DMatrix::identity(p, p) * jitter.max(1e-300);
                jittered
                    .cholesky()
                    .ok_or_else(|| Error::Dimension("sigma is not positive definite".into()))?
            }
        };
        let log_det = 2.0 * (0..p).map(|j| chol.l()[(j, j)].ln()).sum::<f64>();
        let precision = chol.inverse();
        Ok(Self {
            draws,
            seed,
            mu,
            chol: chol.l(),
            precision,
            log_det,
        })
    }

    /// Mean `(X'X)^-1 X'y` and covariance `(X'X)^-1` from data. The Gram
    /// matrix is jittered when singular (n < p designs).
    pub fn from_data(data: &Dataset, draws: usize, seed: u64) -> Result<Self> {
        let p = data.p();
        let gram = data.x.transpose() * &data.x;
        let xty = data.x.transpose() * &data.y;
        let chol = match gram.clone().cholesky() {
            Some(c) => c,
            None => {
                let jitter = 1e-10 * gram.trace() / p as f64;
                (&gram + DMatrix::identity(p, p) * jitter.max(1e-300))
                    .cholesky()
                    .ok_or_else(|| Error::Dimension("X'X is not factorizable".into()))?
            }
        };
        let mu = chol.solve(&xty);
        let sigma = chol.inverse();
        Self::new(mu, sigma, draws, seed)
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Log-density of `N(mu, sigma)` at `beta`, omitting the `-(p/2) log 2 pi`
/// constant (the argmax is unaffected):
/// `-(beta-mu)' sigma^-1 (beta-mu)/2 - log|sigma|/2`.
pub fn log_density(beta: &DVector<f64>, cfg: &McConfig) -> Result<f64> {
    if beta.len() != cfg.dim() {
        return Err(Error::Dimension(format!(
            "beta has length {} but mu has length {}",
            beta.len(),
            cfg.dim()
        )));
    }
    let centered = beta - &cfg.mu;
    let quad = centered.dot(&(&cfg.precision * &centered));
    Ok(-0.5 * quad - 0.5 * cfg.log_det)
}

/// Draws `cfg.draws` samples and returns the feasible draw (L1 budget `s`
/// and `g <= 0`) with the largest log-density, ties broken by lowest draw
/// index. `None` when no draw is feasible. Deterministic given
/// `(seed, draws, cfg)`.
pub fn mc_initial_point(
    cfg: &McConfig,
    s: f64,
    cs: &ConstraintSet,
) -> Result<Option<DVector<f64>>> {
    if s < 0.0 {
        return Err(Error::Dimension("budget s must be nonnegative".into()));
    }
    if cs.dim() != cfg.dim() {
        return Err(Error::Dimension(format!(
            "constraints have dimension {} but mu has length {}",
            cs.dim(),
            cfg.dim()
        )));
    }
    let p = cfg.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = StandardNormal;
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut xi = DVector::zeros(p);
    for _ in 0..cfg.draws {
        for j in 0..p {
            xi[j] = normal.sample(&mut rng);
        }
        let z = &cfg.mu + &cfg.chol * &xi;
        let l1: f64 = z.iter().map(|v| v.abs()).sum();
        if l1 > s {
            continue;
        }
        if !cs.is_feasible(&z, FEASIBILITY_TOL)? {
            continue;
        }
        let ld = log_density(&z, cfg)?;
        if best.as_ref().is_none_or(|(b, _)| ld > *b) {
            best = Some((ld, z.clone()));
        }
    }
    Ok(best.map(|(_, z)| z))
}
