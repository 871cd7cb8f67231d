//! Counting degrees of freedom and bootstrap standard errors.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::ConstraintSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{self, FitResult, FitSpec};
use crate::lsa;
use crate::tuning::{self, Criterion};

/// `df = p - #{beta_j = 0} - #{active constraints}`, floored at zero.
/// Equality constraints always count as active. The activity tolerance
/// `tol` applies to constraint values; zero coefficients come from the
/// fit's sparsified zero set (the intercept coordinate counts as zero only
/// when it is exactly zero).
pub fn degrees_of_freedom(fit: &FitResult, cs: &ConstraintSet, tol: f64) -> Result<usize> {
    let p = cs.dim();
    let full = constraint_coords(fit, cs)?;
    let active = estimator::active_constraints(cs, &full, tol)?;
    let mut zeros = fit.zero_set.len();
    if p == fit.beta.len() + 1 && fit.intercept == 0.0 {
        zeros += 1;
    }
    Ok(p.saturating_sub(zeros).saturating_sub(active.len()))
}

fn constraint_coords(fit: &FitResult, cs: &ConstraintSet) -> Result<DVector<f64>> {
    if cs.dim() == fit.beta.len() {
        Ok(fit.beta.clone())
    } else if cs.dim() == fit.beta.len() + 1 {
        let mut full = DVector::zeros(cs.dim());
        full[0] = fit.intercept;
        for j in 0..fit.beta.len() {
            full[j + 1] = fit.beta[j];
        }
        Ok(full)
    } else {
        Err(Error::Dimension(format!(
            "fit has {} coefficients but constraints have dimension {}",
            fit.beta.len(),
            cs.dim()
        )))
    }
}

/// Whether each bootstrap replicate refits at a fixed budget or reruns the
/// tuning pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapMode {
    FixedS,
    ReTuned,
}

/// Loss family used for replicate fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapFamily {
    Gaussian,
    Logistic,
}

/// Replicate fitting configuration.
#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    pub spec: FitSpec,
    pub mode: BootstrapMode,
    pub family: BootstrapFamily,
    /// Grid size for `ReTuned` replicates.
    pub grid_count: usize,
    /// CV folds for `ReTuned` replicates; `None` means leave-one-out.
    pub folds: Option<usize>,
    pub criterion: Criterion,
}

impl BootstrapConfig {
    pub fn fixed(spec: FitSpec) -> Self {
        Self {
            spec,
            mode: BootstrapMode::FixedS,
            family: BootstrapFamily::Gaussian,
            grid_count: 50,
            folds: None,
            criterion: Criterion::Cv,
        }
    }
}

/// Case-resampled bootstrap report.
#[derive(Debug, Clone)]
pub struct BootstrapReport {
    pub replicates: usize,
    pub mode: BootstrapMode,
    /// Per-coefficient standard deviation over successful replicates.
    pub se: DVector<f64>,
    /// Fraction of successful replicates with a nonzero estimate.
    pub selection_freq: DVector<f64>,
    pub seed: u64,
    pub failures: usize,
    /// False once half or more of the replicates failed.
    pub reliable: bool,
}

/// Draws `b` case-resampled datasets (rows with replacement, replicate `r`
/// seeded by `seed + r`) and refits each. Failures are counted and
/// excluded from the moments. Deterministic given the seed; replicates are
/// independent of evaluation order.
pub fn bootstrap_se(
    data: &Dataset,
    cs: &ConstraintSet,
    config: &BootstrapConfig,
    b: usize,
    seed: u64,
) -> Result<BootstrapReport> {
    if b < 2 {
        return Err(Error::Dimension("bootstrap needs B >= 2".into()));
    }
    let n = data.n();
    let p = data.p();
    let mut betas: Vec<DVector<f64>> = Vec::with_capacity(b);
    let mut failures = 0usize;

    for r in 0..b {
        let rep_seed = seed.wrapping_add(r as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let resampled = data.subset(&rows);
        match replicate_fit(&resampled, cs, config, rep_seed) {
            Ok(beta) => betas.push(beta),
            Err(_) => failures += 1,
        }
    }

    let ok = betas.len();
    let mut se = DVector::zeros(p);
    let mut selection_freq = DVector::zeros(p);
    if ok >= 2 {
        for j in 0..p {
            let mean: f64 = betas.iter().map(|v| v[j]).sum::<f64>() / ok as f64;
            let var: f64 =
                betas.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (ok - 1) as f64;
            se[j] = var.sqrt();
            selection_freq[j] =
                betas.iter().filter(|v| v[j] != 0.0).count() as f64 / ok as f64;
        }
    }

    Ok(BootstrapReport {
        replicates: b,
        mode: config.mode,
        se,
        selection_freq,
        seed,
        failures,
        reliable: failures * 2 < b,
    })
}

fn replicate_fit(
    data: &Dataset,
    cs: &ConstraintSet,
    config: &BootstrapConfig,
    rep_seed: u64,
) -> Result<DVector<f64>> {
    let spec = match config.mode {
        BootstrapMode::FixedS => config.spec.clone(),
        BootstrapMode::ReTuned => {
            let grid = tuning::make_s_grid(data, cs, config.grid_count, &config.spec)?;
            let curve = match (config.family, config.criterion) {
                (BootstrapFamily::Gaussian, Criterion::Cv) => {
                    let folds = config.folds.unwrap_or(data.n());
                    tuning::cross_validate(data, cs, &grid, folds, &config.spec, rep_seed)?
                }
                (BootstrapFamily::Gaussian, Criterion::Gcv) => {
                    tuning::gcv_curve(data, cs, &grid, &config.spec)?
                }
                (BootstrapFamily::Gaussian, Criterion::Bic) => {
                    tuning::bic_curve(data, cs, &grid, &config.spec)?
                }
                (BootstrapFamily::Logistic, crit) => {
                    let surrogate =
                        lsa::fit_unpenalized(lsa::Family::Logistic, data, &lsa::LsaOptions::default())?;
                    tuning::surrogate_curve(&surrogate, cs, &grid, &config.spec, crit)?
                }
            };
            let mut spec = config.spec.clone();
            spec.s = curve.selected_s;
            spec
        }
    };
    match config.family {
        BootstrapFamily::Gaussian => Ok(estimator::fit_constrained(data, cs, &spec)?.beta),
        BootstrapFamily::Logistic => {
            let surrogate = lsa::fit_unpenalized(lsa::Family::Logistic, data, &lsa::LsaOptions::default())?;
            Ok(lsa::fit_lsa_constrained(&surrogate, cs, &spec)?.beta)
        }
    }
}
