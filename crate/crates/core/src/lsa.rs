//! Least-squares approximation of smooth losses.
//!
//! A smooth loss `L_n` is replaced near its unpenalized minimizer
//! `beta_tilde` by the quadratic `(beta - beta_tilde)' P (beta -
//! beta_tilde)` with curvature `P = L''_n(beta_tilde) / n`, so the
//! constrained-lasso machinery applies unchanged to logistic regression
//! (and to any externally supplied `(beta_tilde, P)` pair).
//!
//! Loss conventions are pinned so the curvature is reproducible:
//! Gaussian `L_n = sum (y - x'beta)^2` (so `P = 2 X'X / n`), logistic
//! `L_n = -2 log-likelihood` (deviance scale, so `P = 2 X'WX / n` with
//! `W = diag(pi (1 - pi))`).

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::constraints::ConstraintSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{self, FitResult, FitSpec, QuadObjective, SolverInfo};
use crate::inference;
use crate::initializer::{self, McConfig};

/// Loss family of a surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Logistic,
    /// Supplied from outside (JSON ingestion).
    External,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Logistic => "logistic",
            Family::External => "external",
        }
    }
}

/// Options for the unpenalized fit.
#[derive(Debug, Clone)]
pub struct LsaOptions {
    /// Max-norm tolerance on the loss gradient at the reported minimizer.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Coefficient magnitude treated as divergence (separation guard).
    pub divergence_bound: f64,
}

impl Default for LsaOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 100,
            divergence_bound: 1e3,
        }
    }
}

/// The quadratic surrogate: unpenalized minimizer, curvature, and sample
/// count. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct LsaSurrogate {
    pub beta_tilde: DVector<f64>,
    /// `P = L''_n(beta_tilde) / n`, symmetric positive semidefinite.
    pub precision: DMatrix<f64>,
    pub n: usize,
    /// Loss value at `beta_tilde` (absent for external surrogates).
    pub loss_value: Option<f64>,
    pub family: Family,
}

impl LsaSurrogate {
    pub fn p(&self) -> usize {
        self.beta_tilde.len()
    }

    fn validate(beta_tilde: DVector<f64>, precision: DMatrix<f64>, n: usize, family: Family, loss_value: Option<f64>) -> Result<Self> {
        let p = beta_tilde.len();
        if precision.nrows() != p || precision.ncols() != p {
            return Err(Error::Dimension(format!(
                "precision is {}x{} but beta_tilde has length {p}",
                precision.nrows(),
                precision.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::Dimension("sample count must be positive".into()));
        }
        let precision = (&precision + precision.transpose()) * 0.5;
        let scale = precision.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let min_eig = precision
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        if min_eig < -1e-8 * scale {
            return Err(Error::Dimension(format!(
                "precision is not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self {
            beta_tilde,
            precision,
            n,
            loss_value,
            family,
        })
    }
}

/// The surrogate loss `(beta - beta_tilde)' P (beta - beta_tilde)`.
pub fn lsa_loss(surrogate: &LsaSurrogate, beta: &DVector<f64>) -> Result<f64> {
    if beta.len() != surrogate.p() {
        return Err(Error::Dimension(format!(
            "beta has length {} but surrogate has {}",
            beta.len(),
            surrogate.p()
        )));
    }
    let d = beta - &surrogate.beta_tilde;
    Ok(d.dot(&(&surrogate.precision * &d)))
}

/// Fits the unpenalized model and returns its quadratic surrogate. The
/// design is used exactly as given (include an explicit ones column for an
/// intercept).
pub fn fit_unpenalized(family: Family, data: &Dataset, opts: &LsaOptions) -> Result<LsaSurrogate> {
    match family {
        Family::Gaussian => {
            let (beta, _) = estimator::ols_fit(data, false)?;
            let n = data.n();
            let precision = data.x.transpose() * &data.x * (2.0 / n as f64);
            let residual = &data.y - &data.x * &beta;
            LsaSurrogate::validate(
                beta,
                precision,
                n,
                Family::Gaussian,
                Some(residual.norm_squared()),
            )
        }
        Family::Logistic => fit_logistic(data, opts),
        Family::External => Err(Error::Data(
            "external surrogates are ingested from JSON, not fitted".into(),
        )),
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Deviance `-2 log-likelihood` at linear predictor `eta`.
fn deviance(y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    let mut d = 0.0;
    for i in 0..y.len() {
        // -2 [y eta - log(1 + e^eta)] in an overflow-safe form.
        let t = eta[i];
        let log1pe = if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
        d += -2.0 * (y[i] * t - log1pe);
    }
    d
}

/// Iteratively reweighted least squares on the deviance scale.
fn fit_logistic(data: &Dataset, opts: &LsaOptions) -> Result<LsaSurrogate> {
    let n = data.n();
    let p = data.p();
    if data.y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Data(
            "logistic responses must be 0 or 1".into(),
        ));
    }

    let mut beta = DVector::zeros(p);
    let mut eta = DVector::zeros(n);
    let mut dev = deviance(&data.y, &eta);
    let mut converged = false;

    for _ in 0..opts.max_iter {
        let pi = eta.map(sigmoid);
        // Gradient of the deviance: -2 X'(y - pi).
        let grad = data.x.transpose() * (&data.y - &pi) * -2.0;
        if grad.amax() <= opts.grad_tol {
            converged = true;
            break;
        }
        if beta.amax() > opts.divergence_bound {
            return Err(Error::SeparationDetected(opts.divergence_bound));
        }

        // Newton direction: (X'WX) delta = X'(y - pi).
        let mut xtwx = DMatrix::zeros(p, p);
        for i in 0..n {
            let w = (pi[i] * (1.0 - pi[i])).max(1e-10);
            let row = data.x.row(i);
            for a in 0..p {
                for b in 0..p {
                    xtwx[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        let rhs = data.x.transpose() * (&data.y - &pi);
        let delta = xtwx
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .or_else(|| xtwx.clone().lu().solve(&rhs))
            .ok_or_else(|| Error::Data("singular weighted Gram matrix".into()))?;

        // Step halving keeps the deviance nonincreasing.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &beta + &delta * step;
            let cand_eta = &data.x * &cand;
            let cand_dev = deviance(&data.y, &cand_eta);
            if cand_dev <= dev + 1e-12 {
                beta = cand;
                eta = cand_eta;
                dev = cand_dev;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    if !converged {
        let pi = eta.map(sigmoid);
        let grad = data.x.transpose() * (&data.y - &pi) * -2.0;
        if grad.amax() > opts.grad_tol {
            if beta.amax() > opts.divergence_bound {
                return Err(Error::SeparationDetected(opts.divergence_bound));
            }
            return Err(Error::NonConvergence(opts.max_iter));
        }
    }

    // Curvature of the deviance: 2 X'WX, so P = 2 X'WX / n.
    let pi = eta.map(sigmoid);
    let mut xtwx = DMatrix::zeros(p, p);
    for i in 0..n {
        let w = pi[i] * (1.0 - pi[i]);
        let row = data.x.row(i);
        for a in 0..p {
            for b in 0..p {
                xtwx[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    let precision = xtwx * (2.0 / n as f64);
    LsaSurrogate::validate(beta, precision, n, Family::Logistic, Some(dev))
}

/// Runs constrained lasso on the surrogate: minimizes `lsa_loss` subject
/// to the L1 budget and `g(beta) <= 0`, with the same feasibility and
/// sparsity contracts as the raw-data fit. The reported objective is the
/// surrogate loss.
pub fn fit_lsa_constrained(
    surrogate: &LsaSurrogate,
    cs: &ConstraintSet,
    spec: &FitSpec,
) -> Result<FitResult> {
    let p = surrogate.p();
    if cs.dim() != p {
        return Err(Error::Dimension(format!(
            "constraints have dimension {} but surrogate has {p}",
            cs.dim()
        )));
    }
    spec.validate(p)?;

    let obj = QuadObjective {
        h: surrogate.precision.clone(),
        g: &surrogate.precision * &surrogate.beta_tilde,
    };
    let weights = match &spec.weights {
        Some(w) => w.clone(),
        None => DVector::from_element(p, 1.0),
    };

    let start = if cs.n_nonlinear() > 0 {
        let sigma = invert_psd(&surrogate.precision)?;
        let cfg = McConfig::new(surrogate.beta_tilde.clone(), sigma, spec.mc_draws, spec.mc_seed)?;
        match initializer::mc_initial_point(&cfg, spec.s, cs)? {
            Some(z) => Some(z),
            None => Some(estimator::project_onto_linear(cs, &surrogate.beta_tilde)?),
        }
    } else {
        None
    };

    let fit = estimator::solve_quadratic_shared(&obj, cs, spec.s, &weights, start.as_ref(), spec)?;
    let (beta, zero_set) = estimator::sparsify_feasible(&fit.gamma, cs, spec, true)?;

    let objective = lsa_loss(surrogate, &beta)?;
    let l1_norm: f64 = (0..p).map(|j| weights[j] * beta[j].abs()).sum();
    let active_constraints = estimator::active_constraints(cs, &beta, spec.qp.feasibility_tol)?;

    let mut result = FitResult {
        beta,
        intercept: 0.0,
        l1_norm,
        objective,
        active_constraints,
        zero_set,
        df: 0,
        solver_info: SolverInfo {
            qp_iterations: fit.qp_iterations,
            linearization_rounds: fit.rounds,
            status: fit.status,
            l1_multiplier: fit.l1_multiplier,
            jitter: fit.jitter,
            standardized: false,
        },
        warnings: Vec::new(),
    };
    result.df = inference::degrees_of_freedom(&result, cs, spec.qp.feasibility_tol)?;
    Ok(result)
}

fn invert_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m.nrows();
    match m.clone().cholesky() {
        Some(ch) => Ok(ch.inverse()),
        None => {
            let jitter = (1e-10 * m.trace() / p.max(1) as f64).max(1e-300);
            (m + DMatrix::identity(p, p) * jitter)
                .cholesky()
                .map(|ch| ch.inverse())
                .ok_or_else(|| Error::Dimension("curvature matrix is not factorizable".into()))
        }
    }
}

#[derive(Deserialize)]
struct SurrogateFile {
    beta_tilde: Vec<f64>,
    precision: Vec<Vec<f64>>,
    n: usize,
}

/// Ingests an externally built surrogate from JSON:
/// `{"beta_tilde": [...], "precision": [[...]], "n": int}`.
pub fn surrogate_from_json(text: &str) -> Result<LsaSurrogate> {
    let file: SurrogateFile =
        serde_json::from_str(text).map_err(|e| Error::Data(format!("surrogate JSON: {e}")))?;
    let p = file.beta_tilde.len();
    if file.precision.len() != p || file.precision.iter().any(|row| row.len() != p) {
        return Err(Error::Data(format!(
            "surrogate precision must be {p}x{p}"
        )));
    }
    let beta = DVector::from_vec(file.beta_tilde);
    let precision = DMatrix::from_fn(p, p, |i, j| file.precision[i][j]);
    if beta.iter().any(|v| !v.is_finite()) || precision.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite entry in surrogate".into()));
    }
    LsaSurrogate::validate(beta, precision, file.n, Family::External, None)
}
