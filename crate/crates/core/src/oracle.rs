//! Brute-force verifiers.
//!
//! Deliberately naive and separate from the production solver path: the
//! only shared numerics are elementary matrix products. These back the
//! frozen test fixtures and the property suites; the CLI exposes them only
//! through a hidden subcommand for fixture regeneration.

use nalgebra::DVector;

use crate::constraints::ConstraintSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::FitResult;

/// Axis-aligned scan grid.
#[derive(Debug, Clone)]
pub struct GridSpec {
    /// Per-coordinate inclusive bounds.
    pub bounds: Vec<(f64, f64)>,
    pub resolution: f64,
    /// Safety cap on the total number of grid points.
    pub max_points: u64,
}

impl GridSpec {
    pub fn new(bounds: Vec<(f64, f64)>, resolution: f64) -> Self {
        Self {
            bounds,
            resolution,
            max_points: 100_000_000,
        }
    }

    /// Symmetric box `[-half_width, half_width]^p`.
    pub fn symmetric(p: usize, half_width: f64, resolution: f64) -> Self {
        Self::new(vec![(-half_width, half_width); p], resolution)
    }

    fn counts(&self) -> Result<Vec<usize>> {
        if self.resolution.is_nan() || self.resolution <= 0.0 {
            return Err(Error::Oracle("resolution must be positive".into()));
        }
        let mut counts = Vec::with_capacity(self.bounds.len());
        let mut total: u64 = 1;
        for &(lo, hi) in &self.bounds {
            if hi < lo {
                return Err(Error::Oracle("empty bound interval".into()));
            }
            let c = ((hi - lo) / self.resolution + 1e-9).floor() as u64 + 1;
            total = total.saturating_mul(c);
            if total > self.max_points {
                return Err(Error::Oracle(format!(
                    "grid exceeds max_points ({})",
                    self.max_points
                )));
            }
            counts.push(c as usize);
        }
        Ok(counts)
    }
}

/// Exhaustive scan of the grid: keeps feasible points (unweighted L1
/// budget and `g <= 0`) and returns the RSS minimizer, ties resolved to
/// the lexicographically smallest point. No intercept; the model is
/// `y ~ X beta` exactly as given.
pub fn brute_force_fit(
    data: &Dataset,
    cs: &ConstraintSet,
    s: f64,
    grid: &GridSpec,
) -> Result<(DVector<f64>, f64)> {
    let p = data.p();
    if p > 4 {
        return Err(Error::Oracle(format!("dimension {p} exceeds the p <= 4 guard")));
    }
    if grid.bounds.len() != p {
        return Err(Error::Oracle(format!(
            "grid has {} bound pairs for dimension {p}",
            grid.bounds.len()
        )));
    }
    if cs.dim() != p {
        return Err(Error::Oracle(format!(
            "constraints have dimension {} for design with {p} columns",
            cs.dim()
        )));
    }
    let counts = grid.counts()?;

    // RSS via the precomputed quadratic form (elementary products only):
    // rss(beta) = beta' H beta - 2 h' beta + y'y.
    let h_mat = data.x.transpose() * &data.x;
    let h_vec = data.x.transpose() * &data.y;
    let yty = data.y.norm_squared();

    // Flattened constraint views keep the scan loop allocation free.
    let (lin_a, lin_rhs) = cs.lin_ineq();
    let (eq_a, eq_rhs) = cs.lin_eq();
    let nonlinear = cs.nonlinear();

    let mut idx = vec![0usize; p];
    let mut beta = DVector::zeros(p);
    let mut best: Option<(f64, DVector<f64>)> = None;
    let feas_tol = 1e-9;

    'outer: loop {
        for j in 0..p {
            beta[j] = grid.bounds[j].0 + idx[j] as f64 * grid.resolution;
        }
        let l1: f64 = beta.iter().map(|v| v.abs()).sum();
        let mut feasible = l1 <= s + 1e-12;
        if feasible {
            for r in 0..lin_a.nrows() {
                let mut v = -lin_rhs[r];
                for j in 0..p {
                    v += lin_a[(r, j)] * beta[j];
                }
                if v > feas_tol {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible {
            for r in 0..eq_a.nrows() {
                let mut v = -eq_rhs[r];
                for j in 0..p {
                    v += eq_a[(r, j)] * beta[j];
                }
                if v.abs() > feas_tol {
                    feasible = false;
                    break;
                }
            }
            for nl in nonlinear {
                if nl.value(&beta) > feas_tol {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible {
            let mut quad = 0.0;
            for a in 0..p {
                let mut row = 0.0;
                for b in 0..p {
                    row += h_mat[(a, b)] * beta[b];
                }
                quad += beta[a] * row - 2.0 * h_vec[a] * beta[a];
            }
            let rss = quad + yty;
            // Strict improvement keeps the first (lexicographically
            // smallest) point among ties.
            if best.as_ref().is_none_or(|(b, _)| rss < *b) {
                best = Some((rss, beta.clone()));
            }
        }

        // Odometer: last coordinate fastest = lexicographic order.
        let mut j = p;
        loop {
            if j == 0 {
                break 'outer;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < counts[j] {
                break;
            }
            idx[j] = 0;
        }
    }

    match best {
        Some((rss, beta)) => Ok((beta, rss)),
        None => Err(Error::Oracle("no feasible grid point".into())),
    }
}

/// Literal leave-one-out double loop over `(s, j)`: no sharing, no warm
/// starts. Entries are `None` when any fold fit failed for that budget.
pub fn naive_loo_cv<F>(
    data: &Dataset,
    cs: &ConstraintSet,
    grid_of_s: &[f64],
    fit_fn: F,
) -> Result<Vec<Option<f64>>>
where
    F: Fn(&Dataset, &ConstraintSet, f64) -> Result<FitResult>,
{
    let n = data.n();
    if n > 200 {
        return Err(Error::Oracle(format!("n = {n} exceeds the n <= 200 guard")));
    }
    let mut out = Vec::with_capacity(grid_of_s.len());
    for &s in grid_of_s {
        let mut pe = 0.0;
        let mut ok = true;
        for j in 0..n {
            let train = data.without_row(j);
            match fit_fn(&train, cs, s) {
                Ok(fit) => {
                    let pred = fit.predict_row(&data.x.row(j).transpose());
                    let e = data.y[j] - pred;
                    pe += e * e;
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        out.push(if ok { Some(pe) } else { None });
    }
    Ok(out)
}
