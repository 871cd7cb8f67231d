//! Budget selection: cross-validation, GCV, and a BIC-type criterion over
//! an automatically constructed grid of budgets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::ConstraintSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{self, FitSpec};
use crate::lsa::LsaSurrogate;

/// Tuning criterion. Folds for CV are passed separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Cv,
    Gcv,
    Bic,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Cv => "cv",
            Criterion::Gcv => "gcv",
            Criterion::Bic => "bic",
        }
    }
}

/// Criterion values over an ascending budget grid, with the selected
/// budget. Invalid grid points (failed fits, degenerate criteria) are
/// excluded from the argmin; ties break toward smaller budgets.
#[derive(Debug, Clone)]
pub struct TuningCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    pub criterion: Criterion,
    pub folds: Option<usize>,
    pub selected_index: usize,
    pub selected_s: f64,
}

impl TuningCurve {
    fn select(
        grid: Vec<f64>,
        values: Vec<f64>,
        valid: Vec<bool>,
        criterion: Criterion,
        folds: Option<usize>,
    ) -> Result<Self> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..grid.len() {
            if !valid[i] {
                continue;
            }
            if best.is_none_or(|(_, v)| values[i] < v) {
                best = Some((i, values[i]));
            }
        }
        let (selected_index, _) = best.ok_or(Error::TuningFailed)?;
        Ok(Self {
            selected_s: grid[selected_index],
            grid,
            values,
            valid,
            criterion,
            folds,
            selected_index,
        })
    }
}

/// `count` budgets spaced uniformly on `[0, S_max]` (endpoints included),
/// where `S_max` is the L1 size of the unpenalized estimate projected onto
/// the linear prior constraints. Only budget-relevant coordinates (weight
/// greater than zero) contribute to `S_max`.
pub fn make_s_grid(
    data: &Dataset,
    cs: &ConstraintSet,
    count: usize,
    spec: &FitSpec,
) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::Dimension("grid needs at least 2 points".into()));
    }
    let p = data.p();
    let in_constraint_space = cs.dim() == p + 1;
    let intercept = if data.has_intercept_column {
        false
    } else if in_constraint_space {
        true
    } else {
        spec.intercept
    };
    let (beta_ols, alpha_ols) = estimator::ols_fit(data, intercept)?;

    // Projection onto the linear prior rows, in the constraint space.
    let reference = if cs.n_lin_ineq() > 0 || cs.n_lin_eq() > 0 {
        let point = if in_constraint_space {
            let mut full = nalgebra::DVector::zeros(p + 1);
            full[0] = alpha_ols;
            for j in 0..p {
                full[j + 1] = beta_ols[j];
            }
            full
        } else {
            beta_ols.clone()
        };
        let projected = estimator::project_onto_linear(cs, &point)?;
        if in_constraint_space {
            nalgebra::DVector::from_fn(p, |j, _| projected[j + 1])
        } else {
            projected
        }
    } else {
        beta_ols
    };

    let weights = match &spec.weights {
        Some(w) => w.clone(),
        None => {
            let mut w = nalgebra::DVector::from_element(p, 1.0);
            if let Some(j) = data.intercept_column() {
                w[j] = 0.0;
            }
            w
        }
    };
    let s_max: f64 = (0..p)
        .filter(|&j| weights[j] > 0.0)
        .map(|j| reference[j].abs())
        .sum();

    let step = s_max / (count - 1) as f64;
    Ok((0..count).map(|k| k as f64 * step).collect())
}

/// Fold assignment: identity for leave-one-out, seeded shuffle into
/// near-equal chunks otherwise.
fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    if folds == n {
        return (0..n).map(|i| vec![i]).collect();
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(order[at..at + size].to_vec());
        at += size;
    }
    out
}

/// Cross-validated prediction error over the grid. With `folds = n` this
/// is the leave-one-out scheme: for each budget and each row, fit on the
/// remaining rows and accumulate the squared prediction error on the
/// held-out row; the criterion is the sum (not the mean). A fold whose fit
/// fails marks that budget invalid.
pub fn cross_validate(
    data: &Dataset,
    cs: &ConstraintSet,
    grid: &[f64],
    folds: usize,
    spec: &FitSpec,
    seed: u64,
) -> Result<TuningCurve> {
    let n = data.n();
    if grid.is_empty() {
        return Err(Error::Dimension("empty grid".into()));
    }
    if folds < 2 || folds > n {
        return Err(Error::Dimension(format!(
            "folds must be in 2..={n}, got {folds}"
        )));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Dimension("grid must be ascending".into()));
    }

    let assignment = fold_assignment(n, folds, seed);
    let mut pe = vec![0.0f64; grid.len()];
    let mut valid = vec![true; grid.len()];

    for held_out in &assignment {
        let train_rows: Vec<usize> = (0..n).filter(|i| !held_out.contains(i)).collect();
        let train = data.subset(&train_rows);
        for (gi, &s) in grid.iter().enumerate() {
            if !valid[gi] {
                continue;
            }
            let mut fold_spec = spec.clone();
            fold_spec.s = s;
            match estimator::fit_constrained(&train, cs, &fold_spec) {
                Ok(fit) => {
                    for &row in held_out {
                        let pred = fit.predict_row(&data.x.row(row).transpose());
                        let err = data.y[row] - pred;
                        pe[gi] += err * err;
                    }
                }
                Err(_) => valid[gi] = false,
            }
        }
    }

    TuningCurve::select(grid.to_vec(), pe, valid, Criterion::Cv, Some(folds))
}

/// GCV curve: `RSS(s) / (n (1 - df(s)/n)^2)` with the counting degrees of
/// freedom; points with `df >= n` are invalid.
pub fn gcv_curve(
    data: &Dataset,
    cs: &ConstraintSet,
    grid: &[f64],
    spec: &FitSpec,
) -> Result<TuningCurve> {
    full_data_curve(data, cs, grid, spec, Criterion::Gcv)
}

/// BIC-type curve: `n log(RSS(s)/n) + log(n) df(s)`; zero-RSS points are
/// invalid (log singularity).
pub fn bic_curve(
    data: &Dataset,
    cs: &ConstraintSet,
    grid: &[f64],
    spec: &FitSpec,
) -> Result<TuningCurve> {
    full_data_curve(data, cs, grid, spec, Criterion::Bic)
}

fn full_data_curve(
    data: &Dataset,
    cs: &ConstraintSet,
    grid: &[f64],
    spec: &FitSpec,
    criterion: Criterion,
) -> Result<TuningCurve> {
    if grid.is_empty() {
        return Err(Error::Dimension("empty grid".into()));
    }
    let n = data.n() as f64;
    let mut values = vec![0.0f64; grid.len()];
    let mut valid = vec![true; grid.len()];
    for (gi, &s) in grid.iter().enumerate() {
        let mut point_spec = spec.clone();
        point_spec.s = s;
        match estimator::fit_constrained(data, cs, &point_spec) {
            Ok(fit) => {
                let rss = fit.objective;
                let df = fit.df as f64;
                match criterion {
                    Criterion::Gcv => {
                        if df >= n {
                            valid[gi] = false;
                        } else {
                            let denom = n * (1.0 - df / n).powi(2);
                            values[gi] = rss / denom;
                        }
                    }
                    Criterion::Bic => {
                        if rss <= 0.0 {
                            valid[gi] = false;
                        } else {
                            values[gi] = n * (rss / n).ln() + n.ln() * df;
                        }
                    }
                    Criterion::Cv => unreachable!(),
                }
            }
            Err(_) => valid[gi] = false,
        }
    }
    TuningCurve::select(grid.to_vec(), values, valid, criterion, None)
}

/// Criterion curve on a quadratic surrogate (GCV or BIC; CV is undefined on
/// surrogate scale). The surrogate loss plays the role of `RSS/n` via
/// `n/2 * loss`.
pub fn surrogate_curve(
    surrogate: &LsaSurrogate,
    cs: &ConstraintSet,
    grid: &[f64],
    spec: &FitSpec,
    criterion: Criterion,
) -> Result<TuningCurve> {
    if criterion == Criterion::Cv {
        return Err(Error::Dimension(
            "cross-validation is not defined on the surrogate scale; use gcv or bic".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::Dimension("empty grid".into()));
    }
    let n = surrogate.n as f64;
    let mut values = vec![0.0f64; grid.len()];
    let mut valid = vec![true; grid.len()];
    for (gi, &s) in grid.iter().enumerate() {
        let mut point_spec = spec.clone();
        point_spec.s = s;
        match crate::lsa::fit_lsa_constrained(surrogate, cs, &point_spec) {
            Ok(fit) => {
                let pseudo_rss = 0.5 * n * fit.objective;
                let df = fit.df as f64;
                match criterion {
                    Criterion::Gcv => {
                        if df >= n {
                            valid[gi] = false;
                        } else {
                            values[gi] = pseudo_rss / (n * (1.0 - df / n).powi(2));
                        }
                    }
                    Criterion::Bic => {
                        values[gi] = pseudo_rss + n.ln() * df;
                    }
                    Criterion::Cv => unreachable!(),
                }
            }
            Err(_) => valid[gi] = false,
        }
    }
    TuningCurve::select(grid.to_vec(), values, valid, criterion, None)
}
