//! Constrained lasso fitting.
//!
//! `fit_constrained` minimizes `||y - X beta||^2` subject to the L1 budget
//! `sum_j w_j |beta_j| <= s` and the prior constraints `g(beta) <= 0`;
//! `fit_penalized` solves the multiplier form with an L1 penalty and fixed
//! constraint multipliers instead of hard bounds.
//!
//! Both reduce to dense QPs through the split `beta = beta+ - beta-` with
//! `beta+, beta- >= 0`, which turns the budget into a single linear row.
//! Nonlinear constraints enter by sequential linearization: the QP is
//! re-solved with halfspace cuts collected at violated iterates until the
//! iterate satisfies the true constraints.

use nalgebra::{DMatrix, DVector};

use crate::constraints::ConstraintSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference;
use crate::initializer::{self, McConfig};
use crate::qp::{solve_qp, QpProblem, SolveStatus, SolverOptions};

/// Fit configuration. `s` is the L1 budget; `f64::INFINITY` disables it.
#[derive(Debug, Clone)]
pub struct FitSpec {
    pub s: f64,
    /// Per-coefficient budget weights over the feature columns; `None`
    /// means all ones (an explicit intercept column gets weight zero).
    pub weights: Option<DVector<f64>>,
    /// Coefficients with `|beta_j| <= sparsity_tol` are set to exactly 0.
    pub sparsity_tol: f64,
    pub standardize: bool,
    pub intercept: bool,
    /// Sequential-linearization round cap.
    pub sl_max_rounds: usize,
    /// Convergence tolerance on the iterate between linearization rounds.
    pub sl_tol: f64,
    /// Monte Carlo initializer draw count (used when nonlinear constraints
    /// are present).
    pub mc_draws: usize,
    pub mc_seed: u64,
    pub qp: SolverOptions,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            s: f64::INFINITY,
            weights: None,
            sparsity_tol: 1e-6,
            standardize: true,
            intercept: true,
            sl_max_rounds: 30,
            sl_tol: 1e-8,
            mc_draws: 100_000,
            mc_seed: 0,
            qp: SolverOptions::default(),
        }
    }
}

impl FitSpec {
    pub fn with_budget(s: f64) -> Self {
        Self {
            s,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self, p: usize) -> Result<()> {
        if self.s.is_nan() || self.s < 0.0 {
            return Err(Error::Dimension("budget s must be nonnegative".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != p {
                return Err(Error::Dimension(format!(
                    "{} weights for {p} feature columns",
                    w.len()
                )));
            }
            if w.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::Dimension("weights must be finite and >= 0".into()));
            }
        }
        let bad_tol = |v: f64| v.is_nan() || v < 0.0;
        if bad_tol(self.sparsity_tol) || self.sl_tol.is_nan() || self.sl_tol <= 0.0 {
            return Err(Error::Dimension("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Penalty configuration for [`fit_penalized`].
#[derive(Debug, Clone)]
pub enum L1Penalty {
    /// One tuning parameter shared by every coefficient.
    Scalar(f64),
    /// Per-coefficient tuning parameters over the feature columns.
    Weights(DVector<f64>),
}

/// Solver diagnostics attached to every fit.
#[derive(Debug, Clone)]
pub struct SolverInfo {
    pub qp_iterations: usize,
    pub linearization_rounds: usize,
    pub status: SolveStatus,
    /// Dual multiplier of the budget row when the budget was present;
    /// `fit_penalized` at this value reproduces the constrained fit.
    pub l1_multiplier: Option<f64>,
    /// Ridge applied to QP factorizations (semidefinite curvature).
    pub jitter: f64,
    /// Whether columns were actually standardized.
    pub standardized: bool,
}

/// A fitted model on the original variable scale.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: DVector<f64>,
    pub intercept: f64,
    /// `sum_j w_j |beta_j|` over the penalized coordinates.
    pub l1_norm: f64,
    /// Residual sum of squares (surrogate loss for LSA fits).
    pub objective: f64,
    /// Indices of constraints active at the solution, in enumeration
    /// order: linear inequalities, nonlinear constraints, then equalities
    /// (equalities are always active).
    pub active_constraints: Vec<usize>,
    /// 0-based indices of coefficients set to exactly zero.
    pub zero_set: Vec<usize>,
    pub df: usize,
    pub solver_info: SolverInfo,
    pub warnings: Vec<String>,
}

impl FitResult {
    /// Prediction for one design row.
    pub fn predict_row(&self, row: &DVector<f64>) -> f64 {
        self.intercept + self.beta.dot(row)
    }
}

/// Sets entries with `|beta_j| <= tol` to exactly zero; returns the new
/// vector and the 0-based index set of zeros.
pub fn sparsify(beta: &DVector<f64>, tol: f64) -> (DVector<f64>, Vec<usize>) {
    let mut out = beta.clone();
    let mut zero_set = Vec::new();
    for j in 0..out.len() {
        if out[j].abs() <= tol {
            out[j] = 0.0;
            zero_set.push(j);
        }
    }
    (out, zero_set)
}

/// How the intercept is handled for a particular data/constraint pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InterceptMode {
    /// No intercept at all.
    None,
    /// Estimated internally by centering; not part of the constraint space.
    Internal,
    /// The dataset carries an explicit all-ones column at this index.
    ExplicitColumn(usize),
    /// The constraint file has `p + 1` coefficients; coordinate 0 of the
    /// constraint space is the intercept.
    InConstraints,
}

/// Data prepared for the solver coordinate space.
struct Prepared {
    /// Design in solver coordinates (centered/scaled as applicable).
    z: DMatrix<f64>,
    /// Response (centered when the intercept is internal).
    yc: DVector<f64>,
    x_mean: DVector<f64>,
    y_mean: f64,
    scale: DVector<f64>,
    mode: InterceptMode,
    /// Budget weights in solver coordinates.
    weights: DVector<f64>,
    /// Constraints mapped to solver coordinates.
    cs_solver: ConstraintSet,
    standardized: bool,
    warnings: Vec<String>,
}

impl Prepared {
    fn dim(&self) -> usize {
        self.z.ncols()
    }

    /// Maps solver coordinates back to `(beta, intercept)` on the original
    /// scale.
    fn recover(&self, gamma: &DVector<f64>) -> (DVector<f64>, f64) {
        match self.mode {
            InterceptMode::InConstraints => {
                let p = gamma.len() - 1;
                let beta = DVector::from_fn(p, |j, _| gamma[j + 1]);
                (beta, gamma[0])
            }
            _ => {
                let beta = DVector::from_fn(gamma.len(), |j, _| gamma[j] / self.scale[j]);
                let alpha = match self.mode {
                    InterceptMode::Internal => self.y_mean - self.x_mean.dot(&beta),
                    _ => 0.0,
                };
                (beta, alpha)
            }
        }
    }

    /// Full coordinate vector in the constraint space.
    fn constraint_coords(&self, beta: &DVector<f64>, intercept: f64) -> DVector<f64> {
        match self.mode {
            InterceptMode::InConstraints => {
                let mut full = DVector::zeros(beta.len() + 1);
                full[0] = intercept;
                for j in 0..beta.len() {
                    full[j + 1] = beta[j];
                }
                full
            }
            _ => beta.clone(),
        }
    }
}

fn prepare(data: &Dataset, cs: &ConstraintSet, spec: &FitSpec) -> Result<Prepared> {
    let n = data.n();
    let p = data.p();
    let mut warnings = Vec::new();

    let mode = if cs.dim() == p + 1 {
        if data.has_intercept_column {
            return Err(Error::Data(
                "constraint dimension p+1 cannot be combined with an explicit intercept column"
                    .into(),
            ));
        }
        InterceptMode::InConstraints
    } else if cs.dim() != p {
        return Err(Error::Dimension(format!(
            "constraints have dimension {} but the design has {p} columns",
            cs.dim()
        )));
    } else if let Some(j) = data.intercept_column() {
        InterceptMode::ExplicitColumn(j)
    } else if spec.intercept {
        InterceptMode::Internal
    } else {
        InterceptMode::None
    };

    let mut standardize = spec.standardize;
    if standardize && cs.n_nonlinear() > 0 {
        standardize = false;
        warnings.push("standardization disabled: nonlinear constraints present".into());
    }
    if standardize && !matches!(mode, InterceptMode::Internal | InterceptMode::None) {
        standardize = false;
        warnings.push("standardization disabled: intercept is part of the constraint space".into());
    }

    // Center only in internal-intercept mode.
    let (x_mean, y_mean) = if mode == InterceptMode::Internal {
        let xm = DVector::from_fn(p, |j, _| data.x.column(j).sum() / n as f64);
        let ym = data.y.sum() / n as f64;
        (xm, ym)
    } else {
        (DVector::zeros(p), 0.0)
    };

    let mut z = DMatrix::from_fn(n, p, |i, j| data.x[(i, j)] - x_mean[j]);
    let yc = DVector::from_fn(n, |i, _| data.y[i] - y_mean);

    let mut scale = DVector::from_element(p, 1.0);
    if standardize {
        for j in 0..p {
            let rms = (z.column(j).norm_squared() / n as f64).sqrt();
            if rms > 0.0 {
                scale[j] = rms;
                for i in 0..n {
                    z[(i, j)] /= rms;
                }
            }
        }
    }

    // Budget weights over feature columns, then mapped to solver coords.
    let mut w_features = match &spec.weights {
        Some(w) => w.clone(),
        None => DVector::from_element(p, 1.0),
    };
    if let InterceptMode::ExplicitColumn(j) = mode {
        if spec.weights.is_none() {
            w_features[j] = 0.0;
        }
    }
    for j in 0..p {
        w_features[j] /= scale[j];
    }

    let (z, weights, cs_solver) = if mode == InterceptMode::InConstraints {
        let mut z_aug = DMatrix::from_element(n, p + 1, 1.0);
        z_aug.view_mut((0, 1), (n, p)).copy_from(&z);
        let mut w_aug = DVector::zeros(p + 1);
        for j in 0..p {
            w_aug[j + 1] = w_features[j];
        }
        (z_aug, w_aug, cs.clone())
    } else {
        (z, w_features, rescale_constraints(cs, &scale)?)
    };

    Ok(Prepared {
        z,
        yc,
        x_mean,
        y_mean,
        scale,
        mode,
        weights,
        cs_solver,
        standardized: standardize,
        warnings,
    })
}

/// Rewrites linear constraint rows for scaled columns; a no-op for unit
/// scales. Nonlinear constraints only occur with unit scales.
fn rescale_constraints(cs: &ConstraintSet, scale: &DVector<f64>) -> Result<ConstraintSet> {
    if scale.iter().all(|&v| v == 1.0) {
        return Ok(cs.clone());
    }
    let p = cs.dim();
    let mut out = ConstraintSet::empty(p);
    let (a, rhs) = cs.lin_ineq();
    for r in 0..a.nrows() {
        let row: Vec<f64> = (0..p).map(|j| a[(r, j)] / scale[j]).collect();
        out.push_lin_ineq(&row, rhs[r])?;
    }
    let (e, erhs) = cs.lin_eq();
    for r in 0..e.nrows() {
        let row: Vec<f64> = (0..p).map(|j| e[(r, j)] / scale[j]).collect();
        out.push_lin_eq(&row, erhs[r])?;
    }
    debug_assert!(cs.n_nonlinear() == 0);
    Ok(out)
}

/// Quadratic objective `beta' H beta - 2 g' beta` (plus a constant that
/// never affects the minimizer) over the solver coordinate space.
pub(crate) struct QuadObjective {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
}

/// Result of the shared split-variable machinery, in solver coordinates.
pub(crate) struct QuadFit {
    pub(crate) gamma: DVector<f64>,
    pub(crate) qp_iterations: usize,
    pub(crate) rounds: usize,
    pub(crate) status: SolveStatus,
    pub(crate) l1_multiplier: Option<f64>,
    pub(crate) jitter: f64,
}

/// Hard-constrained quadratic solve shared with the LSA module.
pub(crate) fn solve_quadratic_shared(
    obj: &QuadObjective,
    cs: &ConstraintSet,
    s: f64,
    weights: &DVector<f64>,
    start: Option<&DVector<f64>>,
    spec: &FitSpec,
) -> Result<QuadFit> {
    solve_quadratic(obj, cs, s, weights, None, start, spec)
}

/// Sparsification with the feasibility fallback, for fits whose
/// coefficient vector coincides with the constraint coordinate space:
/// zeroed coordinates appearing in a violated constraint row are restored.
pub(crate) fn sparsify_feasible(
    beta_raw: &DVector<f64>,
    cs: &ConstraintSet,
    spec: &FitSpec,
    enforce: bool,
) -> Result<(DVector<f64>, Vec<usize>)> {
    let (mut beta, mut zero_set) = sparsify(beta_raw, spec.sparsity_tol);
    if enforce && !cs.is_empty() {
        loop {
            if cs.is_feasible(&beta, spec.qp.feasibility_tol)? {
                break;
            }
            let values = cs.evaluate(&beta)?;
            let jac = cs.jacobian(&beta)?;
            let mut restored = false;
            for r in 0..values.len() {
                if values[r] <= spec.qp.feasibility_tol {
                    continue;
                }
                for pos in (0..zero_set.len()).rev() {
                    let j = zero_set[pos];
                    if jac[(r, j)] != 0.0 {
                        beta[j] = beta_raw[j];
                        zero_set.remove(pos);
                        restored = true;
                    }
                }
            }
            if !restored {
                break;
            }
        }
        if !cs.is_feasible(&beta, spec.qp.feasibility_tol)? {
            return Err(Error::LinearizationStalled {
                rounds: 0,
                violation: cs.max_violation(&beta)?,
            });
        }
    }
    Ok((beta, zero_set))
}

/// Fixed multipliers for the penalized form: an L1 weight per coordinate
/// and one multiplier per inequality-type constraint (linear inequality
/// rows first, then nonlinear constraints). Equalities stay hard.
struct PenaltyTerms {
    l1: DVector<f64>,
    constraint: DVector<f64>,
}

/// Solves the split-variable QP, running sequential linearization when
/// nonlinear constraints are present. With `penalty` set, inequality-type
/// constraints contribute fixed-multiplier cost terms instead of hard rows.
fn solve_quadratic(
    obj: &QuadObjective,
    cs: &ConstraintSet,
    s: f64,
    weights: &DVector<f64>,
    penalty: Option<&PenaltyTerms>,
    start: Option<&DVector<f64>>,
    spec: &FitSpec,
) -> Result<QuadFit> {
    let d = obj.g.len();
    let n_nl = cs.n_nonlinear();
    let hard = penalty.is_none();

    let budget_row = s.is_finite() && weights.iter().any(|&w| w > 0.0);

    // Anchor for boundary cuts: a point feasible for the whole system
    // (the Monte Carlo start). The halfspace at a boundary point of a
    // nonlinear constraint never removes a feasible point; the halfspace
    // at an infeasible iterate can, so cutting there is a fallback only.
    let anchor: Option<DVector<f64>> = match start {
        Some(z) if n_nl > 0 => {
            if cs.is_feasible(z, spec.qp.feasibility_tol)? {
                Some(z.clone())
            } else {
                None
            }
        }
        _ => None,
    };

    // Cuts accumulated across rounds: rows of (J, rhs) in solver coords.
    let mut cuts: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut current: Option<DVector<f64>> = start.cloned();
    let mut total_iterations = 0usize;
    let mut rounds = 0usize;
    let max_rounds = if n_nl == 0 { 1 } else { spec.sl_max_rounds };

    loop {
        rounds += 1;

        // Objective in split coordinates.
        let mut q = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                let v = 2.0 * obj.h[(i, j)];
                q[(i, j)] = v;
                q[(i + d, j + d)] = v;
                q[(i, j + d)] = -v;
                q[(i + d, j)] = -v;
            }
        }
        let mut c = DVector::zeros(2 * d);
        for j in 0..d {
            c[j] = -2.0 * obj.g[j];
            c[j + d] = 2.0 * obj.g[j];
        }
        if let Some(pen) = penalty {
            for j in 0..d {
                c[j] += pen.l1[j];
                c[j + d] += pen.l1[j];
            }
            // Fixed multipliers on the inequality-type constraints, with
            // nonlinear entries linearized at the current iterate.
            let (a, _) = cs.lin_ineq();
            for r in 0..a.nrows() {
                for j in 0..d {
                    c[j] += pen.constraint[r] * a[(r, j)];
                    c[j + d] -= pen.constraint[r] * a[(r, j)];
                }
            }
            if n_nl > 0 {
                let point = current
                    .clone()
                    .unwrap_or_else(|| DVector::zeros(d));
                let mut grad = DVector::zeros(d);
                for (idx, nl) in cs.nonlinear().iter().enumerate() {
                    nl.gradient(&point, &mut grad);
                    let lam = pen.constraint[a.nrows() + idx];
                    for j in 0..d {
                        c[j] += lam * grad[j];
                        c[j + d] -= lam * grad[j];
                    }
                }
            }
        }

        let mut problem = QpProblem::new(q, c)?;

        if budget_row {
            let mut row = DMatrix::zeros(1, 2 * d);
            for j in 0..d {
                row[(0, j)] = weights[j];
                row[(0, j + d)] = weights[j];
            }
            problem = problem.add_ineq_rows(row, DVector::from_element(1, s))?;
        }

        if hard {
            let (a, rhs) = cs.lin_ineq();
            if a.nrows() > 0 {
                problem = problem.add_ineq_rows(split_rows(a), rhs.clone())?;
            }
            if !cuts.is_empty() {
                let mut jm = DMatrix::zeros(cuts.len(), d);
                let mut rv = DVector::zeros(cuts.len());
                for (r, (row, rhs)) in cuts.iter().enumerate() {
                    jm.row_mut(r).copy_from(&row.transpose());
                    rv[r] = *rhs;
                }
                problem = problem.add_ineq_rows(split_rows(&jm), rv)?;
            }
        }
        let (e, erhs) = cs.lin_eq();
        if e.nrows() > 0 {
            problem = problem.add_eq_rows(split_rows(e), erhs.clone())?;
        }
        problem = problem.add_lower_bounds(&DVector::zeros(2 * d))?;

        let x0 = current.as_ref().map(split_point);
        let sol = solve_qp(&problem, x0.as_ref(), &spec.qp);
        total_iterations += sol.iterations;

        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => {
                return Err(Error::InfeasibleConstraints(
                    "the prior region and the L1 budget have empty intersection".into(),
                ))
            }
            SolveStatus::IterationLimit => return Err(Error::IterationLimit(sol.iterations)),
        }

        let gamma = unsplit_point(&sol.x, d);
        let l1_multiplier = if budget_row {
            Some(sol.ineq_multipliers[0])
        } else {
            None
        };

        // Hard nonlinear constraints: check and cut.
        if hard && n_nl > 0 {
            let mut worst = 0.0f64;
            for nl in cs.nonlinear() {
                worst = worst.max(nl.value(&gamma));
            }
            if worst > spec.qp.feasibility_tol {
                if rounds >= max_rounds {
                    return Err(Error::LinearizationStalled {
                        rounds,
                        violation: worst,
                    });
                }
                let mut grad = DVector::zeros(d);
                for nl in cs.nonlinear() {
                    let g_val = nl.value(&gamma);
                    if g_val > 0.0 {
                        let cut_point = match &anchor {
                            Some(a) => boundary_point(nl, a, &gamma),
                            None => gamma.clone(),
                        };
                        nl.gradient(&cut_point, &mut grad);
                        let rhs = grad.dot(&cut_point) - nl.value(&cut_point);
                        cuts.push((grad.clone(), rhs));
                    }
                }
                current = Some(gamma);
                continue;
            }
            return Ok(QuadFit {
                gamma,
                qp_iterations: total_iterations,
                rounds,
                status: SolveStatus::Optimal,
                l1_multiplier,
                jitter: sol.jitter,
            });
        }

        // Penalized nonlinear terms: iterate the linearization point.
        if !hard && n_nl > 0 {
            let pen = penalty.unwrap();
            let has_nl_pen = (0..n_nl).any(|i| pen.constraint[cs.n_lin_ineq() + i] != 0.0);
            if has_nl_pen {
                let step = match &current {
                    Some(prev) => (&gamma - prev).amax(),
                    None => f64::INFINITY,
                };
                if step > spec.sl_tol {
                    if rounds >= max_rounds {
                        return Err(Error::LinearizationStalled {
                            rounds,
                            violation: step,
                        });
                    }
                    current = Some(gamma);
                    continue;
                }
            }
        }

        return Ok(QuadFit {
            gamma,
            qp_iterations: total_iterations,
            rounds,
            status: SolveStatus::Optimal,
            l1_multiplier,
            jitter: sol.jitter,
        });
    }
}

/// Point on the constraint boundary along the segment from a feasible
/// `inside` to an infeasible `outside`, found by bisection. Falls back to
/// `outside` when the segment start is not actually feasible.
fn boundary_point(
    nl: &crate::constraints::NonlinearConstraint,
    inside: &DVector<f64>,
    outside: &DVector<f64>,
) -> DVector<f64> {
    if nl.value(inside) > 0.0 {
        return outside.clone();
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let z = inside + (outside - inside) * mid;
        if nl.value(&z) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    inside + (outside - inside) * lo
}

/// Duplicates columns for the split space: `M -> [M, -M]`.
fn split_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, d) = (m.nrows(), m.ncols());
    let mut out = DMatrix::zeros(r, 2 * d);
    for i in 0..r {
        for j in 0..d {
            out[(i, j)] = m[(i, j)];
            out[(i, j + d)] = -m[(i, j)];
        }
    }
    out
}

fn split_point(beta: &DVector<f64>) -> DVector<f64> {
    let d = beta.len();
    let mut x = DVector::zeros(2 * d);
    for j in 0..d {
        x[j] = beta[j].max(0.0);
        x[j + d] = (-beta[j]).max(0.0);
    }
    x
}

fn unsplit_point(x: &DVector<f64>, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |j, _| x[j] - x[j + d])
}

/// Euclidean projection onto the linear part of a constraint system.
pub fn project_onto_linear(cs: &ConstraintSet, point: &DVector<f64>) -> Result<DVector<f64>> {
    if point.len() != cs.dim() {
        return Err(Error::Dimension(format!(
            "point has length {} but constraints have dimension {}",
            point.len(),
            cs.dim()
        )));
    }
    if cs.n_lin_ineq() == 0 && cs.n_lin_eq() == 0 {
        return Ok(point.clone());
    }
    let d = cs.dim();
    let q = DMatrix::identity(d, d) * 2.0;
    let c = point * -2.0;
    let mut problem = QpProblem::new(q, c)?;
    let (a, rhs) = cs.lin_ineq();
    if a.nrows() > 0 {
        problem = problem.add_ineq_rows(a.clone(), rhs.clone())?;
    }
    let (e, erhs) = cs.lin_eq();
    if e.nrows() > 0 {
        problem = problem.add_eq_rows(e.clone(), erhs.clone())?;
    }
    let sol = solve_qp(&problem, None, &SolverOptions::default());
    match sol.status {
        SolveStatus::Optimal => Ok(sol.x),
        SolveStatus::Infeasible => Err(Error::InfeasibleConstraints(
            "linear prior region is empty".into(),
        )),
        SolveStatus::IterationLimit => Err(Error::IterationLimit(sol.iterations)),
    }
}

/// Unpenalized least-squares coefficients (and intercept when requested).
pub(crate) fn ols_fit(data: &Dataset, intercept: bool) -> Result<(DVector<f64>, f64)> {
    let n = data.n();
    let p = data.p();
    let (x_mean, y_mean) = if intercept {
        (
            DVector::from_fn(p, |j, _| data.x.column(j).sum() / n as f64),
            data.y.sum() / n as f64,
        )
    } else {
        (DVector::zeros(p), 0.0)
    };
    let z = DMatrix::from_fn(n, p, |i, j| data.x[(i, j)] - x_mean[j]);
    let yc = DVector::from_fn(n, |i, _| data.y[i] - y_mean);
    let gram = z.transpose() * &z;
    let xty = z.transpose() * &yc;
    let beta = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&xty),
        None => {
            let jitter = (1e-10 * gram.trace() / p.max(1) as f64).max(1e-300);
            (&gram + DMatrix::identity(p, p) * jitter)
                .cholesky()
                .ok_or_else(|| Error::Data("design Gram matrix is not factorizable".into()))?
                .solve(&xty)
        }
    };
    let alpha = if intercept {
        y_mean - x_mean.dot(&beta)
    } else {
        0.0
    };
    Ok((beta, alpha))
}

/// Solves the constrained lasso at budget `spec.s`.
pub fn fit_constrained(data: &Dataset, cs: &ConstraintSet, spec: &FitSpec) -> Result<FitResult> {
    spec.validate(data.p())?;
    let prep = prepare(data, cs, spec)?;
    let obj = QuadObjective {
        h: prep.z.transpose() * &prep.z,
        g: prep.z.transpose() * &prep.yc,
    };

    // Sequential linearization starts from the Monte Carlo point when
    // nonlinear constraints are present, falling back to the projection of
    // the unpenalized estimate onto the linear rows.
    let start = if prep.cs_solver.n_nonlinear() > 0 {
        let cfg = McConfig::new(
            mu_from_objective(&obj)?,
            sigma_from_objective(&obj)?,
            spec.mc_draws,
            spec.mc_seed,
        )?;
        match initializer::mc_initial_point(&cfg, spec.s, &prep.cs_solver)? {
            Some(z) => Some(z),
            None => Some(project_onto_linear(&prep.cs_solver, cfg.mu())?),
        }
    } else {
        None
    };

    let fit = solve_quadratic(
        &obj,
        &prep.cs_solver,
        spec.s,
        &prep.weights,
        None,
        start.as_ref(),
        spec,
    )?;
    finish(data, cs, spec, &prep, fit, true)
}

/// Solves the penalized (multiplier) form: RSS plus `sum_j lambda1_j
/// |beta_j|` plus `lambda2' g(beta)` with fixed multipliers. Inequality
/// constraints are not enforced; equalities remain hard. `lambda2` has one
/// entry per inequality-type constraint (linear rows then nonlinear), or
/// may be empty for none.
pub fn fit_penalized(
    data: &Dataset,
    cs: &ConstraintSet,
    lambda1: &L1Penalty,
    lambda2: &DVector<f64>,
    spec: &FitSpec,
) -> Result<FitResult> {
    spec.validate(data.p())?;
    let prep = prepare(data, cs, spec)?;
    let d = prep.dim();

    let n_ineq_type = prep.cs_solver.n_lin_ineq() + prep.cs_solver.n_nonlinear();
    let lambda2 = if lambda2.is_empty() && n_ineq_type > 0 {
        DVector::zeros(n_ineq_type)
    } else {
        lambda2.clone()
    };
    if lambda2.len() != n_ineq_type {
        return Err(Error::Dimension(format!(
            "lambda2 has {} entries for {} inequality-type constraints",
            lambda2.len(),
            n_ineq_type
        )));
    }
    if lambda2.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Dimension("lambda2 entries must be >= 0".into()));
    }

    // L1 weights per feature column, mapped to solver coordinates.
    let mut l1 = DVector::zeros(d);
    let offset = if prep.mode == InterceptMode::InConstraints { 1 } else { 0 };
    let p = data.p();
    match lambda1 {
        L1Penalty::Scalar(v) => {
            if *v < 0.0 || !v.is_finite() {
                return Err(Error::Dimension("lambda1 must be finite and >= 0".into()));
            }
            for j in 0..p {
                l1[j + offset] = v / prep.scale[j];
            }
        }
        L1Penalty::Weights(w) => {
            if w.len() != p {
                return Err(Error::Dimension(format!(
                    "lambda1 has {} entries for {p} feature columns",
                    w.len()
                )));
            }
            if w.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::Dimension("lambda1 entries must be >= 0".into()));
            }
            for j in 0..p {
                l1[j + offset] = w[j] / prep.scale[j];
            }
        }
    }
    if let InterceptMode::ExplicitColumn(j) = prep.mode {
        // The explicit intercept column stays unpenalized.
        if spec.weights.is_none() {
            l1[j] = 0.0;
        }
    }

    let obj = QuadObjective {
        h: prep.z.transpose() * &prep.z,
        g: prep.z.transpose() * &prep.yc,
    };
    let penalty = PenaltyTerms {
        l1,
        constraint: lambda2,
    };
    let fit = solve_quadratic(
        &obj,
        &prep.cs_solver,
        f64::INFINITY,
        &prep.weights,
        Some(&penalty),
        None,
        spec,
    )?;
    finish(data, cs, spec, &prep, fit, false)
}

fn mu_from_objective(obj: &QuadObjective) -> Result<DVector<f64>> {
    let p = obj.g.len();
    let ch = match obj.h.clone().cholesky() {
        Some(c) => c,
        None => {
            let jitter = (1e-10 * obj.h.trace() / p.max(1) as f64).max(1e-300);
            (&obj.h + DMatrix::identity(p, p) * jitter)
                .cholesky()
                .ok_or_else(|| Error::Data("Gram matrix is not factorizable".into()))?
        }
    };
    Ok(ch.solve(&obj.g))
}

fn sigma_from_objective(obj: &QuadObjective) -> Result<DMatrix<f64>> {
    let p = obj.g.len();
    let ch = match obj.h.clone().cholesky() {
        Some(c) => c,
        None => {
            let jitter = (1e-10 * obj.h.trace() / p.max(1) as f64).max(1e-300);
            (&obj.h + DMatrix::identity(p, p) * jitter)
                .cholesky()
                .ok_or_else(|| Error::Data("Gram matrix is not factorizable".into()))?
        }
    };
    Ok(ch.inverse())
}

/// Maps a solver-space solution back to the original scale, applies the
/// sparsity tolerance, and assembles the public result.
fn finish(
    data: &Dataset,
    cs: &ConstraintSet,
    spec: &FitSpec,
    prep: &Prepared,
    fit: QuadFit,
    enforce_feasibility: bool,
) -> Result<FitResult> {
    let (beta_raw, intercept) = prep.recover(&fit.gamma);
    let (mut beta, mut zero_set) = sparsify(&beta_raw, spec.sparsity_tol);

    // Zeroing tiny coefficients must not break feasibility: restore any
    // zeroed coordinate that appears in a violated constraint row.
    if enforce_feasibility && !cs.is_empty() {
        loop {
            let full = prep.constraint_coords(&beta, intercept);
            if cs.is_feasible(&full, spec.qp.feasibility_tol)? {
                break;
            }
            let values = cs.evaluate(&full)?;
            let jac = cs.jacobian(&full)?;
            let offset = usize::from(prep.mode == InterceptMode::InConstraints);
            let mut restored = false;
            for r in 0..values.len() {
                if values[r] <= spec.qp.feasibility_tol {
                    continue;
                }
                for pos in (0..zero_set.len()).rev() {
                    let j = zero_set[pos];
                    if jac[(r, j + offset)] != 0.0 {
                        beta[j] = beta_raw[j];
                        zero_set.remove(pos);
                        restored = true;
                    }
                }
            }
            if !restored {
                break;
            }
        }
    }

    let full = prep.constraint_coords(&beta, intercept);
    if enforce_feasibility && !cs.is_feasible(&full, spec.qp.feasibility_tol)? {
        return Err(Error::LinearizationStalled {
            rounds: fit.rounds,
            violation: cs.max_violation(&full)?,
        });
    }

    // Residual sum of squares on the original scale.
    let mut rss = 0.0;
    for i in 0..data.n() {
        let pred = intercept + beta.dot(&data.x.row(i).transpose());
        let r = data.y[i] - pred;
        rss += r * r;
    }

    // L1 norm with the effective feature weights (original scale).
    let w = match &spec.weights {
        Some(w) => w.clone(),
        None => {
            let mut w = DVector::from_element(data.p(), 1.0);
            if let InterceptMode::ExplicitColumn(j) = prep.mode {
                w[j] = 0.0;
            }
            w
        }
    };
    let l1_norm: f64 = (0..data.p()).map(|j| w[j] * beta[j].abs()).sum();

    let active_constraints = active_constraints(cs, &full, spec.qp.feasibility_tol)?;

    let mut result = FitResult {
        beta,
        intercept,
        l1_norm,
        objective: rss,
        active_constraints,
        zero_set,
        df: 0,
        solver_info: SolverInfo {
            qp_iterations: fit.qp_iterations,
            linearization_rounds: fit.rounds,
            status: fit.status,
            l1_multiplier: fit.l1_multiplier,
            jitter: fit.jitter,
            standardized: prep.standardized,
        },
        warnings: prep.warnings.clone(),
    };
    result.df = inference::degrees_of_freedom(&result, cs, spec.qp.feasibility_tol)?;
    Ok(result)
}

/// Indices of constraints active at `beta` in enumeration order (linear
/// inequalities, nonlinear constraints, equalities; equalities always
/// count as active).
pub fn active_constraints(
    cs: &ConstraintSet,
    beta: &DVector<f64>,
    tol: f64,
) -> Result<Vec<usize>> {
    let mut active = Vec::new();
    let (a, rhs) = cs.lin_ineq();
    for r in 0..a.nrows() {
        let v = a.row(r).transpose().dot(beta) - rhs[r];
        if v.abs() <= tol {
            active.push(r);
        }
    }
    let m = a.nrows();
    for (idx, nl) in cs.nonlinear().iter().enumerate() {
        if nl.value(beta).abs() <= tol {
            active.push(m + idx);
        }
    }
    let base = m + cs.n_nonlinear();
    for r in 0..cs.n_lin_eq() {
        active.push(base + r);
    }
    Ok(active)
}
