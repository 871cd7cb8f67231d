//! Dense convex quadratic programming by a primal active-set method.
//!
//! Solves problems of the form
//!
//! ```text
//!     minimize     1/2 x' Q x + c' x
//!     subject to   A_ineq x <= b_ineq
//!                  A_eq   x  = b_eq
//! ```
//!
//! with `Q` symmetric positive semidefinite. Optional per-coordinate lower
//! bounds are folded into `A_ineq` as trailing rows at construction time.
//!
//! A feasible starting point is found by an elastic phase-1 subproblem
//! (minimize total constraint violation) solved with the same active-set
//! loop; callers with a known feasible point can pass it to skip phase 1.
//! Semidefinite `Q` is handled by a ridge jitter applied to the
//! factorization only; reported objectives and KKT residuals always use the
//! original `Q`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check on `Q`.
const SYMMETRY_RTOL: f64 = 1e-12;

/// Options controlling the active-set solver.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Tolerance on the KKT residual blocks at a reported optimum.
    pub kkt_tol: f64,
    /// Absolute tolerance on constraint violations.
    pub feasibility_tol: f64,
    /// Cap on active-set changes; `None` means `50 * (d + m)`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-8,
            feasibility_tol: 1e-9,
            max_iter: None,
        }
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

/// A dense convex QP. Immutable once built; safe to share across threads.
#[derive(Debug, Clone)]
pub struct QpProblem {
    q: DMatrix<f64>,
    c: DVector<f64>,
    a_ineq: DMatrix<f64>,
    b_ineq: DVector<f64>,
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
}

impl QpProblem {
    /// Builds an unconstrained problem; `q` is symmetrized after a
    /// relative-tolerance check.
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::Dimension(format!(
                "Q must be square, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if q.nrows() != c.len() {
            return Err(Error::Dimension(format!(
                "Q is {0}x{0} but c has length {1}",
                q.nrows(),
                c.len()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("non-finite entry in Q or c".into()));
        }
        let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let asym = (&q - q.transpose()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if asym > SYMMETRY_RTOL * scale {
            return Err(Error::Dimension(format!(
                "Q asymmetry {asym:.3e} exceeds tolerance"
            )));
        }
        let d = q.nrows();
        let q = (&q + q.transpose()) * 0.5;
        Ok(Self {
            q,
            c,
            a_ineq: DMatrix::zeros(0, d),
            b_ineq: DVector::zeros(0),
            a_eq: DMatrix::zeros(0, d),
            b_eq: DVector::zeros(0),
        })
    }

    /// Appends inequality rows `a x <= b`.
    pub fn add_ineq_rows(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_rows(&a, &b, self.dim(), "inequality")?;
        self.a_ineq = stack_rows(&self.a_ineq, &a);
        self.b_ineq = stack_vec(&self.b_ineq, &b);
        Ok(self)
    }

    /// Appends equality rows `a x = b`.
    pub fn add_eq_rows(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_rows(&a, &b, self.dim(), "equality")?;
        self.a_eq = stack_rows(&self.a_eq, &a);
        self.b_eq = stack_vec(&self.b_eq, &b);
        Ok(self)
    }

    /// Adds per-coordinate lower bounds `x_j >= lb_j` as inequality rows
    /// `-x_j <= -lb_j`. Non-finite entries mean "unbounded below".
    pub fn add_lower_bounds(self, lb: &DVector<f64>) -> Result<Self> {
        let d = self.dim();
        if lb.len() != d {
            return Err(Error::Dimension(format!(
                "lower bounds have length {} but dimension is {d}",
                lb.len()
            )));
        }
        let bounded: Vec<usize> = (0..d).filter(|&j| lb[j].is_finite()).collect();
        let mut a = DMatrix::zeros(bounded.len(), d);
        let mut b = DVector::zeros(bounded.len());
        for (r, &j) in bounded.iter().enumerate() {
            a[(r, j)] = -1.0;
            b[r] = -lb[j];
        }
        self.add_ineq_rows(a, b)
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.b_ineq.len()
    }

    pub fn n_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn a_ineq(&self) -> &DMatrix<f64> {
        &self.a_ineq
    }

    pub fn b_ineq(&self) -> &DVector<f64> {
        &self.b_ineq
    }

    pub fn a_eq(&self) -> &DMatrix<f64> {
        &self.a_eq
    }

    pub fn b_eq(&self) -> &DVector<f64> {
        &self.b_eq
    }

    /// `1/2 x' Q x + c' x`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.q * x)[(0, 0)] + self.c.dot(x)
    }

    /// True when all constraints hold within `tol` (absolute, with a mild
    /// relative allowance on large right-hand sides).
    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Largest constraint violation at `x`, normalized by `max(1, |b_i|)`.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        if self.n_ineq() > 0 {
            let r = &self.a_ineq * x - &self.b_ineq;
            for i in 0..r.len() {
                worst = worst.max(r[i] / self.b_ineq[i].abs().max(1.0));
            }
        }
        if self.n_eq() > 0 {
            let r = &self.a_eq * x - &self.b_eq;
            for i in 0..r.len() {
                worst = worst.max(r[i].abs() / self.b_eq[i].abs().max(1.0));
            }
        }
        worst
    }
}

/// Solution of a QP, including the multipliers needed for KKT checks.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Working inequality constraints at the final iterate, ascending.
    pub active_set: Vec<usize>,
    /// Number of active-set changes performed (phase 1 included).
    pub iterations: usize,
    pub status: SolveStatus,
    /// Inequality multipliers, zero off the active set.
    pub ineq_multipliers: DVector<f64>,
    /// Equality multipliers (free sign).
    pub eq_multipliers: DVector<f64>,
    /// Ridge added to the factorization for semidefinite `Q`; never part of
    /// the reported objective.
    pub jitter: f64,
}

/// Max-norm residuals of the four KKT blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

/// Computes the KKT residual blocks for a solution using its stored
/// multipliers. Pure; does not touch solver state.
pub fn kkt_residuals(problem: &QpProblem, solution: &QpSolution) -> KktResiduals {
    let x = &solution.x;
    let mut grad = problem.q() * x + problem.c();
    if problem.n_ineq() > 0 {
        grad += problem.a_ineq().transpose() * &solution.ineq_multipliers;
    }
    if problem.n_eq() > 0 {
        grad += problem.a_eq().transpose() * &solution.eq_multipliers;
    }
    let stationarity = grad.amax();

    let mut primal = 0.0f64;
    let mut complementarity = 0.0f64;
    if problem.n_ineq() > 0 {
        let slack = problem.a_ineq() * x - problem.b_ineq();
        for i in 0..slack.len() {
            primal = primal.max(slack[i]);
            complementarity = complementarity.max((solution.ineq_multipliers[i] * slack[i]).abs());
        }
    }
    if problem.n_eq() > 0 {
        let r = problem.a_eq() * x - problem.b_eq();
        primal = primal.max(r.amax());
    }

    let dual = (0..problem.n_ineq())
        .map(|i| -solution.ineq_multipliers[i])
        .fold(0.0f64, f64::max);

    KktResiduals {
        stationarity,
        primal: primal.max(0.0),
        dual,
        complementarity,
    }
}

/// Solves the QP. `x0`, when given and feasible within `feasibility_tol`,
/// is used as a warm start; otherwise phase 1 runs first. Deterministic:
/// identical inputs and options produce bit-identical outputs.
pub fn solve_qp(problem: &QpProblem, x0: Option<&DVector<f64>>, opts: &SolverOptions) -> QpSolution {
    let d = problem.dim();
    let m = problem.n_ineq();

    let start = match x0 {
        Some(x) if x.len() == d && problem.is_feasible(x, opts.feasibility_tol) => x.clone(),
        other => {
            let hint = other.filter(|x| x.len() == d).cloned();
            match phase1(problem, hint.as_ref(), opts) {
                Some(x) => x,
                None => {
                    // Best effort diagnostics for the infeasible case.
                    let x = hint.unwrap_or_else(|| DVector::zeros(d));
                    return QpSolution {
                        objective: problem.objective(&x),
                        x,
                        active_set: Vec::new(),
                        iterations: 0,
                        status: SolveStatus::Infeasible,
                        ineq_multipliers: DVector::zeros(m),
                        eq_multipliers: DVector::zeros(problem.n_eq()),
                        jitter: 0.0,
                    };
                }
            }
        }
    };

    let max_iter = opts.max_iter.unwrap_or(50 * (d + m).max(1));
    active_set_loop(problem, start, opts, max_iter)
}

/// Phase 1: minimize total constraint violation with elastic variables
/// `t` (inequalities) and `u, v` (equality split). The elastic problem has
/// a trivially feasible start, so the main loop can solve it directly.
/// Returns a feasible point of the original problem or `None`.
fn phase1(problem: &QpProblem, hint: Option<&DVector<f64>>, opts: &SolverOptions) -> Option<DVector<f64>> {
    let d = problem.dim();
    let m = problem.n_ineq();
    let q = problem.n_eq();
    if m == 0 && q == 0 {
        return Some(hint.cloned().unwrap_or_else(|| DVector::zeros(d)));
    }

    let x_ref = hint.cloned().unwrap_or_else(|| DVector::zeros(d));
    if problem.is_feasible(&x_ref, opts.feasibility_tol) {
        return Some(x_ref);
    }

    // Row-normalized copies keep the elastic weights on a common scale.
    let mut g = problem.a_ineq.clone();
    let mut h = problem.b_ineq.clone();
    for i in 0..m {
        let norm = g.row(i).norm().max(1e-300);
        for j in 0..d {
            g[(i, j)] /= norm;
        }
        h[i] /= norm;
    }
    let mut e_mat = problem.a_eq.clone();
    let mut e_rhs = problem.b_eq.clone();
    for k in 0..q {
        let norm = e_mat.row(k).norm().max(1e-300);
        for j in 0..d {
            e_mat[(k, j)] /= norm;
        }
        e_rhs[k] /= norm;
    }

    // Variables z = (x, t, u, v); dimension dz.
    let dz = d + m + 2 * q;
    let rho = 1e-8;
    let mut qz = DMatrix::zeros(dz, dz);
    for j in 0..dz {
        qz[(j, j)] = rho;
    }
    let mut cz = DVector::zeros(dz);
    for j in 0..d {
        cz[j] = -rho * x_ref[j];
    }
    for j in d..dz {
        cz[j] = 1.0;
    }

    // Inequalities: G x - t <= h, then t, u, v >= 0.
    let n_rows = m + (dz - d);
    let mut a = DMatrix::zeros(n_rows, dz);
    let mut b = DVector::zeros(n_rows);
    for i in 0..m {
        for j in 0..d {
            a[(i, j)] = g[(i, j)];
        }
        a[(i, d + i)] = -1.0;
        b[i] = h[i];
    }
    for (r, j) in (d..dz).enumerate() {
        a[(m + r, j)] = -1.0;
    }

    // Equalities: E x - u + v = e.
    let mut ae = DMatrix::zeros(q, dz);
    let mut be = DVector::zeros(q);
    for k in 0..q {
        for j in 0..d {
            ae[(k, j)] = e_mat[(k, j)];
        }
        ae[(k, d + m + k)] = -1.0;
        ae[(k, d + m + q + k)] = 1.0;
        be[k] = e_rhs[k];
    }

    let elastic = QpProblem {
        q: qz,
        c: cz,
        a_ineq: a,
        b_ineq: b,
        a_eq: ae,
        b_eq: be,
    };

    // Feasible start for the elastic problem.
    let mut z0 = DVector::zeros(dz);
    for j in 0..d {
        z0[j] = x_ref[j];
    }
    for i in 0..m {
        let viol = g.row(i).transpose().dot(&x_ref) - h[i];
        z0[d + i] = viol.max(0.0);
    }
    for k in 0..q {
        let r = e_mat.row(k).transpose().dot(&x_ref) - e_rhs[k];
        z0[d + m + k] = r.max(0.0);
        z0[d + m + q + k] = (-r).max(0.0);
    }

    let max_iter = 50 * (dz + n_rows);
    let sol = active_set_loop(&elastic, z0, opts, max_iter);
    let x = DVector::from_fn(d, |j, _| sol.x[j]);
    if problem.is_feasible(&x, opts.feasibility_tol) {
        Some(x)
    } else {
        None
    }
}

/// Primal active-set iteration from a feasible starting point.
fn active_set_loop(
    problem: &QpProblem,
    mut x: DVector<f64>,
    opts: &SolverOptions,
    max_iter: usize,
) -> QpSolution {
    let d = problem.dim();
    let m = problem.n_ineq();
    let n_eq = problem.n_eq();

    // Jitter only when Q is not safely positive definite.
    let trace: f64 = (0..d).map(|j| problem.q[(j, j)]).sum();
    let base_jitter = 1e-10 * (trace / d.max(1) as f64).abs().max(1e-20);
    let jitter = if problem.q.clone().cholesky().is_some() {
        0.0
    } else {
        base_jitter
    };

    let mut working: Vec<usize> = Vec::new();
    let mut iterations = 0usize;
    let mut status = SolveStatus::IterationLimit;
    let mut mu_w: Vec<f64> = Vec::new();
    let mut nu = DVector::zeros(n_eq);

    loop {
        if iterations > max_iter {
            break;
        }

        let grad = &problem.q * &x + &problem.c;
        let kkt = solve_working_kkt(problem, &x, &working, jitter);
        let (step, nu_new, mu_new) = match kkt {
            Some(v) => v,
            None => {
                // Singular working system: drop the most recent addition.
                if working.pop().is_some() {
                    mu_w.truncate(working.len());
                    iterations += 1;
                    continue;
                }
                break;
            }
        };
        nu = nu_new;
        mu_w = mu_new;

        // Stationarity of the current point with the freshly solved
        // multipliers: || (Q + jI) step ||. Small residual means x is
        // already optimal on the working set even when the step direction
        // itself is a large null-space excursion.
        let mut resid = &problem.q * &step;
        for j in 0..d {
            resid[j] += jitter * step[j];
        }
        let stat_scale = 1.0 + grad.amax();
        let stationary = resid.amax() <= 1e-10 * stat_scale || step.amax() <= 1e-13 * (1.0 + x.amax());

        if stationary {
            // Optimal on working set; check multiplier signs.
            let mut worst = 0.0f64;
            let mut drop_idx: Option<usize> = None;
            for (pos, &mu) in mu_w.iter().enumerate() {
                if mu < worst {
                    worst = mu;
                    drop_idx = Some(pos);
                }
            }
            let dual_tol = opts.kkt_tol.min(1e-10) * stat_scale.max(1.0);
            if worst >= -dual_tol {
                status = SolveStatus::Optimal;
                break;
            }
            let pos = drop_idx.unwrap();
            working.remove(pos);
            mu_w.remove(pos);
            iterations += 1;
            continue;
        }

        // Ratio test against constraints outside the working set.
        let mut alpha = 1.0f64;
        let mut blocker: Option<usize> = None;
        for i in 0..m {
            if working.contains(&i) {
                continue;
            }
            let row = problem.a_ineq.row(i);
            let dir = row.transpose().dot(&step);
            let dir_tol = 1e-13 * (1.0 + row.norm() * step.norm());
            if dir <= dir_tol {
                continue;
            }
            let slack = (problem.b_ineq[i] - row.transpose().dot(&x)).max(0.0);
            let ai = slack / dir;
            // Strict improvement with ascending scan: exact ties resolve
            // to the lowest index.
            if ai < alpha - 1e-15 {
                alpha = ai;
                blocker = Some(i);
            }
        }

        x += &step * alpha;
        if let Some(i) = blocker {
            working.push(i);
            mu_w.push(0.0);
        }
        iterations += 1;
    }

    let mut ineq_multipliers = DVector::zeros(m);
    for (pos, &ci) in working.iter().enumerate() {
        ineq_multipliers[ci] = mu_w[pos].max(0.0);
    }
    let mut active_set = working.clone();
    active_set.sort_unstable();

    QpSolution {
        objective: problem.objective(&x),
        x,
        active_set,
        iterations,
        status,
        ineq_multipliers,
        eq_multipliers: nu,
        jitter,
    }
}

/// Solves the equality-constrained subproblem on the working set:
/// `[Q + jI, A'; A, 0] [step; lambda] = [-(Qx + c); r]` with `A` stacking
/// the equality rows and the working inequality rows, and `r` the residual
/// correction keeping the iterate on the working surface.
fn solve_working_kkt(
    problem: &QpProblem,
    x: &DVector<f64>,
    working: &[usize],
    jitter: f64,
) -> Option<(DVector<f64>, DVector<f64>, Vec<f64>)> {
    let d = problem.dim();
    let n_eq = problem.n_eq();
    let w = working.len();
    let n = d + n_eq + w;

    let assemble = |dual_reg: f64, jit: f64| -> DMatrix<f64> {
        let mut k = DMatrix::zeros(n, n);
        for i in 0..d {
            for j in 0..d {
                k[(i, j)] = problem.q[(i, j)];
            }
            k[(i, i)] += jit;
        }
        for r in 0..n_eq {
            for j in 0..d {
                k[(d + r, j)] = problem.a_eq[(r, j)];
                k[(j, d + r)] = problem.a_eq[(r, j)];
            }
            k[(d + r, d + r)] = -dual_reg;
        }
        for (p, &ci) in working.iter().enumerate() {
            for j in 0..d {
                k[(d + n_eq + p, j)] = problem.a_ineq[(ci, j)];
                k[(j, d + n_eq + p)] = problem.a_ineq[(ci, j)];
            }
            k[(d + n_eq + p, d + n_eq + p)] = -dual_reg;
        }
        k
    };

    let mut rhs = DVector::zeros(n);
    let grad = &problem.q * x + &problem.c;
    for j in 0..d {
        rhs[j] = -grad[j];
    }
    for r in 0..n_eq {
        rhs[d + r] = problem.b_eq[r] - problem.a_eq.row(r).transpose().dot(x);
    }
    for (p, &ci) in working.iter().enumerate() {
        rhs[d + n_eq + p] = problem.b_ineq[ci] - problem.a_ineq.row(ci).transpose().dot(x);
    }

    let sol = assemble(0.0, jitter)
        .lu()
        .solve(&rhs)
        .or_else(|| {
            let bumped = if jitter > 0.0 { jitter * 1e3 } else { 1e-11 };
            assemble(1e-11, bumped).lu().solve(&rhs)
        })?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }

    let step = DVector::from_fn(d, |j, _| sol[j]);
    let nu = DVector::from_fn(n_eq, |r, _| sol[d + r]);
    let mu: Vec<f64> = (0..w).map(|p| sol[d + n_eq + p]).collect();
    Some((step, nu, mu))
}

fn check_rows(a: &DMatrix<f64>, b: &DVector<f64>, dim: usize, kind: &str) -> Result<()> {
    if a.ncols() != dim {
        return Err(Error::Dimension(format!(
            "{kind} rows have {} columns but dimension is {dim}",
            a.ncols()
        )));
    }
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "{kind} matrix has {} rows but rhs has length {}",
            a.nrows(),
            b.len()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Dimension(format!("non-finite entry in {kind} rows")));
    }
    Ok(())
}

fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    if top.nrows() == 0 {
        return bottom.clone();
    }
    if bottom.nrows() == 0 {
        return top.clone();
    }
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
    out.view_mut((top.nrows(), 0), (bottom.nrows(), bottom.ncols()))
        .copy_from(bottom);
    out
}

fn stack_vec(top: &DVector<f64>, bottom: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(top.len() + bottom.len());
    out.rows_mut(0, top.len()).copy_from(top);
    out.rows_mut(top.len(), bottom.len()).copy_from(bottom);
    out
}
