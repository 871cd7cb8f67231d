//! The prior constraint system `g(beta) <= 0`.
//!
//! Everything is normalized internally to "<= 0": `>=` rows are negated at
//! parse time and equalities are kept as a separate block. Nonlinear
//! constraints are restricted to registered smooth kinds whose feasible
//! region (together with their auto-added sign rows) is convex.
//!
//! Constraint file format (UTF-8, line oriented):
//!
//! ```text
//! # comment
//! lin: c1 c2 ... cp <= rhs     (also >= and =)
//! nl: negdet i j k             (1-based indices)
//! ```
//!
//! `negdet i j k` registers `beta_k^2 - beta_i * beta_j <= 0` and
//! automatically adds the rows `beta_i <= 0`, `beta_j <= 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A registered smooth nonlinear constraint `g(beta) <= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NonlinearConstraint {
    /// `beta_k^2 - beta_i * beta_j <= 0` with 0-based indices. Paired with
    /// `beta_i <= 0`, `beta_j <= 0` at parse time so the joint region is
    /// convex (a rotated second-order cone).
    NegDet2 { i: usize, j: usize, k: usize },
}

impl NonlinearConstraint {
    pub fn value(&self, beta: &DVector<f64>) -> f64 {
        match *self {
            Self::NegDet2 { i, j, k } => beta[k] * beta[k] - beta[i] * beta[j],
        }
    }

    pub fn gradient(&self, beta: &DVector<f64>, out: &mut DVector<f64>) {
        out.fill(0.0);
        match *self {
            Self::NegDet2 { i, j, k } => {
                out[i] = -beta[j];
                out[j] = -beta[i];
                out[k] = 2.0 * beta[k];
            }
        }
    }

    fn canonical_line(&self) -> String {
        match *self {
            Self::NegDet2 { i, j, k } => format!("nl: negdet {} {} {}", i + 1, j + 1, k + 1),
        }
    }
}

/// Linear inequalities `A beta <= a`, linear equalities `E beta = e`, and
/// nonlinear constraints, all over a fixed dimension. Immutable after
/// parsing; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    dim: usize,
    lin_ineq: DMatrix<f64>,
    lin_ineq_rhs: DVector<f64>,
    lin_eq: DMatrix<f64>,
    lin_eq_rhs: DVector<f64>,
    nonlinear: Vec<NonlinearConstraint>,
}

impl ConstraintSet {
    /// An empty system over `dim` coordinates (everything is feasible).
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            lin_ineq: DMatrix::zeros(0, dim),
            lin_ineq_rhs: DVector::zeros(0),
            lin_eq: DMatrix::zeros(0, dim),
            lin_eq_rhs: DVector::zeros(0),
            nonlinear: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.n_lin_ineq() == 0 && self.n_lin_eq() == 0 && self.nonlinear.is_empty()
    }

    pub fn n_lin_ineq(&self) -> usize {
        self.lin_ineq_rhs.len()
    }

    pub fn n_lin_eq(&self) -> usize {
        self.lin_eq_rhs.len()
    }

    pub fn n_nonlinear(&self) -> usize {
        self.nonlinear.len()
    }

    /// Count of constraints in enumeration order: linear inequalities,
    /// then nonlinear constraints, then equalities.
    pub fn n_constraints(&self) -> usize {
        self.n_lin_ineq() + self.n_nonlinear() + self.n_lin_eq()
    }

    pub fn lin_ineq(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.lin_ineq, &self.lin_ineq_rhs)
    }

    pub fn lin_eq(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.lin_eq, &self.lin_eq_rhs)
    }

    pub fn nonlinear(&self) -> &[NonlinearConstraint] {
        &self.nonlinear
    }

    /// Appends a linear inequality row `coeffs . beta <= rhs`.
    pub fn push_lin_ineq(&mut self, coeffs: &[f64], rhs: f64) -> Result<()> {
        self.check_row(coeffs, rhs)?;
        let r = self.n_lin_ineq();
        self.lin_ineq = self.lin_ineq.clone().insert_row(r, 0.0);
        for (j, &v) in coeffs.iter().enumerate() {
            self.lin_ineq[(r, j)] = v;
        }
        self.lin_ineq_rhs = self.lin_ineq_rhs.clone().insert_row(r, rhs);
        Ok(())
    }

    /// Appends a linear equality row `coeffs . beta = rhs`.
    pub fn push_lin_eq(&mut self, coeffs: &[f64], rhs: f64) -> Result<()> {
        self.check_row(coeffs, rhs)?;
        let r = self.n_lin_eq();
        self.lin_eq = self.lin_eq.clone().insert_row(r, 0.0);
        for (j, &v) in coeffs.iter().enumerate() {
            self.lin_eq[(r, j)] = v;
        }
        self.lin_eq_rhs = self.lin_eq_rhs.clone().insert_row(r, rhs);
        Ok(())
    }

    /// Registers `beta_k^2 - beta_i beta_j <= 0` (0-based indices) together
    /// with the sign rows `beta_i <= 0` and `beta_j <= 0`.
    pub fn push_negdet(&mut self, i: usize, j: usize, k: usize) -> Result<()> {
        let p = self.dim;
        if i >= p || j >= p || k >= p {
            return Err(Error::Dimension(format!(
                "negdet index out of range (dimension {p})"
            )));
        }
        if i == j || i == k || j == k {
            return Err(Error::Dimension("negdet indices must be distinct".into()));
        }
        for idx in [i, j] {
            let mut row = vec![0.0; p];
            row[idx] = 1.0;
            self.push_lin_ineq(&row, 0.0)?;
        }
        self.nonlinear.push(NonlinearConstraint::NegDet2 { i, j, k });
        Ok(())
    }

    fn check_row(&self, coeffs: &[f64], rhs: f64) -> Result<()> {
        if coeffs.len() != self.dim {
            return Err(Error::Dimension(format!(
                "constraint row has {} coefficients but dimension is {}",
                coeffs.len(),
                self.dim
            )));
        }
        if coeffs.iter().any(|v| !v.is_finite()) || !rhs.is_finite() {
            return Err(Error::Dimension("non-finite constraint coefficient".into()));
        }
        if coeffs.iter().all(|&v| v == 0.0) {
            return Err(Error::Dimension("zero constraint row".into()));
        }
        Ok(())
    }

    /// Stacked constraint values: `[A beta - a; E beta - e; -(E beta - e);
    /// g_nl(beta)]`. Feasibility means every entry `<= 0`; equalities
    /// contribute two one-sided entries.
    pub fn evaluate(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        if beta.len() != self.dim {
            return Err(Error::Dimension(format!(
                "beta has length {} but constraint dimension is {}",
                beta.len(),
                self.dim
            )));
        }
        let m = self.n_lin_ineq();
        let q = self.n_lin_eq();
        let mut out = DVector::zeros(m + 2 * q + self.nonlinear.len());
        if m > 0 {
            let r = &self.lin_ineq * beta - &self.lin_ineq_rhs;
            out.rows_mut(0, m).copy_from(&r);
        }
        if q > 0 {
            let r = &self.lin_eq * beta - &self.lin_eq_rhs;
            out.rows_mut(m, q).copy_from(&r);
            out.rows_mut(m + q, q).copy_from(&(-&r));
        }
        for (idx, nl) in self.nonlinear.iter().enumerate() {
            out[m + 2 * q + idx] = nl.value(beta);
        }
        Ok(out)
    }

    /// Row `r` is the gradient of the `r`-th stacked constraint at `beta`,
    /// in the same order as [`ConstraintSet::evaluate`].
    pub fn jacobian(&self, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        if beta.len() != self.dim {
            return Err(Error::Dimension(format!(
                "beta has length {} but constraint dimension is {}",
                beta.len(),
                self.dim
            )));
        }
        let m = self.n_lin_ineq();
        let q = self.n_lin_eq();
        let n_rows = m + 2 * q + self.nonlinear.len();
        let mut jac = DMatrix::zeros(n_rows, self.dim);
        if m > 0 {
            jac.view_mut((0, 0), (m, self.dim)).copy_from(&self.lin_ineq);
        }
        if q > 0 {
            jac.view_mut((m, 0), (q, self.dim)).copy_from(&self.lin_eq);
            jac.view_mut((m + q, 0), (q, self.dim)).copy_from(&(-&self.lin_eq));
        }
        let mut grad = DVector::zeros(self.dim);
        for (idx, nl) in self.nonlinear.iter().enumerate() {
            nl.gradient(beta, &mut grad);
            jac.row_mut(m + 2 * q + idx).copy_from(&grad.transpose());
        }
        Ok(jac)
    }

    /// First-order halfspace approximation of the inequality system at
    /// `beta0`: returns `(J, r)` such that `J beta <= r` stands in for the
    /// linear rows plus the nonlinear constraints linearized at `beta0`.
    /// Equalities are not included; they pass through unchanged.
    ///
    /// The halfspace never cuts off a feasible point when each nonlinear
    /// constraint is either violated or tight at `beta0` (the only places
    /// the estimator linearizes), or trivially when the system is purely
    /// linear.
    pub fn linearize_at(&self, beta0: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if beta0.len() != self.dim {
            return Err(Error::Dimension(format!(
                "beta0 has length {} but constraint dimension is {}",
                beta0.len(),
                self.dim
            )));
        }
        let m = self.n_lin_ineq();
        let n_rows = m + self.nonlinear.len();
        let mut jac = DMatrix::zeros(n_rows, self.dim);
        let mut rhs = DVector::zeros(n_rows);
        if m > 0 {
            jac.view_mut((0, 0), (m, self.dim)).copy_from(&self.lin_ineq);
            rhs.rows_mut(0, m).copy_from(&self.lin_ineq_rhs);
        }
        let mut grad = DVector::zeros(self.dim);
        for (idx, nl) in self.nonlinear.iter().enumerate() {
            nl.gradient(beta0, &mut grad);
            jac.row_mut(m + idx).copy_from(&grad.transpose());
            rhs[m + idx] = grad.dot(beta0) - nl.value(beta0);
        }
        Ok((jac, rhs))
    }

    /// True iff every stacked constraint value is `<= tol`.
    pub fn is_feasible(&self, beta: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.max_violation(beta)? <= tol)
    }

    /// Largest stacked constraint value (0 for an empty system).
    pub fn max_violation(&self, beta: &DVector<f64>) -> Result<f64> {
        let values = self.evaluate(beta)?;
        Ok(values.iter().fold(0.0f64, |m, &v| m.max(v)))
    }

    /// Canonical text form; re-parses to an identical set. Auto-added sign
    /// rows of `negdet` entries are serialized like any other row, so the
    /// canonical form of a round trip is stable after one pass.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        // Sign rows auto-added by negdet entries are skipped: re-parsing
        // the "nl:" line recreates them.
        let mut skip = std::collections::BTreeSet::new();
        for nl in &self.nonlinear {
            let NonlinearConstraint::NegDet2 { i, j, .. } = *nl;
            for r in 0..self.n_lin_ineq() {
                if skip.contains(&r) {
                    continue;
                }
                let row = self.lin_ineq.row(r);
                for idx in [i, j] {
                    let is_sign_row = self.lin_ineq_rhs[r] == 0.0
                        && row[idx] == 1.0
                        && (0..self.dim).all(|c| c == idx || row[c] == 0.0);
                    if is_sign_row {
                        skip.insert(r);
                        break;
                    }
                }
            }
        }
        for r in 0..self.n_lin_ineq() {
            if skip.contains(&r) {
                continue;
            }
            out.push_str("lin:");
            for j in 0..self.dim {
                out.push_str(&format!(" {}", fmt_num(self.lin_ineq[(r, j)])));
            }
            out.push_str(&format!(" <= {}\n", fmt_num(self.lin_ineq_rhs[r])));
        }
        for r in 0..self.n_lin_eq() {
            out.push_str("lin:");
            for j in 0..self.dim {
                out.push_str(&format!(" {}", fmt_num(self.lin_eq[(r, j)])));
            }
            out.push_str(&format!(" = {}\n", fmt_num(self.lin_eq_rhs[r])));
        }
        for nl in &self.nonlinear {
            out.push_str(&nl.canonical_line());
            out.push('\n');
        }
        out
    }
}

fn fmt_num(v: f64) -> String {
    // Shortest round-trippable decimal; locale independent.
    format!("{v}")
}

/// Parses the constraint file format over dimension `p`.
pub fn parse_constraints(text: &str, p: usize) -> Result<ConstraintSet> {
    let mut cs = ConstraintSet::empty(p);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let (tag, rest) = line
            .split_once(':')
            .ok_or_else(|| err("expected 'lin:' or 'nl:' prefix".into()))?;
        match tag.trim() {
            "lin" => {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                let op_pos = tokens
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "="))
                    .ok_or_else(|| err("missing operator (<=, >= or =)".into()))?;
                if op_pos != tokens.len() - 2 {
                    return Err(err("expected exactly one right-hand side value".into()));
                }
                if op_pos != p {
                    return Err(err(format!(
                        "expected {p} coefficients, found {op_pos}"
                    )));
                }
                let mut coeffs = Vec::with_capacity(p);
                for t in &tokens[..op_pos] {
                    coeffs.push(parse_f64(t).map_err(&err)?);
                }
                let rhs = parse_f64(tokens[op_pos + 1]).map_err(&err)?;
                let map_err = |e: Error| err(e.to_string());
                match tokens[op_pos] {
                    "<=" => cs.push_lin_ineq(&coeffs, rhs).map_err(map_err)?,
                    ">=" => {
                        let neg: Vec<f64> = coeffs.iter().map(|v| -v).collect();
                        cs.push_lin_ineq(&neg, -rhs).map_err(map_err)?
                    }
                    "=" => cs.push_lin_eq(&coeffs, rhs).map_err(map_err)?,
                    _ => unreachable!(),
                }
            }
            "nl" => {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                if tokens.first().copied() != Some("negdet") {
                    return Err(err(format!(
                        "unknown nonlinear kind '{}'",
                        tokens.first().copied().unwrap_or("")
                    )));
                }
                if tokens.len() != 4 {
                    return Err(err("negdet takes exactly three indices".into()));
                }
                let mut idx = [0usize; 3];
                for (slot, t) in idx.iter_mut().zip(&tokens[1..]) {
                    let v: usize = t
                        .parse()
                        .map_err(|_| err(format!("invalid index '{t}'")))?;
                    if v == 0 || v > p {
                        return Err(err(format!("index {v} out of range 1..={p}")));
                    }
                    *slot = v - 1;
                }
                cs.push_negdet(idx[0], idx[1], idx[2])
                    .map_err(|e| err(e.to_string()))?;
            }
            other => return Err(err(format!("unknown line tag '{other}'"))),
        }
    }
    Ok(cs)
}

fn parse_f64(token: &str) -> std::result::Result<f64, String> {
    let v: f64 = token
        .parse()
        .map_err(|_| format!("invalid number '{token}'"))?;
    if !v.is_finite() {
        return Err(format!("non-finite number '{token}'"));
    }
    Ok(v)
}
