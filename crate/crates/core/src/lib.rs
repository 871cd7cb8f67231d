//! Simultaneous variable selection and parameter estimation by lasso under
//! prior constraints.
//!
//! The estimator minimizes a residual sum of squares subject to an L1
//! budget `sum_j w_j |beta_j| <= s` and a prior constraint system
//! `g(beta) <= 0` (linear inequalities, linear equalities, and registered
//! smooth nonlinear constraints). Everything reduces to dense convex
//! quadratic programs via the split `beta = beta+ - beta-`; nonlinear
//! constraints enter through sequential linearization.
//!
//! The crate also provides budget selection by cross-validation, GCV, and a
//! BIC-type criterion; a Monte Carlo feasible initializer; a least-squares
//! approximation bridge so the same machinery applies to logistic
//! regression; counting degrees of freedom; and bootstrap standard errors.
//!
//! ```
//! use classo_core::constraints::parse_constraints;
//! use classo_core::data::Dataset;
//! use classo_core::estimator::{fit_constrained, FitSpec};
//! use nalgebra::{DMatrix, DVector};
//!
//! let data = Dataset::new(
//!     DVector::from_row_slice(&[3.0, 1.0]),
//!     DMatrix::identity(2, 2),
//!     vec!["a".into(), "b".into()],
//! )?;
//! let cs = parse_constraints("lin: 1 0 <= 1.5\n", 2)?;
//! let mut spec = FitSpec::with_budget(2.0);
//! spec.intercept = false;
//! spec.standardize = false;
//! let fit = fit_constrained(&data, &cs, &spec)?;
//! assert!((fit.beta[0] - 1.5).abs() < 1e-6);
//! assert!((fit.beta[1] - 0.5).abs() < 1e-6);
//! # Ok::<(), classo_core::Error>(())
//! ```

pub mod constraints;
pub mod data;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod initializer;
pub mod lsa;
pub mod oracle;
pub mod qp;
pub mod report;
pub mod simulate;
pub mod tuning;

pub use error::{Error, Result};

#[cfg(test)]
mod thread_safety {
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn value_types_are_shareable() {
        assert_send_sync::<crate::qp::QpProblem>();
        assert_send_sync::<crate::qp::QpSolution>();
        assert_send_sync::<crate::constraints::ConstraintSet>();
        assert_send_sync::<crate::data::Dataset>();
        assert_send_sync::<crate::estimator::FitResult>();
        assert_send_sync::<crate::estimator::FitSpec>();
        assert_send_sync::<crate::lsa::LsaSurrogate>();
        assert_send_sync::<crate::initializer::McConfig>();
        assert_send_sync::<crate::tuning::TuningCurve>();
        assert_send_sync::<crate::inference::BootstrapReport>();
    }
}
