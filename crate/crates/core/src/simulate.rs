//! Synthetic demo scenarios: a sign-constrained demand equation, a
//! concavity-constrained quadratic response surface, a constrained
//! logistic assay, and an instance whose prior region contains the
//! unconstrained fit (for constrained-vs-unconstrained comparisons).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{Map, Value};
use std::str::FromStr;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::report::json_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Double-log demand equation with nonnegative elasticities.
    Demand,
    /// Quadratic response surface constrained to be concave
    /// (`negdet` on the second-order coefficients).
    Concavity,
    /// Two-factor logistic assay with nonnegative interaction terms.
    Synergy,
    /// Instance whose unconstrained lasso fit already satisfies the prior
    /// region (sign constraints on the leading coefficients).
    Theorem2,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Demand => "demand",
            Scenario::Concavity => "concavity",
            Scenario::Synergy => "synergy",
            Scenario::Theorem2 => "theorem2",
        }
    }

    pub fn all() -> [Scenario; 4] {
        [
            Scenario::Demand,
            Scenario::Concavity,
            Scenario::Synergy,
            Scenario::Theorem2,
        ]
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "demand" => Ok(Scenario::Demand),
            "concavity" => Ok(Scenario::Concavity),
            "synergy" => Ok(Scenario::Synergy),
            "theorem2" => Ok(Scenario::Theorem2),
            other => Err(Error::Data(format!(
                "unknown scenario '{other}' (expected demand, concavity, synergy or theorem2)"
            ))),
        }
    }
}

/// A generated instance: data, constraint file text, and the ground truth.
#[derive(Debug, Clone)]
pub struct SimulatedInstance {
    pub data: Dataset,
    pub response_name: String,
    pub constraints_text: String,
    /// Ground-truth record (serializable).
    pub truth: Value,
    /// Name of the explicit intercept column, when the design carries one.
    pub intercept_column: Option<String>,
    /// Loss family the scenario is meant to be fitted with.
    pub family: &'static str,
}

fn truth_record(
    scenario: Scenario,
    seed: u64,
    beta: &[f64],
    intercept: Option<f64>,
    sigma: Option<f64>,
) -> Value {
    let mut m = Map::new();
    m.insert("scenario".into(), Value::String(scenario.name().into()));
    m.insert("seed".into(), Value::from(seed));
    m.insert(
        "beta".into(),
        Value::Array(beta.iter().map(|&b| json_f64(b)).collect()),
    );
    if let Some(a) = intercept {
        m.insert("intercept".into(), json_f64(a));
    }
    if let Some(s) = sigma {
        m.insert("noise_sigma".into(), json_f64(s));
    }
    Value::Object(m)
}

/// Generates a named scenario. Deterministic per `(scenario, seed, n)`.
pub fn generate(scenario: Scenario, seed: u64, n: Option<usize>) -> Result<SimulatedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let draw = |rng: &mut ChaCha8Rng| -> f64 { normal.sample(rng) };

    match scenario {
        Scenario::Demand => {
            let n = n.unwrap_or(80);
            let p = 6;
            let names = vec![
                "log_pe".to_string(),
                "log_pg".to_string(),
                "log_income".to_string(),
                "d1".to_string(),
                "d2".to_string(),
                "d3".to_string(),
            ];
            let mut x = DMatrix::zeros(n, p);
            for i in 0..n {
                x[(i, 0)] = 0.5 * draw(&mut rng);
                x[(i, 1)] = 0.5 * draw(&mut rng);
                x[(i, 2)] = 0.5 * draw(&mut rng);
                let quarter = i % 4;
                for d in 0..3 {
                    x[(i, 3 + d)] = if quarter == d { 1.0 } else { 0.0 };
                }
            }
            let beta = [0.8, 0.3, 0.5, -0.4, 0.2, 0.0];
            let alpha = 1.0;
            let sigma = 0.3;
            let y = DVector::from_fn(n, |i, _| {
                let mut v = alpha;
                for j in 0..p {
                    v += beta[j] * x[(i, j)];
                }
                v + sigma * draw(&mut rng)
            });
            let constraints_text = "\
# nonnegative price and income elasticities
lin: -1 0 0 0 0 0 <= 0
lin: 0 -1 0 0 0 0 <= 0
lin: 0 0 -1 0 0 0 <= 0
"
            .to_string();
            Ok(SimulatedInstance {
                data: Dataset::new(y, x, names)?,
                response_name: "log_q".into(),
                constraints_text,
                truth: truth_record(scenario, seed, &beta, Some(alpha), Some(sigma)),
                intercept_column: None,
                family: "gaussian",
            })
        }
        Scenario::Concavity => {
            let n = n.unwrap_or(80);
            let names = vec![
                "x2".to_string(),
                "x3".to_string(),
                "x2sq".to_string(),
                "x3sq".to_string(),
                "x2x3".to_string(),
            ];
            let mut x = DMatrix::zeros(n, 5);
            for i in 0..n {
                let a = rng.random_range(0.0..2.0);
                let b = rng.random_range(0.0..2.0);
                x[(i, 0)] = a;
                x[(i, 1)] = b;
                x[(i, 2)] = a * a;
                x[(i, 3)] = b * b;
                x[(i, 4)] = 2.0 * a * b;
            }
            // Coefficients in constraint-space order: intercept first.
            let alpha = 2.0;
            let beta = [1.0, 0.0, -1.0, -0.8, 0.5];
            let sigma = 0.3;
            let y = DVector::from_fn(n, |i, _| {
                let mut v = alpha;
                for j in 0..5 {
                    v += beta[j] * x[(i, j)];
                }
                v + sigma * draw(&mut rng)
            });
            // Constraint dimension 6 = p + 1: coordinate 1 is the
            // intercept, the curvature coefficients are 4, 5, 6.
            let constraints_text = "\
# concave response surface
nl: negdet 4 5 6
"
            .to_string();
            Ok(SimulatedInstance {
                data: Dataset::new(y, x, names)?,
                response_name: "y".into(),
                constraints_text,
                truth: truth_record(scenario, seed, &beta, Some(alpha), Some(sigma)),
                intercept_column: None,
                family: "gaussian",
            })
        }
        Scenario::Synergy => {
            let per_cell = n.map(|total| (total / 10).max(2)).unwrap_or(30);
            let n = per_cell * 10;
            let mut names = vec!["intercept".to_string(), "a2".to_string()];
            for j in 2..=5 {
                names.push(format!("t{j}"));
            }
            for j in 2..=5 {
                names.push(format!("e2{j}"));
            }
            let p = 10;
            // mu, a2, t2..t5, e22..e25
            let coef = [-1.0, 0.5, 0.3, 0.6, 0.9, 1.2, 0.4, 0.0, 0.6, 0.0];
            let mut x = DMatrix::zeros(n, p);
            let mut y = DVector::zeros(n);
            let mut row = 0usize;
            for i in 1..=2usize {
                for j in 1..=5usize {
                    for _ in 0..per_cell {
                        x[(row, 0)] = 1.0;
                        if i == 2 {
                            x[(row, 1)] = 1.0;
                        }
                        if j >= 2 {
                            x[(row, 2 + (j - 2))] = 1.0;
                        }
                        if i == 2 && j >= 2 {
                            x[(row, 6 + (j - 2))] = 1.0;
                        }
                        let eta: f64 = (0..p).map(|c| coef[c] * x[(row, c)]).sum();
                        let pi = 1.0 / (1.0 + (-eta).exp());
                        y[row] = if rng.random_range(0.0..1.0) < pi { 1.0 } else { 0.0 };
                        row += 1;
                    }
                }
            }
            let mut constraints_text =
                String::from("# nonnegative interaction terms (synergy)\n");
            for k in 0..4 {
                let mut coeffs = vec!["0"; p];
                coeffs[6 + k] = "-1";
                constraints_text.push_str(&format!("lin: {} <= 0\n", coeffs.join(" ")));
            }
            let mut data = Dataset::new(y, x, names)?;
            data.mark_intercept_column("intercept")?;
            Ok(SimulatedInstance {
                data,
                response_name: "response".into(),
                constraints_text,
                truth: truth_record(scenario, seed, &coef, None, None),
                intercept_column: Some("intercept".into()),
                family: "logistic",
            })
        }
        Scenario::Theorem2 => {
            let n = n.unwrap_or(50);
            let p = 6;
            let names: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
            let x = DMatrix::from_fn(n, p, |_, _| draw(&mut rng));
            let beta = [3.0, 1.5, 0.0, 0.0, 2.0, 0.0];
            let sigma = 1.0;
            let y = DVector::from_fn(n, |i, _| {
                let mut v = 0.0;
                for j in 0..p {
                    v += beta[j] * x[(i, j)];
                }
                v + sigma * draw(&mut rng)
            });
            let constraints_text = "\
# prior region containing the unconstrained fit
lin: -1 0 0 0 0 0 <= 0
lin: 0 -1 0 0 0 0 <= 0
"
            .to_string();
            Ok(SimulatedInstance {
                data: Dataset::new(y, x, names)?,
                response_name: "y".into(),
                constraints_text,
                truth: truth_record(scenario, seed, &beta, Some(0.0), Some(sigma)),
                intercept_column: None,
                family: "gaussian",
            })
        }
    }
}
