//! Cross-route consistency checks: the same optimization expressed through
//! different encodings or solved by an independent closed form must agree.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use classo_core::constraints::parse_constraints;
use classo_core::data::Dataset;
use classo_core::estimator::{fit_constrained, FitSpec};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

// The intercept can live in the constraint space two ways: as the implicit
// first coordinate of a (p+1)-dimensional constraint file, or as an
// explicit all-ones design column. Both encodings solve the same problem
// and must produce the same coefficients.
#[test]
fn intercept_encodings_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for case in 0..15 {
        let n = 30;
        let p = 3;
        let x = DMatrix::from_fn(n, p, |_, _| normal(&mut rng));
        let y = DVector::from_fn(n, |i, _| {
            -0.4 + 1.2 * x[(i, 0)] - 0.7 * x[(i, 2)] + 0.3 * normal(&mut rng)
        });

        // Constraint over (intercept, beta): intercept >= -1, beta1 >= 0.
        let text = "lin: -1 0 0 0 <= 1\nlin: 0 -1 0 0 <= 0\n";
        let cs = parse_constraints(text, p + 1).unwrap();
        let s = rng.random_range(0.4..2.0);

        // Encoding 1: implicit intercept coordinate.
        let data1 = Dataset::new(y.clone(), x.clone(), vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let mut spec1 = FitSpec::with_budget(s);
        spec1.intercept = true;
        let fit1 = fit_constrained(&data1, &cs, &spec1).unwrap();

        // Encoding 2: explicit ones column (weight zero in the budget).
        let mut x_aug = DMatrix::from_element(n, p + 1, 1.0);
        x_aug.view_mut((0, 1), (n, p)).copy_from(&x);
        let mut data2 = Dataset::new(
            y.clone(),
            x_aug,
            vec!["ones".into(), "a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        data2.mark_intercept_column("ones").unwrap();
        let mut spec2 = FitSpec::with_budget(s);
        spec2.intercept = false;
        spec2.standardize = false;
        let fit2 = fit_constrained(&data2, &cs, &spec2).unwrap();

        assert!(
            (fit1.intercept - fit2.beta[0]).abs() <= 1e-7,
            "case {case}: intercepts differ: {} vs {}",
            fit1.intercept,
            fit2.beta[0]
        );
        for j in 0..p {
            assert!(
                (fit1.beta[j] - fit2.beta[j + 1]).abs() <= 1e-7,
                "case {case}, coord {j}: {} vs {}",
                fit1.beta[j],
                fit2.beta[j + 1]
            );
        }
    }
}

// With a slack budget and equality constraints only, the fit has the
// closed form of equality-constrained least squares; solve its KKT system
// directly as an independent oracle.
#[test]
fn equality_constrained_fits_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for case in 0..30 {
        let n = 25;
        let p = rng.random_range(2..=5usize);
        let q = rng.random_range(1..=(p - 1).min(2));
        let x = DMatrix::from_fn(n, p, |_, _| normal(&mut rng));
        let y = DVector::from_fn(n, |_, _| 2.0 * normal(&mut rng));
        let e = DMatrix::from_fn(q, p, |_, _| normal(&mut rng));
        let rhs = DVector::from_fn(q, |_, _| 0.5 * normal(&mut rng));

        let mut text = String::new();
        for r in 0..q {
            let coeffs: Vec<String> = (0..p).map(|j| e[(r, j)].to_string()).collect();
            text.push_str(&format!("lin: {} = {}\n", coeffs.join(" "), rhs[r]));
        }
        let cs = parse_constraints(&text, p).unwrap();

        let data = Dataset::new(y.clone(), x.clone(), (0..p).map(|j| format!("x{j}")).collect())
            .unwrap();
        let mut spec = FitSpec::with_budget(f64::INFINITY);
        spec.intercept = false;
        spec.standardize = false;
        let fit = fit_constrained(&data, &cs, &spec).unwrap();

        // KKT oracle: [2X'X, E'; E, 0] [beta; nu] = [2X'y; rhs].
        let dim = p + q;
        let mut kkt = DMatrix::zeros(dim, dim);
        let gram = x.transpose() * &x * 2.0;
        kkt.view_mut((0, 0), (p, p)).copy_from(&gram);
        kkt.view_mut((p, 0), (q, p)).copy_from(&e);
        kkt.view_mut((0, p), (p, q)).copy_from(&e.transpose());
        let mut b = DVector::zeros(dim);
        b.rows_mut(0, p).copy_from(&(x.transpose() * &y * 2.0));
        b.rows_mut(p, q).copy_from(&rhs);
        let sol = kkt.lu().solve(&b).expect("nonsingular KKT system");

        for j in 0..p {
            assert!(
                (fit.beta[j] - sol[j]).abs() <= 1e-7,
                "case {case}, coord {j}: {} vs closed form {}",
                fit.beta[j],
                sol[j]
            );
        }
    }
}
