//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

use classo_core::constraints::{parse_constraints, ConstraintSet};
use classo_core::data::Dataset;
use classo_core::estimator::{fit_constrained, FitResult, FitSpec, SolverInfo};
use classo_core::inference::{
    bootstrap_se, degrees_of_freedom, BootstrapConfig,
};
use classo_core::initializer::{log_density, mc_initial_point, McConfig};
use classo_core::lsa;
use classo_core::oracle::{brute_force_fit, naive_loo_cv, GridSpec};
use classo_core::qp::{kkt_residuals, solve_qp, QpProblem, SolveStatus, SolverOptions};
use classo_core::tuning;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn plain_spec(s: f64) -> FitSpec {
    FitSpec {
        s,
        intercept: false,
        standardize: false,
        ..FitSpec::default()
    }
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize, sparsity: usize, sigma: f64) -> Dataset {
    let x = DMatrix::from_fn(n, p, |_, _| normal(rng));
    let mut beta = DVector::zeros(p);
    for j in 0..sparsity.min(p) {
        beta[j] = 2.0 * normal(rng);
    }
    let y = &x * &beta + DVector::from_fn(n, |_, _| sigma * normal(rng));
    Dataset::new(y, x, (0..p).map(|j| format!("x{j}")).collect()).unwrap()
}

fn ols(data: &Dataset) -> DVector<f64> {
    let gram = data.x.transpose() * &data.x;
    let rhs = data.x.transpose() * &data.y;
    gram.lu().solve(&rhs).unwrap()
}

// ---------------------------------------------------------------------
// 1. KKT suite: 500 seeded random QPs solve to Optimal with residuals
//    at or below 1e-6 in under 10 seconds.
// ---------------------------------------------------------------------
#[test]
fn criterion_01_kkt_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(86_420);
    for case in 0..500 {
        let d = rng.random_range(1..=10usize);
        let m = rng.random_range(0..=15usize);
        let r = DMatrix::from_fn(d, d, |_, _| normal(&mut rng));
        let q = &r * r.transpose() + DMatrix::identity(d, d) * 0.1;
        let c = DVector::from_fn(d, |_, _| normal(&mut rng));
        let a = DMatrix::from_fn(m, d, |_, _| normal(&mut rng));
        let b = DVector::from_fn(m, |_, _| normal(&mut rng).abs() + 0.05);
        let problem = QpProblem::new(q, c)
            .unwrap()
            .add_ineq_rows(a, b)
            .unwrap();
        let sol = solve_qp(&problem, None, &SolverOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal, "case {case} not optimal");
        let res = kkt_residuals(&problem, &sol);
        assert!(
            res.max() <= 1e-6,
            "case {case}: residuals {res:?} exceed 1e-6"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("PASS criterion 1: 500 random QPs optimal, KKT residuals <= 1e-6 in {elapsed:?}");
}

// ---------------------------------------------------------------------
// 2. Soft-thresholding oracle on orthonormal designs, 100 instances.
// ---------------------------------------------------------------------
fn soft_threshold_budget(z: &DVector<f64>, s: f64) -> DVector<f64> {
    let total: f64 = z.iter().map(|v| v.abs()).sum();
    if total <= s {
        return z.clone();
    }
    let mut lo = 0.0f64;
    let mut hi = z.amax();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let sum: f64 = z.iter().map(|v| (v.abs() - mid).max(0.0)).sum();
        if sum > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = 0.5 * (lo + hi);
    z.map(|v| v.signum() * (v.abs() - g).max(0.0))
}

#[test]
fn criterion_02_soft_threshold_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(24_680);
    for case in 0..100 {
        let p = rng.random_range(1..=8usize);
        let n = p + 10;
        let raw = DMatrix::from_fn(n, p, |_, _| normal(&mut rng));
        let q = raw.qr().q();
        let y = DVector::from_fn(n, |_, _| normal(&mut rng) * 2.0);
        let z = q.transpose() * &y;
        let budget_frac = rng.random_range(0.2..1.2);
        let s = budget_frac * z.iter().map(|v| v.abs()).sum::<f64>();
        let expected = soft_threshold_budget(&z, s);

        let data = Dataset::new(y, q.clone(), (0..p).map(|j| format!("x{j}")).collect()).unwrap();
        let fit = fit_constrained(&data, &ConstraintSet::empty(p), &plain_spec(s)).unwrap();
        for j in 0..p {
            assert!(
                (fit.beta[j] - expected[j]).abs() <= 1e-8,
                "case {case}, coord {j}: {} vs {}",
                fit.beta[j],
                expected[j]
            );
        }
    }
    println!("PASS criterion 2: 100 orthonormal fits match the soft-threshold closed form to 1e-8");
}

// ---------------------------------------------------------------------
// 3. Brute-force equivalence on 50 low-dimensional instances.
// ---------------------------------------------------------------------

/// Geometrically refined scan built on the exhaustive oracle. Each stage
/// re-centers on the previous optimum; a window whose argmin lands on its
/// boundary is retried wider (convex objectives make this sound).
fn staged_oracle(
    data: &Dataset,
    cs: &ConstraintSet,
    s: f64,
    coarse: f64,
    target: f64,
) -> (DVector<f64>, f64) {
    let p = data.p();
    let w = s + 0.1;
    let mut center: DVector<f64> = DVector::zeros(p);
    let mut res = coarse;
    let mut half = w;
    loop {
        let mut widen = 1.0f64;
        let (beta, rss) = loop {
            let bounds: Vec<(f64, f64)> = (0..p)
                .map(|j| {
                    let lo = (center[j] - half * widen).max(-w);
                    let hi = (center[j] + half * widen).min(w);
                    (lo, hi)
                })
                .collect();
            let grid = GridSpec::new(bounds.clone(), res);
            let (beta, rss) = brute_force_fit(data, cs, s, &grid).unwrap();
            // An argmin on an interior window face means the window missed
            // the optimum; compare against the extreme lattice points.
            let on_boundary = (0..p).any(|j| {
                let (lo, hi) = bounds[j];
                let top = lo + ((hi - lo) / res + 1e-9).floor() * res;
                (lo > -w && (beta[j] - lo).abs() < res * 0.5)
                    || (top < w - res && (beta[j] - top).abs() < res * 0.5)
            });
            if !on_boundary || widen > 64.0 {
                break (beta, rss);
            }
            widen *= 2.0;
        };
        if res <= target {
            return (beta, rss);
        }
        center = beta;
        half = 6.0 * res;
        res = (res / 4.0).max(target);
    }
}

type FacePoint = Option<(DVector<f64>, f64)>;

/// Exhaustive scan of the L1 budget face near `center`: one coordinate is
/// eliminated exactly via `sum |beta_j| = s`, the rest walk a lattice.
/// An axis-aligned lattice quantizes the budget and cannot localize an
/// argmin lying on the face; scanning the face itself can.
fn face_polish(
    data: &Dataset,
    cs: &ConstraintSet,
    s: f64,
    center: &DVector<f64>,
    half: f64,
    res: f64,
) -> FacePoint {
    let p = data.p();
    let k = (0..p).max_by(|&a, &b| center[a].abs().total_cmp(&center[b].abs()))?;
    let sign_k = if center[k] >= 0.0 { 1.0 } else { -1.0 };
    let free: Vec<usize> = (0..p).filter(|&j| j != k).collect();
    let steps = (2.0 * half / res).round() as usize + 1;

    let h_mat = data.x.transpose() * &data.x;
    let h_vec = data.x.transpose() * &data.y;
    let yty = data.y.norm_squared();

    let mut idx = vec![0usize; free.len()];
    let mut beta = DVector::zeros(p);
    let mut best: Option<(f64, DVector<f64>)> = None;
    'outer: loop {
        let mut partial = 0.0;
        for (d, &j) in free.iter().enumerate() {
            beta[j] = center[j] - half + idx[d] as f64 * res;
            partial += beta[j].abs();
        }
        let remaining = s - partial;
        if remaining >= 0.0 {
            beta[k] = sign_k * remaining;
            if cs.is_feasible(&beta, 1e-9).unwrap() {
                let mut quad = 0.0;
                for a in 0..p {
                    let mut row = 0.0;
                    for b in 0..p {
                        row += h_mat[(a, b)] * beta[b];
                    }
                    quad += beta[a] * row - 2.0 * h_vec[a] * beta[a];
                }
                let rss = quad + yty;
                if best.as_ref().is_none_or(|(r, _)| rss < *r) {
                    best = Some((rss, beta.clone()));
                }
            }
        }
        let mut d = free.len();
        loop {
            if d == 0 {
                break 'outer;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < steps {
                break;
            }
            idx[d] = 0;
        }
    }
    best.map(|(rss, beta)| (beta, rss))
}

/// Euclidean projection onto the L1 ball of radius `s` (sort-based).
fn project_l1_ball(v: &DVector<f64>, s: f64) -> DVector<f64> {
    let total: f64 = v.iter().map(|x| x.abs()).sum();
    if total <= s {
        return v.clone();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - s) / (k + 1) as f64;
        if k + 1 == mags.len() || t >= mags[k + 1] {
            theta = t;
            break;
        }
    }
    v.map(|x| x.signum() * (x.abs() - theta).max(0.0))
}

/// Dykstra's projection onto the intersection of the L1 ball, every
/// halfspace, and every hyperplane of the linear constraint system.
#[allow(clippy::needless_range_loop)]
fn dykstra_project(point: &DVector<f64>, cs: &ConstraintSet, s: f64) -> DVector<f64> {
    let (a, rhs) = cs.lin_ineq();
    let (e, erhs) = cs.lin_eq();
    let n_sets = 1 + a.nrows() + e.nrows();
    let p = point.len();
    let mut x = point.clone();
    let mut increments = vec![DVector::zeros(p); n_sets];
    for _ in 0..400 {
        let mut moved = 0.0f64;
        for set in 0..n_sets {
            let y = &x + &increments[set];
            let projected = if set == 0 {
                if s.is_finite() {
                    project_l1_ball(&y, s)
                } else {
                    y.clone()
                }
            } else if set <= a.nrows() {
                let r = set - 1;
                let row = a.row(r).transpose();
                let viol = row.dot(&y) - rhs[r];
                if viol > 0.0 {
                    &y - &row * (viol / row.norm_squared())
                } else {
                    y.clone()
                }
            } else {
                let r = set - 1 - a.nrows();
                let row = e.row(r).transpose();
                let viol = row.dot(&y) - erhs[r];
                &y - &row * (viol / row.norm_squared())
            };
            increments[set] = &y - &projected;
            moved = moved.max((&projected - &x).amax());
            x = projected;
        }
        if moved <= 1e-14 {
            break;
        }
    }
    x
}

/// Projected gradient descent polish: an algorithmic route independent of
/// the active-set solver.
fn pgd_polish(data: &Dataset, cs: &ConstraintSet, s: f64, start: &DVector<f64>) -> DVector<f64> {
    assert_eq!(cs.n_nonlinear(), 0);
    let h = data.x.transpose() * &data.x;
    let g = data.x.transpose() * &data.y;
    let lmax = h
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, &v| m.max(v));
    let step = 1.0 / (2.0 * lmax);
    let mut beta = dykstra_project(start, cs, s);
    for _ in 0..20_000 {
        let grad = (&h * &beta - &g) * 2.0;
        let next = dykstra_project(&(&beta - &grad * step), cs, s);
        let delta = (&next - &beta).amax();
        beta = next;
        if delta <= 1e-13 {
            break;
        }
    }
    beta
}

#[test]
fn criterion_03_brute_force_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(13_579);
    for case in 0..50 {
        let p = rng.random_range(1..=3usize);
        let n = 25;
        let data = random_dataset(&mut rng, n, p, p, 0.5);

        // Sign constraints through the origin plus one random halfspace;
        // the origin stays feasible by construction.
        let mut text = String::new();
        for j in 0..p {
            if rng.random_range(0.0..1.0f64) < 0.4 {
                let sign = if rng.random_range(0.0..1.0f64) < 0.5 { 1.0 } else { -1.0 };
                let mut row = vec![0.0; p];
                row[j] = sign;
                let coeffs: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                text.push_str(&format!("lin: {} <= 0\n", coeffs.join(" ")));
            }
        }
        let coeffs: Vec<String> = (0..p).map(|_| normal(&mut rng).to_string()).collect();
        text.push_str(&format!(
            "lin: {} <= {}\n",
            coeffs.join(" "),
            normal(&mut rng).abs() + 0.1
        ));
        let cs = parse_constraints(&text, p).unwrap();

        let s = rng.random_range(0.3..1.0) * ols(&data).iter().map(|v| v.abs()).sum::<f64>();
        let fit = fit_constrained(&data, &cs, &plain_spec(s)).unwrap();

        let coarse = (2.0 * (s + 0.1) / 16.0).max(2e-3);
        let (beta_grid, rss_grid) = staged_oracle(&data, &cs, s, coarse, 1e-3);
        // Polish the grid point: finer lattice, a scan of the budget face
        // when it binds (an axis-aligned lattice cannot localize a face
        // argmin), and projected gradient descent; keep the best.
        let rss_of = |b: &DVector<f64>| (&data.y - &data.x * b).norm_squared();
        let mut candidates: Vec<DVector<f64>> = vec![pgd_polish(&data, &cs, s, &beta_grid)];
        candidates.push(staged_oracle(&data, &cs, s, coarse, 1e-5).0);
        if let Some((beta_face, _)) = face_polish(&data, &cs, s, &beta_grid, 3e-3, 1e-5) {
            candidates.push(beta_face);
        }
        let beta_polish = candidates
            .into_iter()
            .min_by(|a, b| rss_of(a).total_cmp(&rss_of(b)))
            .unwrap();

        assert!(
            fit.objective <= rss_grid + 1e-4,
            "case {case}: fit objective {} exceeds oracle {} + 1e-4",
            fit.objective,
            rss_grid
        );
        for j in 0..p {
            assert!(
                (fit.beta[j] - beta_polish[j]).abs() <= 1e-3,
                "case {case}, coord {j}: {} vs polished {}",
                fit.beta[j],
                beta_polish[j]
            );
        }
    }
    println!("PASS criterion 3: 50 fits match the brute-force oracle (objective +1e-4, beta 1e-3)");
}

// ---------------------------------------------------------------------
// 4. Constrained = unconstrained whenever the unconstrained fit already
//    satisfies the prior region (200 instances).
// ---------------------------------------------------------------------
#[test]
fn criterion_04_inactive_prior_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(97_531);
    for case in 0..200 {
        let data = random_dataset(&mut rng, 50, 6, 3, 1.0);
        let s = rng.random_range(0.2..0.9) * ols(&data).iter().map(|v| v.abs()).sum::<f64>();
        let spec = plain_spec(s);
        let unconstrained = fit_constrained(&data, &ConstraintSet::empty(6), &spec).unwrap();

        // Constraints satisfied by the unconstrained solution: strict
        // random halfspaces plus weakly active sign rows at its zeros.
        let mut cs = ConstraintSet::empty(6);
        for _ in 0..3 {
            let row: Vec<f64> = (0..6).map(|_| normal(&mut rng)).collect();
            let value: f64 = row
                .iter()
                .zip(unconstrained.beta.iter())
                .map(|(a, b)| a * b)
                .sum();
            cs.push_lin_ineq(&row, value + normal(&mut rng).abs() * 0.5 + 0.01)
                .unwrap();
        }
        for j in 0..6 {
            if unconstrained.beta[j] == 0.0 {
                let mut row = vec![0.0; 6];
                row[j] = -1.0;
                cs.push_lin_ineq(&row, 0.0).unwrap();
            }
        }

        let constrained = fit_constrained(&data, &cs, &spec).unwrap();
        let diff = (&constrained.beta - &unconstrained.beta).amax();
        assert!(diff <= 1e-6, "case {case}: max difference {diff}");
    }
    println!("PASS criterion 4: 200 instances agree (constrained vs unconstrained) to 1e-6");
}

// ---------------------------------------------------------------------
// 5. Leave-one-out CV identity against the naive double loop.
// ---------------------------------------------------------------------
#[test]
fn criterion_05_loo_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11_223);
    for case in 0..10 {
        let n = rng.random_range(8..=20usize);
        let p = rng.random_range(1..=3usize);
        let data = random_dataset(&mut rng, n, p, p, 0.7);
        let cs = ConstraintSet::empty(p);
        let s_max = ols(&data).iter().map(|v| v.abs()).sum::<f64>();
        let grid: Vec<f64> = (0..8).map(|k| k as f64 * s_max / 7.0).collect();

        let spec = plain_spec(0.0);
        let curve = tuning::cross_validate(&data, &cs, &grid, n, &spec, 0).unwrap();
        let naive = naive_loo_cv(&data, &cs, &grid, |d, c, s| {
            let mut sp = spec.clone();
            sp.s = s;
            fit_constrained(d, c, &sp)
        })
        .unwrap();
        for (gi, expected) in naive.iter().enumerate() {
            let expected = expected.expect("naive fit failed");
            assert!(
                (curve.values[gi] - expected).abs() <= 1e-10,
                "case {case}, grid {gi}: {} vs {}",
                curve.values[gi],
                expected
            );
        }
    }
    println!("PASS criterion 5: leave-one-out CV equals the naive double loop to 1e-10");
}

// ---------------------------------------------------------------------
// 6. Counting degrees of freedom on 25 constructed fixtures.
// ---------------------------------------------------------------------
fn fixture_fit(beta: &[f64], zero_set: &[usize]) -> FitResult {
    FitResult {
        beta: DVector::from_row_slice(beta),
        intercept: 0.0,
        l1_norm: beta.iter().map(|v| v.abs()).sum(),
        objective: 1.0,
        active_constraints: Vec::new(),
        zero_set: zero_set.to_vec(),
        df: 0,
        solver_info: SolverInfo {
            qp_iterations: 0,
            linearization_rounds: 0,
            status: SolveStatus::Optimal,
            l1_multiplier: None,
            jitter: 0.0,
            standardized: false,
        },
        warnings: Vec::new(),
    }
}

#[test]
fn criterion_06_df_formula() {
    // (p, beta, zero_set, constraint text, expected df)
    type DfFixture = (usize, Vec<f64>, Vec<usize>, String, usize);
    let none = "";
    let cases: Vec<DfFixture> = vec![
        // no constraints: df = p - #zeros
        (4, vec![2.0, 0.0, 1.5, 0.0], vec![1, 3], none.into(), 2),
        (1, vec![1.0], vec![], none.into(), 1),
        (1, vec![0.0], vec![0], none.into(), 0),
        (3, vec![1.0, 2.0, 3.0], vec![], none.into(), 3),
        (5, vec![0.0; 5], (0..5).collect(), none.into(), 0),
        // one binding inequality
        (4, vec![2.0, 0.0, 1.5, 0.0], vec![1, 3], "lin: 1 0 0 0 <= 2\n".into(), 1),
        (2, vec![1.0, 1.0], vec![], "lin: 1 1 <= 2\n".into(), 1),
        (2, vec![1.0, 1.0], vec![], "lin: 1 1 <= 5\n".into(), 2),
        (2, vec![0.5, 0.0], vec![1], "lin: -1 0 <= 0\n".into(), 1),
        (2, vec![0.0, 0.0], vec![0, 1], "lin: -1 0 <= 0\n".into(), 0),
        // floor at zero: more zeros+actives than p
        (2, vec![0.0, 0.0], vec![0, 1], "lin: -1 0 <= 0\nlin: 0 -1 <= 0\n".into(), 0),
        (3, vec![0.0; 3], vec![0, 1, 2], "lin: -1 0 0 <= 0\nlin: 0 -1 0 <= 0\nlin: 0 0 -1 <= 0\n".into(), 0),
        // equalities always active
        (2, vec![0.6, 0.4], vec![], "lin: 1 1 = 1\n".into(), 1),
        (3, vec![0.5, 0.5, 1.0], vec![], "lin: 1 1 0 = 1\nlin: 0 0 1 = 1\n".into(), 1),
        (3, vec![0.5, 0.5, 0.0], vec![2], "lin: 1 1 0 = 1\n".into(), 1),
        // inactive inequalities do not count
        (3, vec![1.0, -1.0, 2.0], vec![], "lin: 1 0 0 <= 5\nlin: 0 1 0 <= 5\n".into(), 3),
        // mixed: one active, one inactive, one zero
        (3, vec![2.0, 0.0, 1.0], vec![1], "lin: 1 0 0 <= 2\nlin: 0 0 1 <= 9\n".into(), 1),
        // nonlinear constraint active on the cone boundary
        // (sign rows hold strictly, so only the cone itself binds)
        (3, vec![-1.0, -1.0, 1.0], vec![], "nl: negdet 1 2 3\n".into(), 2),
        // nonlinear constraint strictly inside (only sign rows bind at 0)
        (3, vec![-1.0, -1.0, 0.5], vec![], "nl: negdet 1 2 3\n".into(), 3),
        (3, vec![0.0, -1.0, 0.0], vec![0, 2], "nl: negdet 1 2 3\n".into(), 0),
        // four zero coords, two active rows, p = 6
        (6, vec![1.0, 0.0, 0.0, 0.0, 0.0, 2.0], vec![1, 2, 3, 4], "lin: 1 0 0 0 0 0 <= 1\nlin: 0 0 0 0 0 1 <= 2\n".into(), 0),
        (6, vec![1.0, 0.0, 0.0, 0.0, 0.0, 2.0], vec![1, 2, 3, 4], "lin: 1 0 0 0 0 0 <= 1\n".into(), 1),
        (6, vec![1.0, 1.0, 1.0, 0.0, 0.0, 2.0], vec![3, 4], none.into(), 4),
        // activity tolerance: value within 1e-9 counts
        (2, vec![1.0 - 5e-10, 1.0], vec![], "lin: 1 0 <= 1\n".into(), 1),
        (2, vec![1.0 - 5e-3, 1.0], vec![], "lin: 1 0 <= 1\n".into(), 2),
    ];
    assert_eq!(cases.len(), 25);
    for (idx, (p, beta, zeros, text, expected)) in cases.iter().enumerate() {
        let cs = if text.is_empty() {
            ConstraintSet::empty(*p)
        } else {
            parse_constraints(text, *p).unwrap()
        };
        let fit = fixture_fit(beta, zeros);
        let df = degrees_of_freedom(&fit, &cs, 1e-9).unwrap();
        assert_eq!(df, *expected, "fixture {idx}");
    }
    println!("PASS criterion 6: 25 counting-df fixtures agree exactly (including the floor at 0)");
}

// ---------------------------------------------------------------------
// 7. LSA exactness: Gaussian surrogate fits equal raw fits; logistic
//    unpenalized estimates match an independent Newton solver.
// ---------------------------------------------------------------------
fn newton_logistic(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (n, p) = (x.nrows(), x.ncols());
    let mut beta = DVector::zeros(p);
    for _ in 0..200 {
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);
        for i in 0..n {
            let mut t = 0.0f64;
            for j in 0..p {
                t += x[(i, j)] * beta[j];
            }
            let pi = 1.0 / (1.0 + (-t).exp());
            for j in 0..p {
                grad[j] += x[(i, j)] * (y[i] - pi);
            }
            let w = pi * (1.0 - pi);
            for a in 0..p {
                for b in 0..p {
                    hess[(a, b)] += w * x[(i, a)] * x[(i, b)];
                }
            }
        }
        if grad.amax() < 1e-13 {
            break;
        }
        let delta = hess.lu().solve(&grad).unwrap();
        beta += delta;
    }
    beta
}

#[test]
fn criterion_07_lsa_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(55_441);
    // Gaussian-family LSA is exact: 50 instances.
    for case in 0..50 {
        let p = rng.random_range(2..=5usize);
        let data = random_dataset(&mut rng, 30, p, p, 0.6);
        let mut text = String::new();
        let mut row = vec![0.0; p];
        row[0] = -1.0;
        let coeffs: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&format!("lin: {} <= 0\n", coeffs.join(" ")));
        let cs = parse_constraints(&text, p).unwrap();
        let s = rng.random_range(0.3..1.1) * ols(&data).iter().map(|v| v.abs()).sum::<f64>();
        let spec = plain_spec(s);

        let direct = fit_constrained(&data, &cs, &spec).unwrap();
        let surrogate = lsa::fit_unpenalized(lsa::Family::Gaussian, &data, &lsa::LsaOptions::default()).unwrap();
        let approx = lsa::fit_lsa_constrained(&surrogate, &cs, &spec).unwrap();
        let diff = (&direct.beta - &approx.beta).amax();
        assert!(diff <= 1e-8, "case {case}: Gaussian LSA differs by {diff}");
    }

    // Logistic unpenalized estimates match the independent Newton oracle.
    for case in 0..8 {
        let n = rng.random_range(20..=60usize);
        let p = rng.random_range(1..=3usize);
        let mut x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { normal(&mut rng) });
        if p == 1 {
            x = DMatrix::from_fn(n, 1, |_, _| normal(&mut rng));
        }
        let coef = DVector::from_fn(p, |_, _| 0.8 * normal(&mut rng));
        let y = DVector::from_fn(n, |i, _| {
            let eta: f64 = (0..p).map(|j| coef[j] * x[(i, j)]).sum::<f64>();
            let pi = 1.0 / (1.0 + (-eta).exp());
            if rng.random_range(0.0..1.0) < pi {
                1.0
            } else {
                0.0
            }
        });
        let data = Dataset::new(y, x, (0..p).map(|j| format!("x{j}")).collect()).unwrap();
        let s = match lsa::fit_unpenalized(lsa::Family::Logistic, &data, &lsa::LsaOptions::default()) {
            Ok(s) => s,
            Err(_) => continue, // separated draws are rejected upstream
        };
        let oracle = newton_logistic(&data.x, &data.y);
        let diff = (&s.beta_tilde - &oracle).amax();
        assert!(diff <= 1e-8, "case {case}: IRLS vs Newton differs by {diff}");
    }
    println!("PASS criterion 7: Gaussian LSA exact to 1e-8; logistic matches the Newton oracle to 1e-8");
}

// ---------------------------------------------------------------------
// 8. Bootstrap calibration against analytic least-squares standard
//    errors (B = 500, n = 200, p = 3) in under 60 seconds.
// ---------------------------------------------------------------------
#[test]
fn criterion_08_bootstrap_calibration() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31_415);
    let n = 200;
    let p = 3;
    let sigma = 1.5;
    let x = DMatrix::from_fn(n, p, |_, _| normal(&mut rng));
    let beta_true = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
    let y = &x * &beta_true + DVector::from_fn(n, |_, _| sigma * normal(&mut rng));
    let data = Dataset::new(y, x, (0..p).map(|j| format!("x{j}")).collect()).unwrap();

    let config = BootstrapConfig::fixed(plain_spec(f64::INFINITY));
    let report = bootstrap_se(&data, &ConstraintSet::empty(p), &config, 500, 1234).unwrap();
    assert_eq!(report.failures, 0);

    // Analytic: sigma * sqrt([(X'X)^-1]_jj), computed independently.
    let gram = data.x.transpose() * &data.x;
    let inv = gram.try_inverse().unwrap();
    for j in 0..p {
        let analytic = sigma * inv[(j, j)].sqrt();
        let rel = (report.se[j] - analytic).abs() / analytic;
        assert!(
            rel <= 0.15,
            "coord {j}: bootstrap {} vs analytic {analytic} (rel {rel:.3})",
            report.se[j]
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("PASS criterion 8: bootstrap SEs within 15% of analytic values in {elapsed:?}");
}

// ---------------------------------------------------------------------
// 9. Monte Carlo initializer: deterministic, feasible, and within-sample
//    optimal under an exhaustive re-scan at m = 10^4.
// ---------------------------------------------------------------------
#[test]
fn criterion_09_mc_initializer() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for case in 0..5 {
        let p = rng.random_range(2..=4usize);
        let m = DMatrix::from_fn(p, p, |_, _| normal(&mut rng));
        let sigma = &m * m.transpose() + DMatrix::identity(p, p) * 0.3;
        let mu = DVector::from_fn(p, |_, _| normal(&mut rng));
        let cfg = McConfig::new(mu.clone(), sigma.clone(), 10_000, 42 + case).unwrap();
        let mut text = String::from("lin: ");
        text.push_str(&(0..p).map(|j| if j == 0 { "1" } else { "0" }).collect::<Vec<_>>().join(" "));
        text.push_str(" <= 0\n");
        let cs = parse_constraints(&text, p).unwrap();
        let s = mu.iter().map(|v| v.abs()).sum::<f64>() + 2.0;

        let a = mc_initial_point(&cfg, s, &cs).unwrap();
        let b = mc_initial_point(&cfg, s, &cs).unwrap();
        match (a, b) {
            (Some(za), Some(zb)) => {
                for j in 0..p {
                    assert_eq!(za[j].to_bits(), zb[j].to_bits(), "nondeterministic draw");
                }
                assert!(za[0] <= 1e-9);
                assert!(za.iter().map(|v| v.abs()).sum::<f64>() <= s + 1e-9);
                assert!(cs.is_feasible(&za, 1e-9).unwrap());

                // Exhaustive re-scan of the same stream.
                let best = log_density(&za, &cfg).unwrap();
                let mut stream = ChaCha8Rng::seed_from_u64(42 + case);
                let chol = sigma.clone().cholesky().unwrap();
                for _ in 0..10_000 {
                    let xi = DVector::from_fn(p, |_, _| normal(&mut stream));
                    let z = &mu + chol.l() * xi;
                    let feasible = z[0] <= 1e-9
                        && z.iter().map(|v| v.abs()).sum::<f64>() <= s;
                    if feasible {
                        assert!(log_density(&z, &cfg).unwrap() <= best + 1e-12);
                    }
                }
            }
            (None, None) => {}
            _ => panic!("nondeterministic feasibility outcome"),
        }
    }
    println!("PASS criterion 9: MC initializer deterministic, feasible, within-sample optimal (m = 10^4)");
}

// ---------------------------------------------------------------------
// 10. Desk-scale consistency: the sampling covariance of the estimator at
//     a slack budget matches sigma^2 C^-1 within 20% relative Frobenius
//     error (n = 2000, p = 3, 300 replicates) in under 120 seconds.
// ---------------------------------------------------------------------
#[test]
fn criterion_10_desk_scale_asymptotics() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(271_828);
    let n = 2000;
    let p = 3;
    let sigma = 1.0;
    let x = DMatrix::from_fn(n, p, |_, _| normal(&mut rng));
    let beta_true = DVector::from_row_slice(&[1.0, -0.5, 0.25]);
    let c_inv = (data_gram(&x) / n as f64).try_inverse().unwrap();

    let replicates = 300;
    let mut samples: Vec<DVector<f64>> = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(1_000_000 + r as u64);
        let y = &x * &beta_true + DVector::from_fn(n, |_, _| sigma * normal(&mut noise_rng));
        let data = Dataset::new(y, x.clone(), (0..p).map(|j| format!("x{j}")).collect()).unwrap();
        let fit = fit_constrained(&data, &ConstraintSet::empty(p), &plain_spec(f64::INFINITY)).unwrap();
        samples.push((fit.beta - &beta_true) * (n as f64).sqrt());
    }

    let mean = samples.iter().fold(DVector::zeros(p), |acc, v| acc + v) / replicates as f64;
    let mut cov = DMatrix::zeros(p, p);
    for v in &samples {
        let d = v - &mean;
        cov += &d * d.transpose();
    }
    cov /= (replicates - 1) as f64;

    let target = c_inv * sigma * sigma;
    let rel = (&cov - &target).norm() / target.norm();
    assert!(rel <= 0.20, "relative Frobenius distance {rel:.4}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "PASS criterion 10: sampling covariance within {:.1}% of sigma^2 C^-1 in {elapsed:?}",
        rel * 100.0
    );
}

fn data_gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.transpose() * x
}
