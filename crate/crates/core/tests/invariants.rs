use iou_core::density::{
    covariance_r, log_density_w, log_transition_density, r_inverse, stationary_density, transition_density,
    DensityKernel, StateVector,
};
use iou_core::exact::{rho_matrix, ExactMatrix, A, A_INVERSE, B, GAMMA, LAMBDA, RHO_INVERSE};
use iou_core::rational::{frac, to_f64};
use iou_core::spectral::cross_correlation;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn small_rational() -> impl Strategy<Value = iou_core::BigRational> {
    (-20i64..20, 1i64..9).prop_map(|(n, d)| frac(n, d))
}

fn exact_matrix(size: usize) -> impl Strategy<Value = ExactMatrix> {
    proptest::collection::vec(small_rational(), size * size).prop_map(move |v| {
        let mut it = v.into_iter();
        ExactMatrix::from_fn(size, |_, _| it.next().unwrap())
    })
}

fn state(order: usize, scale: f64) -> impl Strategy<Value = StateVector> {
    proptest::collection::vec(-scale..scale, order + 1).prop_map(|v| StateVector::new(v).unwrap())
}

/// `R_jk(t) = t^{j+k+1} / (j! k! (j+k+1))` assembled from scratch.
fn dense_covariance(order: usize, t: f64) -> DMatrix<f64> {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    DMatrix::from_fn(order + 1, order + 1, |j, k| {
        t.powi((j + k + 1) as i32) / (fact(j) * fact(k) * (j + k + 1) as f64)
    })
}

/// Gaussian log density through a diagonally equilibrated Cholesky factor.
fn dense_log_gaussian(cov: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let d = DVector::from_fn(cov.nrows(), |i, _| cov[(i, i)].sqrt());
    let scaled = DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| cov[(i, j)] / (d[i] * d[j]));
    let y = x.component_div(&d);
    let chol = scaled.cholesky().expect("equilibrated covariance is positive definite");
    let z = chol.l().solve_lower_triangular(&y).unwrap();
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()
        + 2.0 * d.iter().map(|v| v.ln()).sum::<f64>();
    let dim = x.len() as f64;
    -0.5 * (dim * (2.0 * std::f64::consts::PI).ln() + ln_det + z.norm_squared())
}

proptest! {
    #[test]
    fn dimension_free_blocks(small in 1usize..12, extra in 1usize..8) {
        for m in [GAMMA, B, A, A_INVERSE, LAMBDA, RHO_INVERSE] {
            prop_assert_eq!(m.realize(small + extra).block(small + 1), m.realize(small));
        }
    }

    #[test]
    fn star_is_an_involution_and_multiplicative(x in exact_matrix(4), y in exact_matrix(4)) {
        prop_assert_eq!(x.star().star(), x.clone());
        prop_assert_eq!((&x * &y).star(), &x.star() * &y.star());
    }

    #[test]
    fn transition_symmetry_is_exact(order in 0usize..6, t in 0.2f64..3.0, a in state(5, 2.0), w in state(5, 2.0)) {
        let a = StateVector::new(a.values()[..=order].to_vec()).unwrap();
        let w = StateVector::new(w.values()[..=order].to_vec()).unwrap();
        let lhs = log_transition_density(&w, &a, t).unwrap();
        let rhs = log_transition_density(&a.star(), &w.star(), t).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn factored_and_renewal_forms_agree(order in 0usize..5, t in 0.3f64..3.0, a in state(4, 1.0), dw in state(4, 1.0)) {
        let kernel = DensityKernel::new(order);
        let a = StateVector::new(a.values()[..=order].to_vec()).unwrap();
        let w = StateVector::new(dw.values()[..=order].to_vec()).unwrap();
        let factored = kernel.log_transition_density(&w, &a, t).unwrap();
        let renewal = kernel.log_transition_density_renewal(&w, &a, t).unwrap();
        prop_assert!((factored - renewal).abs() <= 1e-9 * factored.abs().max(1.0), "{} vs {}", factored, renewal);
    }

    #[test]
    fn density_w_matches_dense_oracle(order in 0usize..5, t in 0.5f64..2.0, z in state(4, 2.0)) {
        // draw w on the scale of its own covariance so the comparison is not dominated by tails
        let cov = dense_covariance(order, t);
        let l = cov.clone().cholesky().unwrap().l();
        let w = &l * DVector::from_column_slice(&z.values()[..=order]);
        let ours = log_density_w(&StateVector::new(w.as_slice().to_vec()).unwrap(), t).unwrap();
        let oracle = dense_log_gaussian(&cov, &w);
        prop_assert!((ours - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{} vs {}", ours, oracle);
    }
}

#[test]
fn covariance_matches_dense_construction() {
    for order in 0..=6 {
        for t in [0.5, 1.0, 2.0] {
            let ours = covariance_r(order, t).unwrap();
            let oracle = dense_covariance(order, t);
            assert!((&ours - &oracle).amax() <= 1e-14 * oracle.amax(), "order {order} t {t}");
        }
    }
}

#[test]
fn r_inverse_matches_scaled_rho() {
    for order in 0..=8 {
        let rho = rho_matrix(order).to_f64();
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        for t in [0.5, 1.0, 2.0, 3.7] {
            let ri = r_inverse(order, t).unwrap();
            for j in 0..=order {
                for k in 0..=order {
                    let want = t.powi(-((j + k + 1) as i32)) * fact(j) * fact(k) * rho[(j, k)];
                    assert!((ri[(j, k)] - want).abs() <= 1e-14 * want.abs(), "order {order} t {t} ({j},{k})");
                }
            }
        }
    }
}

#[test]
fn r_inverse_inverts_covariance_to_conditioning() {
    // the defect of a product of rounded matrices is bounded by |R⁻¹| |R| times a few ulps
    for order in 0..=8 {
        for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let ri = r_inverse(order, t).unwrap();
            let r = dense_covariance(order, t);
            let defect = &ri * &r - DMatrix::identity(order + 1, order + 1);
            let bound = ri.abs() * r.abs() * (4.0 * (order + 1) as f64 * f64::EPSILON);
            for (d, b) in defect.iter().zip(bound.iter()) {
                assert!(d.abs() <= *b, "order {order} t {t}: {d} > {b}");
            }
        }
    }
}

#[test]
fn stationary_density_integrates_to_one() {
    let step = 0.01;
    let n0: f64 = (-1000..=1000)
        .map(|i| stationary_density(&StateVector::new(vec![i as f64 * step]).unwrap()))
        .sum::<f64>()
        * step;
    assert!((n0 - 1.0).abs() < 1e-10, "{n0}");

    let sd: Vec<f64> = (0..2)
        .map(|k| to_f64(&cross_correlation(k, k).at_zero()).sqrt())
        .collect();
    let m = 300;
    let h: Vec<f64> = sd.iter().map(|s| 10.0 * s / m as f64).collect();
    let mut total = 0.0;
    for i in -m..=m {
        for j in -m..=m {
            let x = StateVector::new(vec![i as f64 * h[0], j as f64 * h[1]]).unwrap();
            total += stationary_density(&x);
        }
    }
    total *= h[0] * h[1];
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn transition_density_integrates_to_one() {
    let a = StateVector::new(vec![0.4, -0.3]).unwrap();
    let t = 0.8;
    let mu = iou_core::density::mean_mu(&a, t).unwrap();
    let cov = dense_covariance(1, t);
    let sd = [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt()];
    let m = 300;
    let h = [10.0 * sd[0] / m as f64, 10.0 * sd[1] / m as f64];
    let mut total = 0.0;
    for i in -m..=m {
        for j in -m..=m {
            let w = StateVector::new(vec![
                mu.values()[0] + i as f64 * h[0],
                mu.values()[1] + j as f64 * h[1],
            ])
            .unwrap();
            total += transition_density(&w, &a, t).unwrap();
        }
    }
    total *= h[0] * h[1];
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn chapman_kolmogorov_for_brownian_motion() {
    // ∫ π_a(u, s) π_u(w, t) du = π_a(w, s + t) in one dimension
    let (a, w, s, t) = (0.3, -0.5, 0.6, 0.9);
    let step = 1e-3;
    let lhs: f64 = (-8000..=8000)
        .map(|i| {
            let u = StateVector::new(vec![i as f64 * step]).unwrap();
            transition_density(&u, &StateVector::new(vec![a]).unwrap(), s).unwrap()
                * transition_density(&StateVector::new(vec![w]).unwrap(), &u, t).unwrap()
        })
        .sum::<f64>()
        * step;
    let rhs = transition_density(&StateVector::new(vec![w]).unwrap(), &StateVector::new(vec![a]).unwrap(), s + t).unwrap();
    assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
}
