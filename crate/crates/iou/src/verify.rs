//! Self-checks run by `iou verify`.

use iou_core::density::{covariance_r, mean_mu, normalizing_k, r_inverse, DensityKernel, StateVector};
use iou_core::exact::{a_inverse_matrix, a_matrix, b_matrix, gamma_matrix, rho_inverse_matrix, rho_matrix, rho_matrix_factored, ExactMatrix};
use iou_core::rational::{frac, int, to_f64, BigRational};
use iou_core::sampling::{
    laplace_closed_form, mc_tolerance, mc_transition_symmetry, path_rng, LaplaceRun, PathSampler,
};
use iou_core::spectral::{sigma_sq, spectral_inner_product, transfer_g, transfer_h, transfer_h_hat};
use iou_core::Result;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::formats::Process;
use crate::mc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Exact,
    Spectral,
    Density,
    Mc,
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub paths: u64,
    pub grid: usize,
    pub thetas: Vec<f64>,
}

impl VerifyConfig {
    pub fn new(seed: u64) -> Self {
        VerifyConfig {
            seed,
            paths: 100_000,
            grid: 1024,
            thetas: vec![0.5, 1.0, 2.0],
        }
    }
}

/// One check: passes when `statistic <= bound`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub test: String,
    pub statistic: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(test: impl Into<String>, statistic: f64, bound: f64) -> Self {
        Check {
            test: test.into(),
            statistic,
            bound,
            pass: statistic <= bound,
        }
    }

    /// Exact comparison; the statistic counts mismatches.
    pub fn exact(test: impl Into<String>, mismatches: usize) -> Self {
        Check::at_most(test, mismatches as f64, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub seed: u64,
    pub pass: bool,
    pub results: Vec<Check>,
}

pub fn run(suite: Suite, config: &VerifyConfig) -> Result<Report> {
    let mut results = Vec::new();
    if matches!(suite, Suite::Exact | Suite::All) {
        results.extend(exact_suite());
    }
    if matches!(suite, Suite::Spectral | Suite::All) {
        results.extend(spectral_suite()?);
    }
    if matches!(suite, Suite::Density | Suite::All) {
        results.extend(density_suite(config.seed)?);
    }
    if matches!(suite, Suite::Mc | Suite::All) {
        results.extend(mc_suite(config)?);
    }
    Ok(Report {
        suite,
        seed: config.seed,
        pass: results.iter().all(|c| c.pass),
        results,
    })
}

/// Which of `AΓ = B`, `ΓΓ* = I`, `A = B*`, `A A⁻¹ = I` fail at dimension `dim`.
pub fn identity_failures(dim: usize) -> Vec<&'static str> {
    let gamma = gamma_matrix(dim);
    let a = a_matrix(dim);
    let b = b_matrix(dim);
    let mut out = Vec::new();
    if &a * &gamma != b {
        out.push("A*Gamma=B");
    }
    if !(&gamma * &gamma.star()).is_identity() {
        out.push("Gamma*Gamma^*=I");
    }
    if a != b.star() {
        out.push("A=B^*");
    }
    if !(&a * &a_inverse_matrix(dim)).is_identity() {
        out.push("A*A^-1=I");
    }
    out
}

fn exact_rows(rows: &[&[(i64, i64)]]) -> ExactMatrix {
    ExactMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&(n, d)| frac(n, d)).collect()).collect())
}

fn exact_suite() -> Vec<Check> {
    let failures: usize = (0..=50).map(|dim| identity_failures(dim).len()).sum();
    let rho_inverse_1 = exact_rows(&[&[(1, 1), (1, 2)], &[(1, 2), (1, 3)]]);
    let rho_1 = exact_rows(&[&[(4, 1), (-6, 1)], &[(-6, 1), (12, 1)]]);
    let rho_2 = exact_rows(&[
        &[(9, 1), (-36, 1), (30, 1)],
        &[(-36, 1), (192, 1), (-180, 1)],
        &[(30, 1), (-180, 1), (180, 1)],
    ]);
    let route_mismatches = (0..=8)
        .filter(|&n| {
            let rho = rho_matrix(n);
            rho != rho_matrix_factored(n) || rho_inverse_matrix(n).inverse().as_ref() != Ok(&rho)
        })
        .count();
    vec![
        Check::exact("exact.identities[N=0..50]", failures),
        Check::exact("exact.rho_inverse[N=1]", usize::from(rho_inverse_matrix(1) != rho_inverse_1)),
        Check::exact("exact.rho[N=1]", usize::from(rho_matrix(1) != rho_1)),
        Check::exact("exact.rho[N=2]", usize::from(rho_matrix(2) != rho_2)),
        Check::exact("exact.rho_routes[N<=8]", route_mismatches),
    ]
}

fn spectral_suite() -> Result<Vec<Check>> {
    let mut g_bad = 0;
    let mut h_bad = 0;
    let mut sigma_bad = 0;
    for j in 0..=8u32 {
        for k in 0..=8u32 {
            let want = if j == k { frac(1, 2 * k as i64 + 1) } else { int(0) };
            g_bad += usize::from(spectral_inner_product(&transfer_g(j), &transfer_g(k))? != want);
        }
        for m in 0..j {
            h_bad += usize::from(spectral_inner_product(&transfer_h_hat(j), &transfer_h(m))? != int(0));
        }
        let h = transfer_h_hat(j);
        sigma_bad += usize::from(spectral_inner_product(&h, &h)? != sigma_sq(j));
    }
    let printed: [BigRational; 3] = [int(1), frac(1, 12), frac(1, 720)];
    let printed_bad = (0..3).filter(|&n| sigma_sq(n as u32) != printed[n]).count();
    Ok(vec![
        Check::exact("spectral.g_orthogonality[j,k<=8]", g_bad),
        Check::exact("spectral.innovation_orthogonality[m<n<=8]", h_bad),
        Check::exact("spectral.sigma_sq[n<=8]", sigma_bad),
        Check::exact("spectral.sigma_sq_values[n<=2]", printed_bad),
    ])
}

/// Random `(n, a, w, t)` with `w` drawn from the transition law out of `a`.
pub fn density_probes(seed: u64, count: usize) -> Vec<(StateVector, StateVector, f64)> {
    let mut rng = path_rng(seed, u64::MAX);
    let kernels: Vec<DensityKernel> = (0..=4).map(DensityKernel::new).collect();
    (0..count)
        .map(|_| {
            let n = rng.random_range(0..=4usize);
            let t = rng.random_range(0.1..10.0);
            let mut normals = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.sample(StandardNormal)).collect() };
            let a = StateVector::new(normals(n + 1)).expect("finite");
            let z = normals(n + 1);
            let l = kernels[n].covariance_factor(t).expect("t > 0");
            let mu = mean_mu(&a, t).expect("t > 0");
            let w = mu
                .values()
                .iter()
                .enumerate()
                .map(|(j, m)| m + (0..=j).map(|k| l[(j, k)] * z[k]).sum::<f64>())
                .collect();
            (StateVector::new(w).expect("finite"), a, t)
        })
        .collect()
}

/// Entrywise `|R⁻¹R − I|` divided by the rounding bound `4(n+1)ε (|R⁻¹||R|)`.
pub fn r_inverse_defect_ratio(order: usize, t: f64) -> Result<f64> {
    let ri = r_inverse(order, t)?;
    let r = covariance_r(order, t)?;
    let defect = &ri * &r - DMatrix::identity(order + 1, order + 1);
    let bound = ri.abs() * r.abs() * (4.0 * (order + 1) as f64 * f64::EPSILON);
    Ok(defect.iter().zip(bound.iter()).map(|(d, b)| d.abs() / b).fold(0.0, f64::max))
}

fn density_suite(seed: u64) -> Result<Vec<Check>> {
    let k_err = (0..=10)
        .map(|n| {
            let product: f64 = (0..=n)
                .map(|k| (2.0 * std::f64::consts::PI * to_f64(&sigma_sq(k as u32))).powf(-0.5))
                .product();
            (normalizing_k(n) - product).abs() / product
        })
        .fold(0.0, f64::max);

    let kernels: Vec<DensityKernel> = (0..=4).map(DensityKernel::new).collect();
    let mut renewal: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for (w, a, t) in density_probes(seed, 1000) {
        let kernel = &kernels[w.order()];
        let factored = kernel.log_transition_density(&w, &a, t)?;
        renewal = renewal.max((factored - kernel.log_transition_density_renewal(&w, &a, t)?).exp_m1().abs());
        symmetry = symmetry.max((factored - kernel.log_transition_density(&a.star(), &w.star(), t)?).exp_m1().abs());
    }

    let mut ratio: f64 = 0.0;
    for n in 0..=6 {
        for t in [0.5, 1.0, 2.0] {
            ratio = ratio.max(r_inverse_defect_ratio(n, t)?);
        }
    }
    Ok(vec![
        Check::at_most("density.normalizing_k[n<=10]", k_err, 1e-12),
        Check::at_most("density.factored_vs_renewal[1000 probes]", renewal, 1e-8),
        Check::at_most("density.transition_symmetry[1000 probes]", symmetry, 1e-9),
        Check::at_most("density.r_inverse_conditioning[n<=6]", ratio, 1.0),
    ])
}

fn mc_suite(config: &VerifyConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let run = LaplaceRun::new(&config.thetas, config.paths, config.grid, config.seed)?;
    for (theta, est) in config.thetas.iter().zip(mc::laplace_parallel(&run)) {
        out.push(Check::at_most(
            format!("mc.laplace[theta={theta}]"),
            (est.mean - laplace_closed_form(*theta)).abs(),
            mc_tolerance(&est),
        ));
    }

    for n in 0..=3 {
        let paths = mc::sample_paths(&PathSampler::new(n), Process::W, &[1.0], config.seed, config.paths)?;
        let r = covariance_r(n, 1.0)?;
        let mut worst: f64 = 0.0;
        for j in 0..=n {
            for k in 0..=j {
                let m = mc::moments_of(&paths, |p| p.states[0].values()[j] * p.states[0].values()[k]);
                worst = worst.max((m.mean() - r[(j, k)]).abs() / m.std_error());
            }
        }
        out.push(Check::at_most(format!("mc.w1_covariance_z[n={n}]"), worst, 3.0));
    }

    let taus: [f64; 3] = [0.5, 1.0, 2.0];
    let times = [0.0, 0.5, 1.0, 2.0];
    let paths = mc::sample_paths(&PathSampler::new(0), Process::X, &times, config.seed, config.paths)?;
    for (i, tau) in taus.into_iter().enumerate() {
        let m = mc::moments_of(&paths, |p| p.states[i + 1].values()[0] * p.states[0].values()[0]);
        let z = (m.mean() - (-0.5 * tau).exp()).abs() / m.std_error();
        out.push(Check::at_most(format!("mc.x0_autocovariance_z[tau={tau}]"), z, 3.0));
    }

    let sym = mc_transition_symmetry(2, 1000, config.seed)?;
    out.push(Check::at_most("mc.transition_symmetry[n=2]", sym.max_rel_error, 1e-9));
    Ok(out)
}
