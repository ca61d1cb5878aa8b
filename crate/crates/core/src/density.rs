//! Gaussian densities of `W(t)` and of the stationary vector `X(t)`.
//!
//! Everything is evaluated in log-space first; the plain densities are
//! exponentials of the log forms. The inverse covariance of `W(t)` is never
//! obtained by inverting `R(t)`: it is assembled from the factorization
//! `R⁻¹(t) = T(t) A′ Λ A T(t)`, with `A′ Λ A` formed exactly and rounded once.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use twofloat::TwoFloat;

use crate::exact::{self, ExactMatrix};
use crate::math::{self, CompensatedSum};
use crate::rational;
use crate::spectral;
use crate::{Error, Result};

/// A point `(v_0, ..., v_n)` of `R^{n+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
}

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::OrderMismatch {
                expected: 1,
                found: 0,
            });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(StateVector { values })
    }

    pub fn zeros(order: usize) -> Self {
        StateVector {
            values: alloc::vec![0.0; order + 1],
        }
    }

    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `v*`: odd-index components change sign.
    pub fn star(&self) -> Self {
        StateVector {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, x)| if k % 2 == 1 { -x } else { *x })
                .collect(),
        }
    }

    fn expect_order(&self, order: usize) -> Result<()> {
        if self.order() != order {
            return Err(Error::OrderMismatch {
                expected: order,
                found: self.order(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime(t))
    }
}

/// The diagonal `T(t)` with `T_kk = t^{−(k+1/2)}`, held in double-double
/// and rounded once for the plain `f64` view.
#[derive(Clone, Debug)]
pub struct TimeScaling {
    t: f64,
    wide: Vec<TwoFloat>,
    diag: Vec<f64>,
}

impl PartialEq for TimeScaling {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.diag == other.diag
    }
}

impl TimeScaling {
    pub fn new(order: usize, t: f64) -> Result<Self> {
        check_time(t)?;
        let inv_t = TwoFloat::from(t).recip();
        let mut wide = Vec::with_capacity(order + 1);
        let mut d = TwoFloat::from(t).sqrt().recip();
        for _ in 0..=order {
            wide.push(d);
            d *= inv_t;
        }
        let diag = wide.iter().map(TwoFloat::hi).collect();
        Ok(TimeScaling { t, wide, diag })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn order(&self) -> usize {
        self.diag.len() - 1
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `T(t) v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.diag).map(|(x, d)| x * d).collect()
    }

    /// `T⁻¹(t) v`
    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.diag).map(|(x, d)| x / d).collect()
    }

    /// `ln |det T(t)| = −(n+1)²/2 · ln t`
    pub fn ln_det(&self) -> f64 {
        let size = self.diag.len() as f64;
        -0.5 * size * size * math::ln(self.t)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag))
    }
}

/// Double-precision copies of the exact matrices for one order `n`.
///
/// Build once and reuse; all evaluation methods take `&self`.
#[derive(Clone, Debug)]
pub struct DensityKernel {
    order: usize,
    a: DMatrix<f64>,
    a_star: DMatrix<f64>,
    gamma: DMatrix<f64>,
    a_inverse: DMatrix<f64>,
    a_lambda_a: DMatrix<f64>,
    lambda: Vec<f64>,
    innovation_gain: Vec<f64>,
    sigma_sq: Vec<f64>,
    ln_k: f64,
}

impl DensityKernel {
    pub fn new(order: usize) -> Self {
        let a_exact = exact::a_matrix(order);
        let gain = |k: usize| rational::to_f64(&spectral::innovation_gain(k as u32));
        DensityKernel {
            order,
            a: a_exact.to_f64(),
            a_star: a_exact.star().to_f64(),
            gamma: exact::gamma_matrix(order).to_f64(),
            a_inverse: exact::a_inverse_matrix(order).to_f64(),
            a_lambda_a: (&(&a_exact.transpose() * &exact::lambda_matrix(order)) * &a_exact).to_f64(),
            lambda: (0..=order).map(|k| (2 * k + 1) as f64).collect(),
            innovation_gain: (0..=order).map(gain).collect(),
            sigma_sq: (0..=order)
                .map(|k| rational::to_f64(&spectral::sigma_sq(k as u32)))
                .collect(),
            ln_k: ln_normalizing_k(order),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn a_star(&self) -> &DMatrix<f64> {
        &self.a_star
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn a_inverse(&self) -> &DMatrix<f64> {
        &self.a_inverse
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn sigma_sq(&self) -> &[f64] {
        &self.sigma_sq
    }

    pub fn ln_normalizing_k(&self) -> f64 {
        self.ln_k
    }

    fn row(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
        (0..=j).map(|k| m[(j, k)]).collect()
    }

    /// `(Ax)′ Λ (Ax)`
    fn stationary_form(&self, x: &[f64]) -> f64 {
        let mut acc = CompensatedSum::default();
        for j in 0..=self.order {
            let y = math::dot(&Self::row(&self.a, j), &x[..=j]);
            acc.add(self.lambda[j] * y * y);
        }
        acc.value()
    }

    /// `ln p_n(x)` for the stationary vector `(X_0(t), ..., X_n(t))`.
    pub fn log_stationary_density(&self, x: &StateVector) -> Result<f64> {
        x.expect_order(self.order)?;
        Ok(self.ln_k - 0.5 * self.stationary_form(x.values()))
    }

    /// `x̂_n = (n!/(2n)!) Σ_k A_nk x_k`
    pub fn innovation(&self, x: &[f64]) -> f64 {
        let n = x.len() - 1;
        self.innovation_gain[n] * math::dot(&Self::row(&self.a, n), x)
    }

    /// `ln p(x_n | x_0, ..., x_{n−1})` where `n = prefix.len()`.
    pub fn log_conditional_density(&self, x_n: f64, prefix: &[f64]) -> Result<f64> {
        let n = prefix.len();
        if n > self.order {
            return Err(Error::OrderMismatch {
                expected: self.order,
                found: n,
            });
        }
        if !x_n.is_finite() || prefix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut x = Vec::with_capacity(n + 1);
        x.extend_from_slice(prefix);
        x.push(x_n);
        let xhat = self.innovation(&x);
        let var = self.sigma_sq[n];
        Ok(-0.5 * math::ln(2.0 * PI * var) - 0.5 * xhat * xhat / var)
    }

    /// Mean of `x_n` given the prefix: the root of `x̂_n`.
    pub fn conditional_mean(&self, prefix: &[f64]) -> f64 {
        let n = prefix.len();
        let partial = math::dot(&Self::row(&self.a, n)[..n], prefix);
        -partial / self.a[(n, n)]
    }

    /// `ln π(w, t) = −(n+1)²/2 ln t + ln p_n(T(t) w)`.
    pub fn log_density_w(&self, w: &StateVector, t: f64) -> Result<f64> {
        w.expect_order(self.order)?;
        let scale = TimeScaling::new(self.order, t)?;
        let xi = scale.apply(w.values());
        Ok(scale.ln_det() + self.ln_k - 0.5 * self.stationary_form(&xi))
    }

    /// Transition density from the factored kernel:
    /// `ln π_a(w,t) = −(n+1)²/2 ln t + ln K_n − ½ y′Λy`, `y = A T w − A* T a`.
    pub fn log_transition_density(&self, w: &StateVector, a: &StateVector, t: f64) -> Result<f64> {
        w.expect_order(self.order)?;
        a.expect_order(self.order)?;
        let scale = TimeScaling::new(self.order, t)?;
        // A T w and A* T a nearly cancel for small t, so y is formed in
        // double-double. The swap (w, a) -> (a*, w*) negates every term
        // exactly, which keeps the symmetry of the kernel bit for bit.
        let tw: Vec<TwoFloat> = scale.wide.iter().zip(w.values()).map(|(d, x)| *d * *x).collect();
        let ta: Vec<TwoFloat> = scale.wide.iter().zip(a.values()).map(|(d, x)| *d * *x).collect();
        let mut acc = CompensatedSum::default();
        for j in 0..=self.order {
            let mut y = TwoFloat::from(0.0);
            for k in 0..=j {
                y += tw[k] * self.a[(j, k)] - ta[k] * self.a_star[(j, k)];
            }
            let y = y.hi();
            acc.add(self.lambda[j] * y * y);
        }
        Ok(scale.ln_det() + self.ln_k - 0.5 * acc.value())
    }

    /// Same density through the renewal form `π(w − μ(a,t), t)`.
    pub fn log_transition_density_renewal(
        &self,
        w: &StateVector,
        a: &StateVector,
        t: f64,
    ) -> Result<f64> {
        w.expect_order(self.order)?;
        a.expect_order(self.order)?;
        check_time(t)?;
        let centered: Vec<f64> = w
            .values()
            .iter()
            .zip(wide_mean(a.values(), t))
            .map(|(x, m)| (TwoFloat::from(*x) - m).hi())
            .collect();
        self.log_density_w(&StateVector { values: centered }, t)
    }

    /// `R⁻¹(t) = T(t) A′ Λ A T(t)`.
    pub fn r_inverse(&self, t: f64) -> Result<DMatrix<f64>> {
        check_time(t)?;
        let size = self.order + 1;
        // T_jj T_kk = t^{−(j+k+1)}, one rounding per entry
        Ok(DMatrix::from_fn(size, size, |j, k| {
            self.a_lambda_a[(j, k)] * math::powf(t, -((j + k + 1) as f64))
        }))
    }

    /// Lower-triangular `L` with `L L′ = R(t)`: `L = T⁻¹(t) A⁻¹ Λ^{−1/2}`.
    pub fn covariance_factor(&self, t: f64) -> Result<DMatrix<f64>> {
        let scale = TimeScaling::new(self.order, t)?;
        let size = self.order + 1;
        Ok(DMatrix::from_fn(size, size, |j, k| {
            self.a_inverse[(j, k)] / (scale.diag()[j] * math::sqrt(self.lambda[k]))
        }))
    }

    /// `B(t) = T⁻¹(t) Γ T(t)`; `μ(a, t) = B(t) a`.
    pub fn drift_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let scale = TimeScaling::new(self.order, t)?;
        let d = scale.diag();
        let size = self.order + 1;
        Ok(DMatrix::from_fn(size, size, |j, k| self.gamma[(j, k)] * d[k] / d[j]))
    }
}

/// `R(t)_{jk} = t^{j+k+1} / (j! k! (j+k+1))`.
pub fn covariance_r(order: usize, t: f64) -> Result<DMatrix<f64>> {
    check_time(t)?;
    let inv_fact = inverse_factorials(order);
    let size = order + 1;
    Ok(DMatrix::from_fn(size, size, |j, k| {
        let p = (j + k + 1) as f64;
        math::powf(t, p) * inv_fact[j] * inv_fact[k] / p
    }))
}

pub(crate) fn inverse_factorials(order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut acc = 1.0;
    for k in 0..=order {
        if k > 0 {
            acc /= k as f64;
        }
        out.push(acc);
    }
    out
}

/// `R⁻¹(t)` from the factored form.
pub fn r_inverse(order: usize, t: f64) -> Result<DMatrix<f64>> {
    DensityKernel::new(order).r_inverse(t)
}

/// `μ_k(a, t) = Σ_{j=0}^{k} (t^j / j!) a_{k−j}`; `t = 0` returns `a`.
pub fn mean_mu(a: &StateVector, t: f64) -> Result<StateVector> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::NonPositiveTime(t));
    }
    let values = wide_mean(&a.values, t).iter().map(TwoFloat::hi).collect();
    Ok(StateVector { values })
}

/// `μ(a, t)` in double-double.
fn wide_mean(a: &[f64], t: f64) -> Vec<TwoFloat> {
    let mut powers = Vec::with_capacity(a.len());
    let mut p = TwoFloat::from(1.0);
    for j in 0..a.len() {
        if j > 0 {
            p = p * t / j as f64;
        }
        powers.push(p);
    }
    (0..a.len())
        .map(|k| {
            (0..=k).fold(TwoFloat::from(0.0), |acc, j| acc + powers[j] * a[k - j])
        })
        .collect()
}

/// `ln K_n` with `K_n = (2π)^{−(n+1)/2} √((2n+1)!/(2ⁿ n!)) Π_{m=0}^{n} (2m)!/m!`.
pub fn ln_normalizing_k(order: usize) -> f64 {
    let n = order;
    let mut acc = CompensatedSum::default();
    acc.add(-0.5 * (n as f64 + 1.0) * math::ln(2.0 * PI));
    // (2n+1)!/(2ⁿ n!) = 1·3·5···(2n+1)
    for k in 0..=n {
        acc.add(0.5 * math::ln((2 * k + 1) as f64));
    }
    for m in 1..=n {
        for i in m + 1..=2 * m {
            acc.add(math::ln(i as f64));
        }
    }
    acc.value()
}

pub fn normalizing_k(order: usize) -> f64 {
    math::exp(ln_normalizing_k(order))
}

/// `ln |R(t)| = (n+1)² ln t + Σ ln σ_k²`.
pub fn ln_det_covariance(order: usize, t: f64) -> Result<f64> {
    check_time(t)?;
    let size = (order + 1) as f64;
    let mut acc = CompensatedSum::default();
    acc.add(size * size * math::ln(t));
    for k in 0..=order {
        acc.add(math::ln(rational::to_f64(&spectral::sigma_sq(k as u32))));
    }
    Ok(acc.value())
}

pub fn log_stationary_density(x: &StateVector) -> f64 {
    DensityKernel::new(x.order())
        .log_stationary_density(x)
        .expect("order matches by construction")
}

pub fn stationary_density(x: &StateVector) -> f64 {
    math::exp(log_stationary_density(x))
}

/// `p(x_n | x_0, ..., x_{n−1})`.
pub fn conditional_density(x_n: f64, prefix: &StateVector) -> Result<f64> {
    let n = prefix.order() + 1;
    DensityKernel::new(n)
        .log_conditional_density(x_n, prefix.values())
        .map(math::exp)
}

/// Density of `X_0` alone (standard normal); the `n = 0` end of the chain.
pub fn log_marginal_x0(x0: f64) -> f64 {
    -0.5 * math::ln(2.0 * PI) - 0.5 * x0 * x0
}

pub fn log_density_w(w: &StateVector, t: f64) -> Result<f64> {
    DensityKernel::new(w.order()).log_density_w(w, t)
}

pub fn density_w(w: &StateVector, t: f64) -> Result<f64> {
    log_density_w(w, t).map(math::exp)
}

pub fn log_transition_density(w: &StateVector, a: &StateVector, t: f64) -> Result<f64> {
    DensityKernel::new(w.order()).log_transition_density(w, a, t)
}

pub fn transition_density(w: &StateVector, a: &StateVector, t: f64) -> Result<f64> {
    log_transition_density(w, a, t).map(math::exp)
}

/// Max-abs entry of `A Γ − A*` after rounding both to doubles.
pub fn a_gamma_star_defect(order: usize) -> f64 {
    let k = DensityKernel::new(order);
    (k.a() * k.gamma() - k.a_star()).amax()
}

/// `D⁻¹ R⁻¹(1) D⁻¹` entries rounded from exact `ρ`; used to cross-check
/// [`DensityKernel::r_inverse`] at `t = 1`.
pub fn rho_scaled_r_inverse(order: usize) -> DMatrix<f64> {
    let rho: ExactMatrix = exact::rho_matrix(order);
    let f = rational::Factorials::up_to(order);
    DMatrix::from_fn(order + 1, order + 1, |j, k| {
        rational::to_f64(&(rho.get(j, k) * f.ratio(j) * f.ratio(k)))
    })
}
