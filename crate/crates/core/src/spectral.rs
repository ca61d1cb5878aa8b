//! Rational transfer functions and residue calculus.
//!
//! Every transfer function here is a product of factors `(k + 1/2 ± iv)` in
//! numerator and denominator, times a rational gain. Writing `s = iv`, a
//! factor `(c + iv)` is `(c + s)` with root at `s = −c` (left half-plane) and
//! `(c − iv)` is `(c − s)` with root at `s = +c`. Spectral integrals
//!
//! ```text
//! (1/2π) ∫ F(v) conj(G(v)) e^{ivτ} dv
//! ```
//!
//! close to the left for `τ ≥ 0` and to the right for `τ ≤ 0`, so they reduce
//! to exact sums of residues at half-integer points.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Mul;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::math;
use crate::rational::{self, BigRational, Factorials};
use crate::{Error, Result};

/// The half-integer `k + 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(pub u32);

impl HalfInt {
    pub fn value(self) -> BigRational {
        rational::frac(2 * self.0 as i64 + 1, 2)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 + 0.5
    }

    /// Inverse of the `k+1/2` text form.
    pub fn parse(s: &str) -> Option<HalfInt> {
        s.trim().strip_suffix("+1/2")?.trim().parse().ok().map(HalfInt)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+1/2", self.0)
    }
}

/// Sign of the spectral variable inside a factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// `(c + iv)`
    Plus,
    /// `(c − iv)`
    Minus,
}

impl Side {
    fn flip(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub at: HalfInt,
    pub side: Side,
}

impl Factor {
    pub const fn plus(k: u32) -> Self {
        Factor {
            at: HalfInt(k),
            side: Side::Plus,
        }
    }

    pub const fn minus(k: u32) -> Self {
        Factor {
            at: HalfInt(k),
            side: Side::Minus,
        }
    }

    /// Value of the factor at `s = iv`.
    fn at_s(&self, s: &BigRational) -> BigRational {
        match self.side {
            Side::Plus => self.at.value() + s,
            Side::Minus => self.at.value() - s,
        }
    }

    /// The `s` where the factor vanishes.
    fn root(&self) -> BigRational {
        match self.side {
            Side::Plus => -self.at.value(),
            Side::Minus => self.at.value(),
        }
    }

    fn eval(&self, v: f64) -> Complex64 {
        match self.side {
            Side::Plus => Complex64::new(self.at.to_f64(), v),
            Side::Minus => Complex64::new(self.at.to_f64(), -v),
        }
    }

    fn conj(self) -> Factor {
        Factor {
            at: self.at,
            side: self.side.flip(),
        }
    }
}

type Multiset = BTreeMap<Factor, u32>;

/// `gain · Π numerator factors / Π denominator factors`, kept in lowest terms.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalTransfer {
    gain: BigRational,
    numerator: Multiset,
    denominator: Multiset,
}

impl RationalTransfer {
    pub fn new(
        gain: BigRational,
        numerator: impl IntoIterator<Item = Factor>,
        denominator: impl IntoIterator<Item = Factor>,
    ) -> Self {
        let mut out = RationalTransfer {
            gain,
            numerator: Multiset::new(),
            denominator: Multiset::new(),
        };
        for f in numerator {
            *out.numerator.entry(f).or_insert(0) += 1;
        }
        for f in denominator {
            *out.denominator.entry(f).or_insert(0) += 1;
        }
        out.cancel();
        out
    }

    fn cancel(&mut self) {
        let shared: Vec<Factor> = self
            .numerator
            .keys()
            .filter(|f| self.denominator.contains_key(f))
            .copied()
            .collect();
        for f in shared {
            let a = self.numerator[&f];
            let b = self.denominator[&f];
            let c = a.min(b);
            for (set, left) in [(&mut self.numerator, a - c), (&mut self.denominator, b - c)] {
                if left == 0 {
                    set.remove(&f);
                } else {
                    set.insert(f, left);
                }
            }
        }
    }

    pub fn gain(&self) -> &BigRational {
        &self.gain
    }

    pub fn numerator(&self) -> impl Iterator<Item = (Factor, u32)> + '_ {
        self.numerator.iter().map(|(f, m)| (*f, *m))
    }

    pub fn denominator(&self) -> impl Iterator<Item = (Factor, u32)> + '_ {
        self.denominator.iter().map(|(f, m)| (*f, *m))
    }

    /// Locations of `(k + 1/2 − iv)` numerator factors, with multiplicity.
    pub fn conjugated_zero_orders(&self) -> Vec<HalfInt> {
        expand(&self.numerator, Side::Minus)
    }

    /// Locations of `(k + 1/2 + iv)` denominator factors, with multiplicity.
    pub fn pole_orders(&self) -> Vec<HalfInt> {
        expand(&self.denominator, Side::Plus)
    }

    pub fn numerator_degree(&self) -> usize {
        self.numerator.values().map(|&m| m as usize).sum()
    }

    pub fn denominator_degree(&self) -> usize {
        self.denominator.values().map(|&m| m as usize).sum()
    }

    pub fn scaled(&self, by: &BigRational) -> Self {
        RationalTransfer {
            gain: &self.gain * by,
            ..self.clone()
        }
    }

    /// `conj(F(v))` for real `v`.
    pub fn conj(&self) -> Self {
        let flip = |set: &Multiset| set.iter().map(|(f, m)| (f.conj(), *m)).collect();
        RationalTransfer {
            gain: self.gain.clone(),
            numerator: flip(&self.numerator),
            denominator: flip(&self.denominator),
        }
    }

    pub fn eval(&self, v: f64) -> Complex64 {
        let mut z = Complex64::new(rational::to_f64(&self.gain), 0.0);
        for (f, m) in &self.numerator {
            z *= f.eval(v).powu(*m);
        }
        for (f, m) in &self.denominator {
            z /= f.eval(v).powu(*m);
        }
        z
    }

    /// Value at `s = iv` for rational `s` away from the poles.
    fn at_s(&self, s: &BigRational) -> BigRational {
        let mut acc = self.gain.clone();
        for (f, m) in &self.numerator {
            acc *= num_traits::pow(f.at_s(s), *m as usize);
        }
        for (f, m) in &self.denominator {
            acc /= num_traits::pow(f.at_s(s), *m as usize);
        }
        acc
    }

    /// Partial-fraction coefficients: `F(s) = Σ r / (s − s₀)` with `s = iv`.
    ///
    /// Requires a strictly proper function with simple poles.
    pub fn partial_fractions(&self) -> Result<Vec<Residue>> {
        if self.denominator_degree() <= self.numerator_degree() {
            return Err(Error::NotIntegrable(
                self.denominator_degree().saturating_sub(self.numerator_degree()),
            ));
        }
        let mut out = Vec::with_capacity(self.denominator.len());
        for (pole, &mult) in &self.denominator {
            if mult > 1 {
                return Err(Error::RepeatedPole(pole.at.0));
            }
            let s0 = pole.root();
            let mut rest = self.clone();
            rest.denominator.remove(pole);
            let mut r = rest.at_s(&s0);
            // d/ds of (c − s) is −1
            if pole.side == Side::Minus {
                r = -r;
            }
            out.push(Residue {
                pole: *pole,
                coeff: r,
            });
        }
        Ok(out)
    }
}

fn expand(set: &Multiset, side: Side) -> Vec<HalfInt> {
    set.iter()
        .filter(|(f, _)| f.side == side)
        .flat_map(|(f, m)| core::iter::repeat(f.at).take(*m as usize))
        .collect()
}

impl Mul for &RationalTransfer {
    type Output = RationalTransfer;

    fn mul(self, rhs: &RationalTransfer) -> RationalTransfer {
        let mut out = self.clone();
        out.gain *= &rhs.gain;
        for (f, m) in &rhs.numerator {
            *out.numerator.entry(*f).or_insert(0) += m;
        }
        for (f, m) in &rhs.denominator {
            *out.denominator.entry(*f).or_insert(0) += m;
        }
        out.cancel();
        out
    }
}

impl fmt::Debug for RationalTransfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.gain)?;
        let sign = |s: Side| if s == Side::Plus { '+' } else { '-' };
        for (x, m) in &self.numerator {
            write!(f, "·({}{}iv)^{}", x.at, sign(x.side), m)?;
        }
        for (x, m) in &self.denominator {
            write!(f, "/({}{}iv)^{}", x.at, sign(x.side), m)?;
        }
        Ok(())
    }
}

/// Residue of a transfer function at the root of one denominator factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residue {
    pub pole: Factor,
    pub coeff: BigRational,
}

/// `H_n(v) = Π_{k=0}^{n} 1/(k + 1/2 + iv)`.
pub fn transfer_h(n: u32) -> RationalTransfer {
    RationalTransfer::new(BigRational::one(), [], (0..=n).map(Factor::plus))
}

/// `G_n(v) = H_n(v)/conj(H_{n−1}(v))`; `G_0 = H_0`.
pub fn transfer_g(n: u32) -> RationalTransfer {
    RationalTransfer::new(
        BigRational::one(),
        (0..n).map(Factor::minus),
        (0..=n).map(Factor::plus),
    )
}

/// Transfer function of the innovation `X̂_n`: `(n!/(2n)!)·G_n`.
pub fn transfer_h_hat(n: u32) -> RationalTransfer {
    transfer_g(n).scaled(&innovation_gain(n))
}

/// `n!/(2n)!`.
pub fn innovation_gain(n: u32) -> BigRational {
    let f = Factorials::up_to(2 * n as usize);
    BigRational::new(f.get(n as usize).clone(), f.get(2 * n as usize).clone())
}

/// `(1/2π) ∫ F(v) conj(G(v)) dv`, exactly.
pub fn spectral_inner_product(f: &RationalTransfer, g: &RationalTransfer) -> Result<BigRational> {
    let product = f * &g.conj();
    require_integrable(&product)?;
    Ok(product
        .partial_fractions()?
        .into_iter()
        .filter(|r| r.pole.side == Side::Plus)
        .fold(BigRational::zero(), |acc, r| acc + r.coeff))
}

fn require_integrable(p: &RationalTransfer) -> Result<()> {
    let excess = p.denominator_degree() as isize - p.numerator_degree() as isize;
    if excess < 2 {
        return Err(Error::NotIntegrable(excess.max(0) as usize));
    }
    Ok(())
}

/// Innovation variance `σ_n² = (n!/(2n)!)² / (2n+1)`.
pub fn sigma_sq(n: u32) -> BigRational {
    let g = innovation_gain(n);
    &g * &g / rational::int(2 * n as i64 + 1)
}

/// `h_n(t) = (1/n!) e^{−t/2} (1 − e^{−t})^n` for `t ≥ 0`, zero before.
pub fn impulse_response(n: u32, t: f64) -> f64 {
    if !(t >= 0.0) {
        return 0.0;
    }
    let mut inv_fact = 1.0;
    for k in 2..=n {
        inv_fact /= k as f64;
    }
    let rise = -math::expm1(-t);
    inv_fact * math::exp(-0.5 * t) * libm::pow(rise, n as f64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelationTerm {
    pub coeff: BigRational,
    pub rate: HalfInt,
}

impl CorrelationTerm {
    pub fn coeff_f64(&self) -> f64 {
        rational::to_f64(&self.coeff)
    }
}

/// `Σ c_m e^{−rate_m |τ|}` with distinct positive half-integer rates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorrelationExpansion {
    terms: Vec<CorrelationTerm>,
}

impl CorrelationExpansion {
    /// Collects terms, merging equal rates and dropping zero coefficients.
    pub fn from_terms(terms: impl IntoIterator<Item = CorrelationTerm>) -> Self {
        let mut by_rate: BTreeMap<HalfInt, BigRational> = BTreeMap::new();
        for t in terms {
            *by_rate.entry(t.rate).or_insert_with(BigRational::zero) += t.coeff;
        }
        CorrelationExpansion {
            terms: by_rate
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(rate, coeff)| CorrelationTerm { coeff, rate })
                .collect(),
        }
    }

    pub fn terms(&self) -> &[CorrelationTerm] {
        &self.terms
    }

    pub fn at_zero(&self) -> BigRational {
        self.terms
            .iter()
            .fold(BigRational::zero(), |acc, t| acc + &t.coeff)
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let lag = tau.abs();
        self.terms
            .iter()
            .map(|t| t.coeff_f64() * math::exp(-t.rate.to_f64() * lag))
            .sum()
    }
}

/// `E X_j(t) X_k(s)` as a function of `τ = t − s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossCorrelation {
    pub j: u32,
    pub k: u32,
    /// Valid for `τ ≥ 0`.
    pub nonnegative_lag: CorrelationExpansion,
    /// Valid for `τ ≤ 0`.
    pub nonpositive_lag: CorrelationExpansion,
}

impl CrossCorrelation {
    pub fn eval(&self, tau: f64) -> f64 {
        if tau >= 0.0 {
            self.nonnegative_lag.eval(tau)
        } else {
            self.nonpositive_lag.eval(tau)
        }
    }

    pub fn at_zero(&self) -> BigRational {
        self.nonnegative_lag.at_zero()
    }
}

/// Lagged spectral product `(1/2π) ∫ F conj(G) e^{ivτ} dv` in closed form.
pub fn lagged_product(f: &RationalTransfer, g: &RationalTransfer) -> Result<(CorrelationExpansion, CorrelationExpansion)> {
    let product = f * &g.conj();
    require_integrable(&product)?;
    let residues = product.partial_fractions()?;
    // τ ≥ 0: left poles s = −c contribute r·e^{−cτ}.
    let forward = residues
        .iter()
        .filter(|r| r.pole.side == Side::Plus)
        .map(|r| CorrelationTerm {
            coeff: r.coeff.clone(),
            rate: r.pole.at,
        });
    // τ ≤ 0: clockwise around right poles s = +c, giving −r·e^{−c|τ|}.
    let backward = residues
        .iter()
        .filter(|r| r.pole.side == Side::Minus)
        .map(|r| CorrelationTerm {
            coeff: -r.coeff.clone(),
            rate: r.pole.at,
        });
    Ok((
        CorrelationExpansion::from_terms(forward),
        CorrelationExpansion::from_terms(backward),
    ))
}

/// Closed form of `E X_j(t) X_k(s)`.
pub fn cross_correlation(j: u32, k: u32) -> CrossCorrelation {
    let (nonnegative_lag, nonpositive_lag) = lagged_product(&transfer_h(j), &transfer_h(k))
        .expect("H_j conj(H_k) has simple poles and decays at least like v^-2");
    CrossCorrelation {
        j,
        k,
        nonnegative_lag,
        nonpositive_lag,
    }
}

/// `Σ c_k B_k(v)` for complex basis values, with compensated accumulation.
pub fn combine(coeffs: &[f64], basis: &[Complex64]) -> Complex64 {
    let re: Vec<f64> = basis.iter().map(|z| z.re).collect();
    let im: Vec<f64> = basis.iter().map(|z| z.im).collect();
    Complex64::new(math::dot(coeffs, &re), math::dot(coeffs, &im))
}
