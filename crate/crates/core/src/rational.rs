//! Exact rational helpers: factorial tables and `num/den` text form.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

pub use num_rational::BigRational;

/// Table of `0!, 1!, ..., m!` as arbitrary-precision integers.
#[derive(Clone, Debug)]
pub struct Factorials {
    table: Vec<BigInt>,
}

impl Factorials {
    pub fn up_to(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = BigInt::one();
        table.push(acc.clone());
        for k in 1..=max {
            acc *= k;
            table.push(acc.clone());
        }
        Factorials { table }
    }

    /// `k!`. Panics if `k` is beyond the table.
    pub fn get(&self, k: usize) -> &BigInt {
        &self.table[k]
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    /// `k!` as a rational.
    pub fn ratio(&self, k: usize) -> BigRational {
        BigRational::from_integer(self.table[k].clone())
    }
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn frac(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Nearest double. Entries too large for `f64` map to `±inf`.
pub fn to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    x.to_f64().unwrap_or_else(|| {
        if x.numer().sign() == num_bigint::Sign::Minus {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Always `num/den`, including integers (`30/1`).
pub fn to_fraction_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parse `num/den` or a bare integer.
pub fn parse_fraction(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}
