//! Exact rational matrices.
//!
//! Rows and columns are numbered from 0. A matrix "of dimension `N`" has
//! `N + 1` rows, matching the indexing of the state vector `(W_0, ..., W_N)`.
//!
//! Most matrices here are *dimension-free*: the entry at `(j, k)` does not
//! depend on the overall size. [`DimFreeMatrix`] stores the entry rule and
//! realizes it at any size. `ρ = (ρ⁻¹)⁻¹` is the exception and is built by
//! [`rho_matrix`] for a fixed dimension.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Mul;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::{self, BigRational, Factorials};
use crate::{Error, Result};

/// Dense square matrix of exact rationals, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    size: usize,
    entries: Vec<BigRational>,
}

impl ExactMatrix {
    pub fn zeros(size: usize) -> Self {
        ExactMatrix {
            size,
            entries: (0..size * size).map(|_| BigRational::zero()).collect(),
        }
    }

    pub fn identity(size: usize) -> Self {
        Self::from_fn(size, |j, k| {
            if j == k {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> BigRational) -> Self {
        let mut entries = Vec::with_capacity(size * size);
        for j in 0..size {
            for k in 0..size {
                entries.push(f(j, k));
            }
        }
        ExactMatrix { size, entries }
    }

    /// Build from rows. Panics if the rows do not form a square.
    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Self {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for row in rows {
            assert_eq!(row.len(), size, "matrix must be square");
            entries.extend(row);
        }
        ExactMatrix { size, entries }
    }

    /// Number of rows (and columns).
    pub fn size(&self) -> usize {
        self.size
    }

    /// The dimension `N` in the `0..=N` indexing convention; `size() - 1`.
    /// An empty matrix has no dimension.
    pub fn dim(&self) -> Option<usize> {
        self.size.checked_sub(1)
    }

    pub fn get(&self, j: usize, k: usize) -> &BigRational {
        assert!(j < self.size && k < self.size, "index out of range");
        &self.entries[j * self.size + k]
    }

    pub fn set(&mut self, j: usize, k: usize, value: BigRational) {
        assert!(j < self.size && k < self.size, "index out of range");
        self.entries[j * self.size + k] = value;
    }

    pub fn row(&self, j: usize) -> &[BigRational] {
        &self.entries[j * self.size..(j + 1) * self.size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[BigRational]> {
        self.entries.chunks(self.size.max(1)).take(self.size)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.size, |j, k| self.get(k, j).clone())
    }

    /// `M*`: entries with odd `j + k` change sign.
    pub fn star(&self) -> Self {
        Self::from_fn(self.size, |j, k| {
            let x = self.get(j, k);
            if (j + k) % 2 == 1 {
                -x.clone()
            } else {
                x.clone()
            }
        })
    }

    /// Upper-left `size × size` block.
    pub fn block(&self, size: usize) -> Self {
        assert!(size <= self.size);
        Self::from_fn(size, |j, k| self.get(j, k).clone())
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.size).all(|j| (j + 1..self.size).all(|k| self.get(j, k).is_zero()))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|j| (0..j).all(|k| self.get(j, k) == self.get(k, j)))
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.size)
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.size;
        let mut left = self.clone();
        let mut right = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !left.get(r, col).is_zero())
                .ok_or(Error::Singular)?;
            if pivot != col {
                left.swap_rows(pivot, col);
                right.swap_rows(pivot, col);
            }
            let inv = left.get(col, col).recip();
            left.scale_row(col, &inv);
            right.scale_row(col, &inv);
            for r in 0..n {
                if r == col || left.get(r, col).is_zero() {
                    continue;
                }
                let factor = left.get(r, col).clone();
                left.sub_scaled_row(r, col, &factor);
                right.sub_scaled_row(r, col, &factor);
            }
        }
        Ok(right)
    }

    /// Nearest-double copy.
    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |j, k| rational::to_f64(self.get(j, k)))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for k in 0..self.size {
            self.entries.swap(a * self.size + k, b * self.size + k);
        }
    }

    fn scale_row(&mut self, r: usize, by: &BigRational) {
        for k in 0..self.size {
            let x = &mut self.entries[r * self.size + k];
            if !x.is_zero() {
                *x = &*x * by;
            }
        }
    }

    // row[r] -= factor * row[src]
    fn sub_scaled_row(&mut self, r: usize, src: usize, factor: &BigRational) {
        for k in 0..self.size {
            let s = &self.entries[src * self.size + k];
            if s.is_zero() {
                continue;
            }
            let d = s * factor;
            let x = &mut self.entries[r * self.size + k];
            *x = &*x - d;
        }
    }
}

impl Mul for &ExactMatrix {
    type Output = ExactMatrix;

    fn mul(self, rhs: &ExactMatrix) -> ExactMatrix {
        assert_eq!(self.size, rhs.size, "dimension mismatch");
        let n = self.size;
        let mut out = ExactMatrix::zeros(n);
        for j in 0..n {
            for m in 0..n {
                let a = self.get(j, m);
                if a.is_zero() {
                    continue;
                }
                for k in 0..n {
                    let b = rhs.get(m, k);
                    if b.is_zero() {
                        continue;
                    }
                    let x = &mut out.entries[j * n + k];
                    *x = &*x + a * b;
                }
            }
        }
        out
    }
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (j, row) in self.rows().enumerate() {
            if j > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (k, x) in row.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

type EntryRule = fn(&Factorials, usize, usize) -> BigRational;

/// A family of matrices given by an entry rule that does not depend on the
/// overall size.
#[derive(Clone, Copy)]
pub struct DimFreeMatrix {
    name: &'static str,
    rule: EntryRule,
    structural_zero: fn(usize, usize) -> bool,
}

impl DimFreeMatrix {
    pub const fn new(
        name: &'static str,
        rule: EntryRule,
        structural_zero: fn(usize, usize) -> bool,
    ) -> Self {
        DimFreeMatrix {
            name,
            rule,
            structural_zero,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn is_structural_zero(&self, j: usize, k: usize) -> bool {
        (self.structural_zero)(j, k)
    }

    /// A single entry, independent of any realization size.
    pub fn entry(&self, j: usize, k: usize) -> BigRational {
        if self.is_structural_zero(j, k) {
            return BigRational::zero();
        }
        let facts = Factorials::up_to(2 * j.max(k) + 1);
        (self.rule)(&facts, j, k)
    }

    /// The `(dim + 1) × (dim + 1)` realization.
    pub fn realize(&self, dim: usize) -> ExactMatrix {
        let facts = Factorials::up_to(2 * dim + 1);
        ExactMatrix::from_fn(dim + 1, |j, k| {
            if self.is_structural_zero(j, k) {
                BigRational::zero()
            } else {
                (self.rule)(&facts, j, k)
            }
        })
    }
}

impl fmt::Debug for DimFreeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DimFreeMatrix").field("name", &self.name).finish()
    }
}

fn above_diagonal(j: usize, k: usize) -> bool {
    k > j
}

fn off_diagonal(j: usize, k: usize) -> bool {
    j != k
}

fn never(_: usize, _: usize) -> bool {
    false
}

fn sign(j: usize, k: usize) -> BigRational {
    if (j + k) % 2 == 0 {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

fn gamma_rule(f: &Factorials, j: usize, k: usize) -> BigRational {
    f.ratio(j - k).recip()
}

fn b_rule(f: &Factorials, j: usize, k: usize) -> BigRational {
    BigRational::new(f.get(j + k).clone(), f.get(k) * f.get(j - k))
}

fn a_rule(f: &Factorials, j: usize, k: usize) -> BigRational {
    sign(j, k) * b_rule(f, j, k)
}

fn a_inverse_rule(f: &Factorials, j: usize, k: usize) -> BigRational {
    BigRational::new(
        BigInt::from(2 * k + 1) * f.get(j),
        f.get(j + k + 1) * f.get(j - k),
    )
}

fn lambda_rule(_: &Factorials, j: usize, _: usize) -> BigRational {
    rational::int(2 * j as i64 + 1)
}

fn rho_inverse_rule(_: &Factorials, j: usize, k: usize) -> BigRational {
    rational::frac(1, (j + k + 1) as i64)
}

/// `Γ_{jk} = 1/(j−k)!` for `j ≥ k`.
pub const GAMMA: DimFreeMatrix = DimFreeMatrix::new("gamma", gamma_rule, above_diagonal);
/// `B_{jk} = (j+k)!/(k!(j−k)!)` for `j ≥ k`.
pub const B: DimFreeMatrix = DimFreeMatrix::new("b", b_rule, above_diagonal);
/// `A = B*`, the coefficients of `G(v) = A·H(v)`.
pub const A: DimFreeMatrix = DimFreeMatrix::new("a", a_rule, above_diagonal);
/// `(A⁻¹)_{jk} = (2k+1) j!/((j+k+1)!(j−k)!)` for `j ≥ k`.
pub const A_INVERSE: DimFreeMatrix = DimFreeMatrix::new("a_inverse", a_inverse_rule, above_diagonal);
/// `Λ = diag(1, 3, 5, ...)`.
pub const LAMBDA: DimFreeMatrix = DimFreeMatrix::new("lambda", lambda_rule, off_diagonal);
/// Hilbert-type `(ρ⁻¹)_{jk} = 1/(j+k+1)`.
pub const RHO_INVERSE: DimFreeMatrix = DimFreeMatrix::new("rho_inverse", rho_inverse_rule, never);

pub fn gamma_matrix(dim: usize) -> ExactMatrix {
    GAMMA.realize(dim)
}

pub fn b_matrix(dim: usize) -> ExactMatrix {
    B.realize(dim)
}

pub fn a_matrix(dim: usize) -> ExactMatrix {
    A.realize(dim)
}

pub fn a_inverse_matrix(dim: usize) -> ExactMatrix {
    A_INVERSE.realize(dim)
}

pub fn lambda_matrix(dim: usize) -> ExactMatrix {
    LAMBDA.realize(dim)
}

pub fn rho_inverse_matrix(dim: usize) -> ExactMatrix {
    RHO_INVERSE.realize(dim)
}

/// `ρ = (ρ⁻¹)⁻¹` at dimension `dim`, from the closed-form sum
///
/// `ρ_{jk} = (−1)^{j+k} Σ_{m=max(j,k)}^{dim} (j+m)!(k+m)!(2m+1) / ((j!)²(k!)²(m−j)!(m−k)!)`.
///
/// The entries depend on `dim`. For `dim = 2` the `(2,0)` entry is 30.
pub fn rho_matrix(dim: usize) -> ExactMatrix {
    let f = Factorials::up_to(2 * dim + 1);
    let size = dim + 1;
    let mut out = ExactMatrix::zeros(size);
    for j in 0..size {
        for k in 0..=j {
            let mut sum = BigRational::zero();
            for m in j.max(k)..=dim {
                let num = f.get(j + m) * f.get(k + m) * BigInt::from(2 * m + 1);
                let den = f.get(m - j) * f.get(m - k);
                sum += BigRational::new(num, den);
            }
            let scale = f.get(j) * f.get(j) * f.get(k) * f.get(k);
            let value = sign(j, k) * sum / BigRational::from_integer(scale);
            out.set(j, k, value.clone());
            out.set(k, j, value);
        }
    }
    out
}

/// `ρ` through the factorization `D⁻¹ A′ Λ A D⁻¹` with `D = diag(j!)`.
pub fn rho_matrix_factored(dim: usize) -> ExactMatrix {
    let f = Factorials::up_to(dim);
    let a = a_matrix(dim);
    let inner = &(&a.transpose() * &lambda_matrix(dim)) * &a;
    ExactMatrix::from_fn(dim + 1, |j, k| {
        inner.get(j, k) / (f.ratio(j) * f.ratio(k))
    })
}
