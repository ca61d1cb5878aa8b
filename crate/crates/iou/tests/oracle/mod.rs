//! Reference computations for the acceptance suite. Nothing here calls into
//! the library's algorithms; inputs and outputs are plain vectors.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;
pub type QMatrix = Vec<Vec<Q>>;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub fn qmatrix(size: usize, f: impl Fn(usize, usize) -> Q) -> QMatrix {
    (0..size).map(|j| (0..size).map(|k| f(j, k)).collect()).collect()
}

pub fn qmul(x: &QMatrix, y: &QMatrix) -> QMatrix {
    let n = x.len();
    qmatrix(n, |i, k| {
        let mut acc = Q::zero();
        for j in 0..n {
            if !x[i][j].is_zero() && !y[j][k].is_zero() {
                acc += &x[i][j] * &y[j][k];
            }
        }
        acc
    })
}

/// `M*_{jk} = (−1)^{j+k} M_{jk}`.
pub fn qstar(x: &QMatrix) -> QMatrix {
    qmatrix(x.len(), |j, k| if (j + k) % 2 == 1 { -x[j][k].clone() } else { x[j][k].clone() })
}

pub fn qidentity(size: usize) -> QMatrix {
    qmatrix(size, |j, k| if j == k { Q::one() } else { Q::zero() })
}

/// Gauss-Jordan with exact pivots; `None` when singular.
pub fn qinverse(x: &QMatrix) -> Option<QMatrix> {
    let n = x.len();
    let mut a: Vec<Vec<Q>> = x.clone();
    let mut inv = qidentity(n);
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        inv.swap(col, p);
        let pivot = a[col][col].clone();
        for k in 0..n {
            a[col][k] = &a[col][k] / &pivot;
            inv[col][k] = &inv[col][k] / &pivot;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for k in 0..n {
                    let (ak, ik) = (&a[col][k] * &f, &inv[col][k] * &f);
                    a[r][k] -= ak;
                    inv[r][k] -= ik;
                }
            }
        }
    }
    Some(inv)
}

pub fn gamma(size: usize) -> QMatrix {
    qmatrix(size, |j, k| {
        if k > j {
            Q::zero()
        } else {
            Q::new(BigInt::one(), factorial(j - k))
        }
    })
}

pub fn b(size: usize) -> QMatrix {
    qmatrix(size, |j, k| {
        if k > j {
            Q::zero()
        } else {
            Q::new(factorial(j + k), factorial(k) * factorial(j - k))
        }
    })
}

pub fn a_inverse(size: usize) -> QMatrix {
    qmatrix(size, |j, k| {
        if k > j {
            Q::zero()
        } else {
            Q::new(BigInt::from(2 * k + 1) * factorial(j), factorial(j + k + 1) * factorial(j - k))
        }
    })
}

pub fn hilbert(size: usize) -> QMatrix {
    qmatrix(size, |j, k| q(1, (j + k + 1) as i64))
}

pub fn to_f64(x: &Q) -> f64 {
    let (n, d) = (x.numer().to_string(), x.denom().to_string());
    n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap()
}

/// `σ_n² = (n!/(2n)!)² / (2n+1)`.
pub fn sigma_sq(n: usize) -> Q {
    let g = Q::new(factorial(n), factorial(2 * n));
    &g * &g / Q::from_integer(BigInt::from(2 * n + 1))
}

/// Gauss-Legendre nodes and weights on `[−1, 1]` by Newton iteration.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre on `[a, b]` with panels no wider than `width`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, width: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let panels = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let (l, r) = (a + p as f64 * h, a + (p + 1) as f64 * h);
        let (mid, half) = (0.5 * (l + r), 0.5 * (r - l));
        total += half * rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(mid + half * x)).sum::<f64>();
    }
    total
}

/// Wynn's epsilon algorithm on partial sums; returns the even-column entry
/// whose last two values agree best.
pub fn wynn_epsilon(partial: &[f64]) -> f64 {
    let mut best = partial[partial.len() - 1];
    let mut best_err = (partial[partial.len() - 1] - partial[partial.len() - 2]).abs();
    let mut prev = vec![0.0; partial.len() + 1];
    let mut cur = partial.to_vec();
    let mut column = 1;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 {
                return best;
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        column += 1;
        if column % 2 == 1 && cur.len() >= 2 {
            let err = (cur[cur.len() - 1] - cur[cur.len() - 2]).abs();
            if err < best_err {
                best = cur[cur.len() - 1];
                best_err = err;
            }
        }
    }
    best
}

/// `H_n(v) = Π_{k=0}^{n} 1/(k + 1/2 + iv)` as `(re, im)`.
pub fn transfer(n: usize, v: f64) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for k in 0..=n {
        let (c, d) = (k as f64 + 0.5, v);
        let den = c * c + d * d;
        // (re + i im) / (c + i d)
        let (r, i) = ((re * c + im * d) / den, (im * c - re * d) / den);
        re = r;
        im = i;
    }
    (re, im)
}

/// `(1/2π) ∫ H_n(v) e^{ivt} dv` for `t > 0`, using conjugate symmetry to
/// fold onto `[0, ∞)`, half-period panels, and epsilon acceleration.
pub fn fourier_inverse(n: usize, t: f64) -> f64 {
    let rule = gauss_legendre(16);
    let f = |v: f64| {
        let (re, im) = transfer(n, v);
        re * (v * t).cos() - im * (v * t).sin()
    };
    let half_period = std::f64::consts::PI / t;
    let mut sum = 0.0;
    let partial: Vec<f64> = (0..30)
        .map(|k| {
            sum += integrate(&f, k as f64 * half_period, (k + 1) as f64 * half_period, 0.25, &rule);
            sum
        })
        .collect();
    wynn_epsilon(&partial) / std::f64::consts::PI
}

/// `R(t)_{jk} = t^{j+k+1} / (j! k! (j+k+1))`.
pub fn covariance(order: usize, t: f64) -> DMatrix<f64> {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    DMatrix::from_fn(order + 1, order + 1, |j, k| {
        t.powi((j + k + 1) as i32) / (fact(j) * fact(k) * (j + k + 1) as f64)
    })
}

/// Lower Cholesky factor after symmetric diagonal equilibration.
pub fn equilibrated_cholesky(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let d = DVector::from_fn(cov.nrows(), |i, _| cov[(i, i)].sqrt());
    let scaled = DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| cov[(i, j)] / (d[i] * d[j]));
    let l = scaled.cholesky().expect("positive definite").l();
    DMatrix::from_diagonal(&d) * l
}

/// `ln N(x; 0, cov)` through the equilibrated factor.
pub fn log_gaussian(cov: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let d = DVector::from_fn(cov.nrows(), |i, _| cov[(i, i)].sqrt());
    let scaled = DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| cov[(i, j)] / (d[i] * d[j]));
    let chol = scaled.cholesky().expect("positive definite");
    let z = chol.l().solve_lower_triangular(&x.component_div(&d)).unwrap();
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()
        + 2.0 * d.iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (x.len() as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + z.norm_squared())
}

/// `μ(a, t)_j = Σ_{k≤j} t^k/k! a_{j−k}`.
pub fn drift(a: &[f64], t: f64) -> Vec<f64> {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    (0..a.len())
        .map(|j| (0..=j).map(|k| t.powi(k as i32) / fact(k) * a[j - k]).sum())
        .collect()
}

/// `E exp(−(θ²/2) ∫₀¹ W₁²)` as the Fredholm determinant
/// `det(I + θ² K)^{−1/2}` of the covariance kernel of `W₁` on `[0, 1]`,
/// discretized by Nyström on Gauss-Legendre nodes.
pub fn laplace_fredholm(theta: f64, nodes: usize) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let s: Vec<f64> = x.iter().map(|v| 0.5 * (v + 1.0)).collect();
    let w: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
    // Cov(W₁(s), W₁(u)) = ∫₀^{min} (s−r)(u−r) dr = m²(3M − m)/6
    let kernel = |a: f64, b: f64| {
        let (m, big) = if a < b { (a, b) } else { (b, a) };
        m * m * (3.0 * big - m) / 6.0
    };
    let op = DMatrix::from_fn(nodes, nodes, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta + theta * theta * w[i].sqrt() * kernel(s[i], s[j]) * w[j].sqrt()
    });
    op.determinant().powf(-0.5)
}

fn exact(x: f64) -> Q {
    Q::from_float(x).expect("finite")
}

/// `ln N(w; μ(a, t), R(t))` with `w − μ`, `R`, the quadratic form and `det R`
/// all in exact rationals from the binary inputs; only the final logarithms
/// are taken in double.
pub fn log_transition_exact(a: &[f64], w: &[f64], t: f64) -> f64 {
    use num_traits::ToPrimitive;
    let size = a.len();
    let t = exact(t);
    let pow = |k: usize| (0..k).fold(Q::one(), |acc, _| acc * &t);
    let fact = |k: usize| Q::from_integer(factorial(k));
    let d: Vec<Q> = (0..size)
        .map(|j| {
            let mu = (0..=j).fold(Q::zero(), |acc, k| acc + pow(k) / fact(k) * exact(a[j - k]));
            exact(w[j]) - mu
        })
        .collect();
    let r = qmatrix(size, |j, k| pow(j + k + 1) / (fact(j) * fact(k) * Q::from_integer(BigInt::from(j + k + 1))));
    let inv = qinverse(&r).expect("positive definite");
    let mut form = Q::zero();
    for j in 0..size {
        for k in 0..size {
            form += &d[j] * &inv[j][k] * &d[k];
        }
    }
    // det by exact elimination; R is positive definite so pivots are nonzero
    let mut m = r;
    let mut ln_det = 0.0;
    for col in 0..size {
        let pivot = m[col][col].clone();
        ln_det += pivot.to_f64().unwrap().ln();
        for row in col + 1..size {
            let f = &m[row][col] / &pivot;
            for k in col..size {
                let v = &m[col][k] * &f;
                m[row][k] -= v;
            }
        }
    }
    -0.5 * (size as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + form.to_f64().unwrap())
}
