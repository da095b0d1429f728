//! Schur and symplectic Schur functions, the harmonic functions `h_A`, `h_C`,
//! their normalising constants, and pattern-sum oracles.
//!
//! Conventions: `x` is weakly increasing, so `S_x` is the Schur polynomial of
//! the partition `(x_n, ..., x_1)`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{det, log_det_signed};
use crate::model::{Chamber, ChamberConfig, GTPattern, RateVector};
use crate::scalar::{ln_abs_rational, sign_of, Rational, Scalar};

/// A possibly huge or tiny real held as sign and log-magnitude.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymFuncValue {
    pub log_magnitude: f64,
    pub sign: i8,
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact: Option<Rational>,
}

fn ser_opt_rational<Se: serde::Serializer>(
    r: &Option<Rational>,
    s: Se,
) -> std::result::Result<Se::Ok, Se::Error> {
    match r {
        Some(q) => s.serialize_some(&crate::scalar::format_rational(q)),
        None => s.serialize_none(),
    }
}

impl SymFuncValue {
    pub fn from_rational(r: Rational, keep_exact: bool) -> Self {
        Self {
            log_magnitude: ln_abs_rational(&r),
            sign: sign_of(&r),
            exact: keep_exact.then_some(r),
        }
    }

    pub fn from_f64(x: f64) -> Self {
        Self {
            log_magnitude: if x == 0.0 { f64::NEG_INFINITY } else { x.abs().ln() },
            sign: if x > 0.0 { 1 } else if x < 0.0 { -1 } else { 0 },
            exact: None,
        }
    }

    pub fn from_log(sign: f64, log_magnitude: f64) -> Self {
        let sign = if sign > 0.0 { 1 } else if sign < 0.0 { -1 } else { 0 };
        Self {
            log_magnitude: if sign == 0 { f64::NEG_INFINITY } else { log_magnitude },
            sign,
            exact: None,
        }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.log_magnitude.exp()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }
}

// ---------------------------------------------------------------------------
// Raw formulas, valid for any integer vector

/// `det(v_i^{j-1}) = prod_{i<j} (v_j - v_i)`.
pub fn vandermonde<S: Scalar>(v: &[S]) -> S {
    let mut acc = S::one();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            acc = acc * (v[j].clone() - v[i].clone());
        }
    }
    acc
}

/// `det(v_i^{x_j+j-1})`.
pub fn schur_numerator<S: Scalar>(x: &[i64], v: &[S]) -> S {
    let n = x.len();
    let m = (0..n)
        .map(|i| (0..n).map(|j| v[i].ipow(x[j] + j as i64)).collect())
        .collect();
    det(m)
}

/// `det(v_i^{x_j+j-1}) / det(v_i^{j-1})` for any integer vector `x`.
pub fn schur_formula<S: Scalar>(x: &[i64], v: &[S]) -> S {
    schur_numerator(x, v) / vandermonde(v)
}

/// `det(v_i^{x_j+j} - v_i^{-(x_j+j)})`.
pub fn sp_numerator<S: Scalar>(x: &[i64], v: &[S]) -> S {
    let n = x.len();
    let m = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let a = x[j] + j as i64 + 1;
                    v[i].ipow(a) - v[i].ipow(-a)
                })
                .collect()
        })
        .collect();
    det(m)
}

/// Raw determinant `det(v_i^j - v_i^{-j})`.
pub fn sp_weyl_det<S: Scalar>(v: &[S]) -> S {
    sp_numerator(&vec![0; v.len()], v)
}

/// Product form `(-1)^n prod_{i<j}(v_i-v_j) prod_{i<=j}(1-v_i v_j) prod_j v_j^{-n}`.
pub fn sp_weyl_product<S: Scalar>(v: &[S]) -> S {
    let n = v.len();
    let mut acc = if n % 2 == 0 { S::one() } else { -S::one() };
    for i in 0..n {
        for j in i..n {
            if i < j {
                acc = acc * (v[i].clone() - v[j].clone());
            }
            acc = acc * (S::one() - v[i].clone() * v[j].clone());
        }
        acc = acc * v[i].ipow(-(n as i64));
    }
    acc
}

/// Symplectic Schur formula for any integer vector `x`.
pub fn sp_formula<S: Scalar>(x: &[i64], v: &[S]) -> S {
    sp_numerator(x, v) / sp_weyl_product(v)
}

/// `prod_i v_(n-i+1)^{-x_i}`.
fn reverse_weight<S: Scalar>(x: &[i64], v: &[S]) -> S {
    let n = x.len();
    let mut acc = S::one();
    for i in 0..n {
        acc = acc * v[n - 1 - i].ipow(-x[i]);
    }
    acc
}

/// `h_A(x) = prod_i v_(n-i+1)^{-x_i} S_x(v)`, evaluated by formula for any `x`.
pub fn h_a_formula<S: Scalar>(x: &[i64], v: &[S]) -> S {
    reverse_weight(x, v) * schur_formula(x, v)
}

/// `h_C(x) = prod_i v_(n-i+1)^{-x_i} Sp_{(-x_n,...,-x_1)}(v)`, by formula for any `x`.
pub fn h_c_formula<S: Scalar>(x: &[i64], v: &[S]) -> S {
    let neg: Vec<i64> = x.iter().rev().map(|&a| -a).collect();
    reverse_weight(x, v) * sp_formula(&neg, v)
}

/// `kappa_A = prod_{i<j}(v_i - v_j) prod_{j<n} v_j^{-(n-j)}`.
pub fn kappa_a_generic<S: Scalar>(v: &[S]) -> S {
    let n = v.len();
    let mut acc = S::one();
    for i in 0..n {
        for j in i + 1..n {
            acc = acc * (v[i].clone() - v[j].clone());
        }
    }
    for j in 1..n {
        acc = acc * v[j - 1].ipow(-((n - j) as i64));
    }
    acc
}

/// `kappa_C = prod_{i<=j}(1 - v_i v_j) kappa_A`.
pub fn kappa_c_generic<S: Scalar>(v: &[S]) -> S {
    let n = v.len();
    let mut acc = kappa_a_generic(v);
    for i in 0..n {
        for j in i..n {
            acc = acc * (S::one() - v[i].clone() * v[j].clone());
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Public evaluation with validation

fn eval_exact(v: &RateVector, f: impl FnOnce(&[Rational]) -> Rational) -> SymFuncValue {
    let q = v.exact_or_binary();
    SymFuncValue::from_rational(f(&q), v.is_exact())
}

fn check_dim(x: &[i64], v: &RateVector) -> Result<()> {
    if x.len() != v.n() {
        return Err(Error::Dimension { expected: v.n(), got: x.len() });
    }
    Ok(())
}

/// `S_x(v)` for `x` in `W^n`.
///
/// The ratio is computed exactly on the rates (their literal values, or the
/// exact binary values of the floats) and rounded once, so close rates do not
/// lose accuracy to cancellation.
pub fn schur(x: &ChamberConfig, v: &RateVector) -> Result<SymFuncValue> {
    check_dim(x.x(), v)?;
    v.require_distinct()?;
    Ok(eval_exact(v, |q| schur_formula(x.x(), q)))
}

/// `Sp_x(v)` for `x` in `W^n_{>=0}`.
pub fn sp_schur(x: &ChamberConfig, v: &RateVector) -> Result<SymFuncValue> {
    check_dim(x.x(), v)?;
    if !Chamber::NonNeg.contains(x.x()) {
        return Err(Error::ChamberMismatch("W>=0"));
    }
    v.require_distinct()?;
    Ok(eval_exact(v, |q| sp_formula(x.x(), q)))
}

/// Product form of the symplectic Weyl denominator.
pub fn sp_weyl_denominator(v: &RateVector) -> Result<SymFuncValue> {
    v.require_distinct()?;
    Ok(eval_exact(v, |q| sp_weyl_product(q)))
}

pub fn h_a(x: &ChamberConfig, v: &RateVector) -> Result<SymFuncValue> {
    check_dim(x.x(), v)?;
    v.require_distinct()?;
    Ok(eval_exact(v, |q| h_a_formula(x.x(), q)))
}

pub fn h_c(x: &ChamberConfig, v: &RateVector) -> Result<SymFuncValue> {
    check_dim(x.x(), v)?;
    if !Chamber::NonPos.contains(x.x()) {
        return Err(Error::ChamberMismatch("W<=0"));
    }
    v.require_distinct()?;
    Ok(eval_exact(v, |q| h_c_formula(x.x(), q)))
}

pub fn kappa_a(v: &RateVector) -> f64 {
    kappa_a_generic(&v.exact_or_binary()).to_f64_lossy()
}

pub fn kappa_c(v: &RateVector) -> f64 {
    kappa_c_generic(&v.exact_or_binary()).to_f64_lossy()
}

// ---------------------------------------------------------------------------
// Fast float paths (log-scaled LU), for samplers that call these millions of times

fn ln_vandermonde(v: &[f64]) -> (f64, f64) {
    let mut sign = 1.0;
    let mut l = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let d = v[j] - v[i];
            if d < 0.0 {
                sign = -sign;
            }
            l += d.abs().ln();
        }
    }
    (sign, l)
}

/// `(sign, ln|S_x(v)|)` by log-scaled LU. Accurate when rates are well separated.
pub fn schur_log_fast(x: &[i64], v: &[f64]) -> (f64, f64) {
    let n = x.len();
    let m: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|i| (0..n).map(|j| (1.0, (x[j] + j as i64) as f64 * v[i].ln())).collect())
        .collect();
    let (s, l) = log_det_signed(&m);
    let (ds, dl) = ln_vandermonde(v);
    (s * ds, l - dl)
}

/// `(sign, ln|Sp_x(v)|)` by log-scaled LU, rates in `(0,1)`.
pub fn sp_log_fast(x: &[i64], v: &[f64]) -> (f64, f64) {
    let n = x.len();
    let m: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let a = x[j] + j as i64 + 1;
                    if a == 0 {
                        return (0.0, 0.0);
                    }
                    let b = a.unsigned_abs() as f64;
                    let mag = -b * v[i].ln() + (-(v[i].powf(2.0 * b))).ln_1p();
                    (-(a.signum() as f64), mag)
                })
                .collect()
        })
        .collect();
    let (s, l) = log_det_signed(&m);
    // product form of the denominator
    let mut ds = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut dl = 0.0;
    for i in 0..n {
        for j in i..n {
            if i < j {
                let d = v[i] - v[j];
                if d < 0.0 {
                    ds = -ds;
                }
                dl += d.abs().ln();
            }
            dl += (-v[i] * v[j]).ln_1p();
        }
        dl -= n as f64 * v[i].ln();
    }
    (s * ds, l - dl)
}

// ---------------------------------------------------------------------------
// Oracles

/// Default cap on enumerated patterns.
pub const DEFAULT_PATTERN_CAP: usize = 5_000_000;

/// Calls `visit` on every Gelfand-Tsetlin pattern with bottom row `z`.
pub fn for_each_gt_pattern(
    z: &[i64],
    cap: usize,
    mut visit: impl FnMut(&[Vec<i64>]),
) -> Result<usize> {
    let n = z.len();
    let mut levels: Vec<Vec<i64>> = (1..=n).map(|j| vec![0; j]).collect();
    levels[n - 1] = z.to_vec();
    let mut count = 0usize;
    fn rec(
        levels: &mut Vec<Vec<i64>>,
        j: usize,
        i: usize,
        count: &mut usize,
        cap: usize,
        visit: &mut dyn FnMut(&[Vec<i64>]),
    ) -> Result<()> {
        // fill level j (1-based, j < n) position i from level j+1
        if j == 0 {
            *count += 1;
            if *count > cap {
                return Err(Error::TooManyPatterns(cap));
            }
            visit(levels);
            return Ok(());
        }
        if i == j {
            return rec(levels, j - 1, 0, count, cap, visit);
        }
        let lo = levels[j][i];
        let hi = levels[j][i + 1];
        for val in lo..=hi {
            levels[j - 1][i] = val;
            rec(levels, j, i + 1, count, cap, visit)?;
        }
        Ok(())
    }
    if Chamber::Full.check(z).is_some() {
        return Ok(0);
    }
    rec(&mut levels, n - 1, 0, &mut count, cap, &mut visit)?;
    Ok(count)
}

/// All patterns with bottom row `z`.
pub fn gt_patterns(z: &[i64], cap: usize) -> Result<Vec<GTPattern>> {
    let mut out = Vec::new();
    for_each_gt_pattern(z, cap, |l| out.push(GTPattern::from_levels_unchecked(l.to_vec())))?;
    Ok(out)
}

/// `sum_{x in K_n(z)} w_v(x)`; works for repeated rates.
pub fn schur_oracle_generic<S: Scalar>(z: &[i64], v: &[S], cap: usize) -> Result<S> {
    let mut acc = S::zero();
    for_each_gt_pattern(z, cap, |levels| {
        acc = acc.clone() + GTPattern::from_levels_unchecked(levels.to_vec()).weight(v);
    })?;
    Ok(acc)
}

/// Pattern-sum value of `S_z(v)`.
pub fn schur_oracle(z: &ChamberConfig, v: &RateVector, cap: usize) -> Result<SymFuncValue> {
    check_dim(z.x(), v)?;
    let q = v.exact_or_binary();
    let r = schur_oracle_generic(z.x(), &q, cap)?;
    Ok(SymFuncValue::from_rational(r, v.is_exact()))
}

/// Symplectic pattern sum via the branching rule
/// `sp_lam(v_1..v_n) = sum_{lam >= nu >= mu} v_n^{|lam| - 2|nu| + |mu|} sp_mu(v_1..v_(n-1))`,
/// where `nu` has `n` nonnegative parts interlacing `lam` from below and `mu`
/// has `n-1` parts interlacing `nu`. `x` is weakly increasing and nonnegative.
pub fn sp_schur_oracle_generic<S: Scalar>(x: &[i64], v: &[S], cap: usize) -> Result<S> {
    let lam: Vec<i64> = x.iter().rev().cloned().collect();
    let mut count = 0usize;
    sp_branch(&lam, v, cap, &mut count)
}

fn sp_branch<S: Scalar>(lam: &[i64], v: &[S], cap: usize, count: &mut usize) -> Result<S> {
    let n = lam.len();
    if n == 0 {
        *count += 1;
        if *count > cap {
            return Err(Error::TooManyPatterns(cap));
        }
        return Ok(S::one());
    }
    let t = v[n - 1].clone();
    let lam_sum: i64 = lam.iter().sum();
    let mut acc = S::zero();
    // nu_k in [lam_(k+1), lam_k], lam_(n+1) = 0
    let mut nu = vec![0i64; n];
    let mut stack_ok = true;
    enumerate_box(&mut nu, 0, &|k| (if k + 1 < n { lam[k + 1] } else { 0 }, lam[k]), &mut |nu| {
        if !stack_ok {
            return;
        }
        let nu_sum: i64 = nu.iter().sum();
        // mu_k in [nu_(k+1), nu_k], k < n-1
        let mut mu = vec![0i64; n - 1];
        enumerate_box(&mut mu, 0, &|k| (nu[k + 1], nu[k]), &mut |mu| {
            if !stack_ok {
                return;
            }
            let mu_sum: i64 = mu.iter().sum();
            match sp_branch(mu, &v[..n - 1], cap, count) {
                Ok(inner) => {
                    acc = acc.clone() + t.ipow(lam_sum - 2 * nu_sum + mu_sum) * inner;
                }
                Err(_) => stack_ok = false,
            }
        });
    });
    if !stack_ok {
        return Err(Error::TooManyPatterns(cap));
    }
    Ok(acc)
}

fn enumerate_box(
    buf: &mut Vec<i64>,
    k: usize,
    bounds: &dyn Fn(usize) -> (i64, i64),
    visit: &mut dyn FnMut(&[i64]),
) {
    if k == buf.len() {
        visit(buf);
        return;
    }
    let (lo, hi) = bounds(k);
    for val in lo..=hi {
        buf[k] = val;
        enumerate_box(buf, k + 1, bounds, visit);
    }
}

pub fn sp_schur_oracle(x: &ChamberConfig, v: &RateVector, cap: usize) -> Result<SymFuncValue> {
    check_dim(x.x(), v)?;
    if !Chamber::NonNeg.contains(x.x()) {
        return Err(Error::ChamberMismatch("W>=0"));
    }
    let q = v.exact_or_binary();
    let r = sp_schur_oracle_generic(x.x(), &q, cap)?;
    Ok(SymFuncValue::from_rational(r, v.is_exact()))
}

/// Exact rational helper used by checks: is the value a literal zero?
pub fn is_exact_zero(r: &Rational) -> bool {
    r.is_zero()
}

/// Exact one, for readability in checks.
pub fn exact_one() -> Rational {
    Rational::one()
}
