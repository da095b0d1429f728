//! Closed-form kernels and rate tables.
//!
//! Functions generic over [`Scalar`] run in `f64` or exact rationals; the
//! `RateVector` entry points evaluate exactly and round once.

use statrs::function::factorial::ln_binomial;
use statrs::function::gamma::ln_gamma;

use crate::bessel::{bessel_i_quadrature, BesselTable};
use crate::discrete_ops::{complete, concat, d_chain, elementary, j_chain, mixed_entry, LatticeSeq};
use crate::error::{Error, Result};
use crate::linalg::{det, log_det_f64};
use crate::model::{interlace_violation, interlaces, Chamber, ChamberConfig, RateVector, TriangularField};
use crate::scalar::{Rational, Scalar};
use crate::symfunc::{schur_formula, schur_log_fast, sp_formula};

// ---------------------------------------------------------------------------
// Containers

/// Outgoing jumps of one state; zero rates are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable<T, S = f64> {
    pub moves: Vec<(T, S)>,
}

impl<T, S: Scalar> RateTable<T, S> {
    pub fn new() -> Self {
        Self { moves: Vec::new() }
    }

    fn push(&mut self, target: T, rate: S) {
        if !rate.is_zero() {
            self.moves.push((target, rate));
        }
    }

    pub fn total_exit(&self) -> S {
        self.moves.iter().fold(S::zero(), |acc, (_, r)| acc + r.clone())
    }

    pub fn rate_to(&self, target: &T) -> S
    where
        T: PartialEq,
    {
        self.moves
            .iter()
            .find(|(t, _)| t == target)
            .map(|(_, r)| r.clone())
            .unwrap_or_else(S::zero)
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Errors unless every rate is strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        for (_, r) in &self.moves {
            let f = r.to_f64_lossy();
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::RateTableInvalid(format!("rate {f} is not positive and finite")));
            }
        }
        Ok(())
    }
}

impl<T, S: Scalar> Default for RateTable<T, S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Kernel restricted to finite row and column state lists.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    pub rows: Vec<Vec<i64>>,
    pub cols: Vec<Vec<i64>>,
    pub entries: Vec<Vec<f64>>,
}

impl KernelMatrix {
    pub fn build(
        rows: Vec<Vec<i64>>,
        cols: Vec<Vec<i64>>,
        mut f: impl FnMut(&[i64], &[i64]) -> Result<f64>,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.len());
        for r in &rows {
            let row = cols.iter().map(|c| f(r, c)).collect::<Result<Vec<_>>>()?;
            entries.push(row);
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.iter().map(|r| r.iter().sum()).collect()
    }

    /// `self * other`, requiring `self.cols == other.rows`.
    pub fn compose(&self, other: &KernelMatrix) -> Result<KernelMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension { expected: self.cols.len(), got: other.rows.len() });
        }
        let entries = self
            .entries
            .iter()
            .map(|r| {
                (0..other.cols.len())
                    .map(|c| r.iter().zip(&other.entries).map(|(a, row)| a * row[c]).sum())
                    .collect()
            })
            .collect();
        Ok(KernelMatrix { rows: self.rows.clone(), cols: other.cols.clone(), entries })
    }
}

/// All of `W^n_{>=0}` with every coordinate at most `cap`.
pub fn w_nonneg_states(n: usize, cap: i64) -> Vec<Vec<i64>> {
    fn rec(n: usize, lo: i64, cap: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for a in lo..=cap {
            cur.push(a);
            rec(n, a, cap, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, cap, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Smallest cap `H` with `P(Y_n^* > H) <= tail`, and that certified mass.
pub fn truncation_cap(v: &RateVector, tail: f64) -> Result<(i64, f64)> {
    v.require_distinct()?;
    let mut h = 0;
    loop {
        let rest = 1.0 - sup_cdf(h, v)?;
        if rest <= tail {
            return Ok((h, rest.max(0.0)));
        }
        h += 1;
        if h > 100_000 {
            return Err(Error::TruncationFailure(tail));
        }
    }
}

fn exact_rates(v: &RateVector) -> Vec<Rational> {
    v.exact_or_binary()
}

fn round(r: Rational) -> f64 {
    r.to_f64_lossy()
}

// ---------------------------------------------------------------------------
// psi and the transition probabilities of PushASEP with a wall

/// `psi_t(x,y) = I_{y-x}(2t) - I_{x+y+2}(2t)`.
pub fn psi(t: f64, x: i64, y: i64) -> f64 {
    let table = BesselTable::new(2.0 * t, (x.abs() + y.abs() + 2) as usize);
    psi_with(&table, x, y)
}

pub fn psi_with(table: &BesselTable, x: i64, y: i64) -> f64 {
    if y == -1 {
        return 0.0;
    }
    table.get(y - x) - table.get(x + y + 2)
}

/// `psi_t` from the unit-circle contour integral by the trapezoid rule.
pub fn psi_contour(t: f64, x: i64, y: i64, tol: f64) -> f64 {
    let z = 2.0 * t;
    bessel_i_quadrature(y - x, z, tol) - bessel_i_quadrature(x + y + 2, z, tol)
}

pub(crate) const J_TERMS_MAX: usize = 4000;
/// Relative tolerance to which each J-sum of `r_t` is truncated.
pub const ENTRY_RTOL: f64 = 1e-17;
/// Relative accuracy certified for every value of `r_t`.
pub const R_RTOL: f64 = 1e-10;
/// Values whose error bound is below this are accepted regardless of size.
pub const R_ABS_FLOOR: f64 = 1e-300;
const MAX_PRECISION_BITS: usize = 8192;

fn lse(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

/// `ln` of a bound on the error of a determinant whose entries have
/// magnitudes `exp(ln_abs)` and absolute errors `exp(ln_err)`, with a
/// relative elimination rounding `exp(ln_gamma)`. Uses the product of row
/// sums, which dominates the permanent of the magnitudes.
pub(crate) fn det_error_ln(ln_abs: &[Vec<f64>], ln_err: &[Vec<f64>], ln_gamma: f64) -> f64 {
    let lse_all = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, lse);
    let mut ln_plain = 0.0;
    let mut ln_padded = 0.0;
    // row i is inflated by the factor 1 + eps_i
    let mut ln_eps = f64::NEG_INFINITY;
    let mut growth = 0.0;
    for (ra, re) in ln_abs.iter().zip(ln_err) {
        let a = lse_all(&mut ra.iter().copied());
        let e = lse_all(&mut re.iter().copied());
        ln_plain += a;
        ln_padded += lse(a, e);
        ln_eps = lse(ln_eps, e - a);
        growth += (e - a).exp().ln_1p();
    }
    if ln_plain == f64::NEG_INFINITY || ln_eps.is_nan() {
        return ln_padded + ln_gamma.exp().ln_1p();
    }
    // prod(1 + eps_i) - 1 <= (sum eps_i) prod(1 + eps_i)
    ln_plain + growth + lse(ln_eps, ln_gamma)
}

/// Largest matrix expanded over all permutations; beyond it elimination
/// and the row-sum bound are used.
pub(crate) const LEIBNIZ_MAX: usize = 6;

/// The permutations of `0..n` with their signs.
pub(crate) fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for k in 0..n {
        let mut next = Vec::with_capacity(out.len() * (k + 1));
        for (p, s) in &out {
            for pos in 0..=k {
                let mut q: Vec<usize> = p.clone();
                q.insert(pos, k);
                // k lands in front of k - pos smaller entries
                next.push((q, if (k - pos) % 2 == 0 { *s } else { -s }));
            }
        }
        out = next;
    }
    out
}

/// `ln` of a bound on the error of a Leibniz expansion. Entry errors move
/// the product for `perms[s]` by at most `prod(|a| + |e|) - prod |a|`, and
/// that product carries `extra[s]` more rounding units than the `n + n!`
/// of plain evaluation.
pub(crate) fn leibniz_error_ln(
    ln_abs: &[Vec<f64>],
    ln_err: &[Vec<f64>],
    perms: &[(Vec<usize>, f64)],
    extra: &[f64],
    ln_unit: f64,
) -> f64 {
    let base = (ln_abs.len() + perms.len()) as f64;
    let mut out = f64::NEG_INFINITY;
    for ((p, _), x) in perms.iter().zip(extra) {
        let mut la = 0.0;
        let mut lp = 0.0;
        for (i, &j) in p.iter().enumerate() {
            la += ln_abs[i][j];
            lp += lse(ln_abs[i][j], ln_err[i][j]);
        }
        let moved = if la == f64::NEG_INFINITY { lp } else { lp + (-(la - lp).exp_m1()).ln() };
        out = lse(out, lse(moved, lp + (2.0 * (base + x)).ln() + ln_unit));
    }
    out
}

/// `(sign, ln |det|, ln error bound)` of a float matrix with entry error
/// bounds, by the Leibniz expansion in log scale.
fn leibniz_f64(m: &[Vec<f64>], ln_err: &[Vec<f64>]) -> (f64, f64, f64) {
    let n = m.len();
    let perms = permutations(n);
    let ln_abs: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x.abs().ln()).collect()).collect();
    let terms: Vec<(f64, f64, f64)> = perms
        .iter()
        .map(|(p, s)| {
            let mut sign = *s;
            let mut l = 0.0;
            let mut spread = 0.0;
            for (i, &j) in p.iter().enumerate() {
                if m[i][j] < 0.0 {
                    sign = -sign;
                }
                l += ln_abs[i][j];
                spread += ln_abs[i][j].abs();
            }
            (sign, l, spread)
        })
        .collect();
    let lmax = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    // each log is off by |ln| ulps, the rescaling exp by |l - lmax|
    let extra: Vec<f64> = terms.iter().map(|t| t.2 + (t.1 - lmax).abs().min(1e300) + 4.0).collect();
    let err = leibniz_error_ln(&ln_abs, ln_err, &perms, &extra, f64::EPSILON.ln());
    if lmax == f64::NEG_INFINITY {
        return (0.0, f64::NEG_INFINITY, err);
    }
    let sum: f64 = terms.iter().map(|t| t.0 * (t.1 - lmax).exp()).sum();
    let sign = if sum > 0.0 { 1.0 } else if sum < 0.0 { -1.0 } else { 0.0 };
    (sign, lmax + sum.abs().ln(), err)
}

/// `r_t(x,y)` evaluator for fixed `t` and rates, reusing one Bessel table.
#[derive(Clone, Debug)]
pub struct TransitionKernel {
    t: f64,
    v: Vec<f64>,
    table: BesselTable,
    ln_i0: f64,
    ln_vmin_inv: f64,
    e_coef: Vec<Vec<f64>>,
    e_abs: Vec<f64>,
    h: Vec<Vec<f64>>,
    shift: Vec<Vec<ShiftSeries>>,
}

/// Coefficients in the shift `S: k -> k-1` of
/// `prod_{l<=j}(1 - S/v_l) / prod_{l<=i}(1 - S/v_l)`, which is what the
/// D-chain of column `j` and the J-chain of row `i` leave of each other on a
/// function of `w - u`.
#[derive(Clone, Debug)]
enum ShiftSeries {
    /// `i <= j`: a polynomial with alternating signs.
    Finite(Vec<f64>),
    /// `i > j`: a power series in `i - j` rates with nonnegative coefficients.
    Series(Vec<f64>),
}

impl TransitionKernel {
    pub fn new(t: f64, v: &RateVector) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidRates(format!("time {t} must be finite and nonnegative")));
        }
        let vals = v.values().to_vec();
        let n = vals.len();
        let inv: Vec<f64> = vals.iter().map(|x| 1.0 / x).collect();
        let mut e_coef = Vec::with_capacity(n);
        let mut e_abs = Vec::with_capacity(n);
        let mut h = Vec::with_capacity(n);
        for j in 1..=n {
            let e = elementary(&inv[..j]);
            e_abs.push(e.iter().sum());
            e_coef.push(e.iter().enumerate().map(|(k, x)| if k % 2 == 0 { *x } else { -x }).collect());
            h.push(complete(&inv[..j], J_TERMS_MAX));
        }
        let shift = (1..=n)
            .map(|i| {
                (1..=n)
                    .map(|j| {
                        if i <= j {
                            let e = elementary(&inv[i..j]);
                            ShiftSeries::Finite(e.iter().enumerate().map(|(k, x)| if k % 2 == 0 { *x } else { -x }).collect())
                        } else {
                            ShiftSeries::Series(complete(&inv[j..i], J_TERMS_MAX))
                        }
                    })
                    .collect()
            })
            .collect();
        let table = BesselTable::new(2.0 * t, 512);
        let vmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self {
            t,
            ln_i0: table.get(0).ln(),
            table,
            ln_vmin_inv: -vmin.ln(),
            e_coef,
            e_abs,
            h,
            shift,
            v: vals,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn psi(&self, x: i64, y: i64) -> f64 {
        psi_with(&self.table, x, y)
    }

    pub(crate) fn rates(&self) -> &[f64] {
        &self.v
    }

    pub(crate) fn ln_e_abs(&self, j: usize) -> f64 {
        self.e_abs[j - 1].ln()
    }

    /// `ln` of a bound on `sum_{m >= m0} C(m+d-1, d-1) vmin^-m E I_{q0+m-m0}(2t)`,
    /// which dominates the J-sum terms from `m0` on, available once the
    /// bounding terms shrink by at least half. Uses `I_q(2t) <= t^q/q! I_0(2t)`.
    pub(crate) fn tail_ln(&self, d: usize, ln_e: f64, m0: usize, q0: i64) -> Option<f64> {
        if q0 < 1 {
            return None;
        }
        let ratio = ((m0 + d) as f64 / (m0 + 1) as f64) * self.ln_vmin_inv.exp() * self.t / (q0 + 1) as f64;
        if ratio > 0.5 {
            return None;
        }
        let ln_b = ln_binomial((m0 + d - 1) as u64, (d - 1) as u64)
            + m0 as f64 * self.ln_vmin_inv
            + ln_e
            + self.ln_i0
            + q0 as f64 * self.t.ln()
            - ln_gamma(q0 as f64 + 1.0);
        Some(ln_b + 2f64.ln())
    }

    /// `F_ij(t; a, b)` with every infinite sum truncated once the remaining
    /// tail is certified below `1e-17` of the entry's magnitude.
    pub fn entry(&self, i: usize, j: usize, a: i64, b: i64) -> Result<f64> {
        self.entry_bounded(i, j, a, b).map(|(v, _)| v)
    }

    /// The entry and `ln` of a bound on its absolute error.
    ///
    /// `psi(u, w) = I_{w-u} - I_{u+w+2}`. On the first part the two operator
    /// chains telescope to [`ShiftSeries`]; summing them term by term instead
    /// would cancel most of the digits. The reflected part has no such
    /// cancellation and is summed directly.
    fn entry_bounded(&self, i: usize, j: usize, a: i64, b: i64) -> Result<(f64, f64)> {
        let k = b - a;
        let mut ops = 64usize;
        let mut trans = 0.0f64;
        let mut trans_mag = 0.0f64;
        let mut trans_tail = f64::NEG_INFINITY;
        match &self.shift[i - 1][j - 1] {
            ShiftSeries::Finite(c) => {
                for (p, cp) in c.iter().enumerate() {
                    let x = self.table.get(k - p as i64);
                    trans += cp * x;
                    trans_mag += cp.abs() * x;
                }
                ops += 2 * c.len();
            }
            ShiftSeries::Series(h) => {
                let mut done = false;
                for (m, hm) in h.iter().enumerate() {
                    let term = hm * self.table.get(k - m as i64);
                    if !term.is_finite() {
                        return Err(Error::TruncationFailure(ENTRY_RTOL));
                    }
                    trans += term;
                    ops += 2;
                    if let Some(tail) = self.tail_ln(i - j, 0.0, m + 1, m as i64 + 1 - k) {
                        if tail <= (ENTRY_RTOL * trans.max(1e-300)).ln() {
                            trans_tail = tail;
                            done = true;
                            break;
                        }
                    }
                }
                if !done {
                    return Err(Error::TruncationFailure(ENTRY_RTOL));
                }
                trans_mag = trans;
            }
        }

        let hs = &self.h[i - 1];
        let ec = &self.e_coef[j - 1];
        let ln_e = self.ln_e_abs(j);
        let mut refl = 0.0f64;
        let mut refl_mag = 0.0f64;
        for (m, hm) in hs.iter().enumerate() {
            let u = a + m as i64;
            let mut s = 0.0;
            let mut s_abs = 0.0;
            for (p, c) in ec.iter().enumerate() {
                let x = self.table.get(u + b - p as i64 + 2);
                s += c * x;
                s_abs += c.abs() * x;
            }
            let term = hm * s;
            if !term.is_finite() {
                return Err(Error::TruncationFailure(ENTRY_RTOL));
            }
            refl += term;
            refl_mag += hm * s_abs;
            ops += 2 * ec.len() + 2;
            let q0 = a + m as i64 + 1 + b + 2 - j as i64;
            if let Some(tail) = self.tail_ln(i, ln_e, m + 1, q0) {
                let target = (ENTRY_RTOL * refl_mag.max(trans_mag).max(1e-300)).ln();
                if tail <= target || tail == f64::NEG_INFINITY {
                    // the Bessel values carry a few ulps each, every sum adds one per term
                    let ln_round = ((trans_mag + refl_mag) * ops as f64 * f64::EPSILON).ln();
                    return Ok((trans - refl, lse(ln_round, lse(trans_tail, tail))));
                }
            }
        }
        Err(Error::TruncationFailure(ENTRY_RTOL))
    }

    /// `r_t(x, y)` for any integer vectors, to relative accuracy
    /// [`R_RTOL`] (or absolute `1e-300`). Where the float determinant cancels
    /// too much the matrix is recomputed with more bits.
    pub fn r(&self, x: &[i64], y: &[i64]) -> Result<f64> {
        let n = self.n();
        if x.len() != n || y.len() != n {
            return Err(Error::Dimension { expected: n, got: x.len().min(y.len()) });
        }
        let mut ln_pref = 0.0;
        for k in 0..n {
            ln_pref += (y[k] - x[k]) as f64 * self.v[k].ln() - self.t * (self.v[k] + 1.0 / self.v[k]);
        }
        let finish = |s: f64, l: f64, ln_err: f64| -> Option<f64> {
            let ln_val = l + ln_pref;
            let val = if s == 0.0 { 0.0 } else { s * ln_val.exp() };
            // exp of a large logarithm loses |ln| ulps
            let ln_err = lse(ln_err + ln_pref, ln_val + ((ln_val.abs() + 4.0) * f64::EPSILON).ln());
            let ok = ln_err <= R_RTOL.ln() + ln_val || ln_err <= R_ABS_FLOOR.ln();
            ok.then_some(val)
        };

        let mut m = vec![vec![0.0; n]; n];
        let mut ln_abs = vec![vec![0.0; n]; n];
        let mut ln_err = vec![vec![0.0; n]; n];
        for i in 1..=n {
            for j in 1..=n {
                let (e, err) = self.entry_bounded(i, j, x[i - 1] + i as i64 - 1, y[j - 1] + j as i64 - 1)?;
                m[i - 1][j - 1] = e;
                ln_abs[i - 1][j - 1] = e.abs().ln();
                ln_err[i - 1][j - 1] = err;
            }
        }
        let (s, l, err) = if n <= LEIBNIZ_MAX {
            leibniz_f64(&m, &ln_err)
        } else {
            let (s, l) = log_det_f64(m);
            let ln_gamma = (n as f64 * 2f64.powi(n as i32) * f64::EPSILON).ln();
            (s, l, det_error_ln(&ln_abs, &ln_err, ln_gamma))
        };
        if let Some(v) = finish(s, l, err) {
            return Ok(v);
        }
        let mut prec = 128;
        while prec <= MAX_PRECISION_BITS {
            let (s, l, err) = crate::precise::det_precise(self, x, y, prec)?;
            if let Some(v) = finish(s, l, err) {
                return Ok(v);
            }
            // once the value is resolved at all, the missing bits are known
            let short = (err - l - R_RTOL.ln()) / std::f64::consts::LN_2;
            prec = if err < l { prec + short.ceil() as usize + 16 } else { 2 * prec };
        }
        Err(Error::TruncationFailure(R_RTOL))
    }

    /// Right side of the forward equation for PushASEP with a wall at `(x, y)`.
    pub fn forward_rhs(&self, x: &[i64], y: &[i64]) -> Result<f64> {
        let n = self.n();
        let v = &self.v;
        let r_y = self.r(x, y)?;
        let mut out = 0.0;
        for k in 1..=n {
            let mut mk = k;
            while mk > 1 && y[mk - 2] == y[k - 1] {
                mk -= 1;
            }
            let below = if mk == 1 { 0 } else { y[mk - 2] };
            if below < y[mk - 1] {
                let mut z = y.to_vec();
                for p in mk..=k {
                    z[p - 1] -= 1;
                }
                out += v[mk - 1] * self.r(x, &z)?;
            }
            out -= v[k - 1] * r_y;
        }
        if y[0] != 0 {
            out -= r_y / v[0];
        }
        for k in 2..=n {
            if y[k - 2] != y[k - 1] {
                out -= r_y / v[k - 1];
            }
        }
        let mut z = y.to_vec();
        z[n - 1] += 1;
        out += self.r(x, &z)? / v[n - 1];
        for k in 1..n {
            if y[k - 1] != y[k] {
                let mut z = y.to_vec();
                z[k - 1] += 1;
                out += self.r(x, &z)? / v[k - 1];
            }
        }
        Ok(out)
    }
}

/// `r_t(x, y)` for `x, y` in `W^n_{>=0}`.
pub fn transition_r(t: f64, x: &ChamberConfig, y: &ChamberConfig, v: &RateVector) -> Result<f64> {
    for c in [x, y] {
        if !Chamber::NonNeg.contains(c.x()) {
            return Err(Error::ChamberMismatch(Chamber::NonNeg.name()));
        }
    }
    TransitionKernel::new(t, v)?.r(x.x(), y.x())
}

/// `r_t` through the operator algebra: each `psi(., w)` is materialised on
/// `[a, a + window]`, the J-chain applied as a [`LatticeSeq`] operation and
/// the D-chain applied in the second variable.
pub fn transition_r_generic(t: f64, x: &[i64], y: &[i64], v: &[f64], window: i64) -> Result<f64> {
    let n = v.len();
    let inv: Vec<f64> = v.iter().map(|a| 1.0 / a).collect();
    let kmax = (x.iter().chain(y).map(|a| a.abs()).max().unwrap_or(0) + window) as usize * 2 + 2 * n + 4;
    let table = BesselTable::new(2.0 * t, kmax);
    let mut m = vec![vec![0.0; n]; n];
    for i in 1..=n {
        for j in 1..=n {
            let a = x[i - 1] + i as i64 - 1;
            let b = y[j - 1] + j as i64 - 1;
            let mut g = Vec::with_capacity(j + 1);
            for w in b - j as i64..=b {
                let f = LatticeSeq::new(a, (a..=a + window).map(|u| psi_with(&table, u, w)).collect());
                g.push(concat(&j_chain(&v[..i]), &f)?.eval(a));
            }
            let gs = LatticeSeq::new(b - j as i64, g);
            m[i - 1][j - 1] = concat(&d_chain(&inv[..j]), &gs)?.eval(b);
        }
    }
    let mut pref = 1.0;
    for k in 0..n {
        pref *= v[k].powi((y[k] - x[k]) as i32) * (-t * (v[k] + 1.0 / v[k])).exp();
    }
    Ok(pref * crate::linalg::det_f64(m))
}

/// `F_ij` with a supplied `psi` and exactly `terms` J-terms, in any scalar.
pub fn f_entry_fixed<S: Scalar>(
    psi: &dyn Fn(i64, i64) -> S,
    v: &[S],
    i: usize,
    j: usize,
    a: i64,
    b: i64,
    terms: usize,
) -> S {
    let inv: Vec<S> = v.iter().map(|x| S::one() / x.clone()).collect();
    let e = elementary(&inv[..j]);
    let h = complete(&inv[..i], terms);
    let mut acc = S::zero();
    for (m, hm) in h.iter().enumerate().take(terms) {
        let u = a + m as i64;
        for (k, ek) in e.iter().enumerate() {
            let term = hm.clone() * ek.clone() * psi(u, b - k as i64);
            acc = if k % 2 == 0 { acc + term } else { acc - term };
        }
    }
    acc
}

/// Rational surrogate of `r_t`: the Bessel series and `e^{-t(v+1/v)}` truncated
/// after `order` terms and J-sums after `order` terms.
pub fn transition_r_taylor(t: &Rational, x: &[i64], y: &[i64], v: &[Rational], order: usize) -> Rational {
    let n = v.len();
    let kmax = (x.iter().chain(y).map(|a| a.abs()).max().unwrap_or(0) as usize + order + n) * 2 + 4;
    let mut fact = vec![Rational::from_integer(1.into())];
    for k in 1..=(kmax + order + 1) {
        let prev = fact[k - 1].clone();
        fact.push(prev * Rational::from_integer((k as i64).into()));
    }
    let ibar: Vec<Rational> = (0..=kmax)
        .map(|k| {
            let mut s = Rational::from_integer(0.into());
            for m in 0..=order {
                s += t.ipow((2 * m + k) as i64) / (fact[m].clone() * fact[m + k].clone());
            }
            s
        })
        .collect();
    let ival = |k: i64| -> Rational { ibar[k.unsigned_abs() as usize].clone() };
    let psi = move |u: i64, w: i64| -> Rational {
        if w == -1 {
            return Rational::from_integer(0.into());
        }
        ival(w - u) - ival(u + w + 2)
    };
    let mut mat = vec![vec![Rational::from_integer(0.into()); n]; n];
    for i in 1..=n {
        for j in 1..=n {
            mat[i - 1][j - 1] =
                f_entry_fixed(&psi, v, i, j, x[i - 1] + i as i64 - 1, y[j - 1] + j as i64 - 1, order);
        }
    }
    let mut rate_sum = Rational::from_integer(0.into());
    let mut pref = Rational::from_integer(1.into());
    for k in 0..n {
        pref *= v[k].ipow(y[k] - x[k]);
        rate_sum += v[k].clone() + Rational::from_integer(1.into()) / v[k].clone();
    }
    let arg = -(t.clone() * rate_sum);
    let mut expo = Rational::from_integer(0.into());
    for m in 0..=order {
        expo += arg.ipow(m as i64) / fact[m].clone();
    }
    pref * expo * det(mat)
}

// ---------------------------------------------------------------------------
// Invariant measure, one-step kernel, largest-particle CDF

/// `c_n prod v_k^{x_k} det(D^{(1/v_1..1/v_j)} phi_i(x_j + j - 1))` using the
/// eigen-relation of D on exponentials.
pub fn invariant_pmf_generic<S: Scalar>(x: &[i64], v: &[S]) -> S {
    let n = v.len();
    let one = S::one();
    let mut m = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        let vi = v[i].clone();
        for j in 0..n {
            let u = x[j] + j as i64;
            let mut p_inv = one.clone();
            let mut p_dir = one.clone();
            for vk in &v[..=j] {
                p_inv = p_inv * (one.clone() - vi.clone() / vk.clone());
                p_dir = p_dir * (one.clone() - one.clone() / (vk.clone() * vi.clone()));
            }
            m[i][j] = vi.ipow(-(u + 1)) * p_inv - vi.ipow(u + 1) * p_dir;
        }
    }
    let mut c = one.clone();
    for i in 0..n {
        for j in i + 1..n {
            c = c / (v[i].clone() - v[j].clone());
        }
        c = c * v[i].ipow(n as i64) * v[i].ipow(x[i]);
    }
    c * det(m)
}

pub fn invariant_pmf(x: &ChamberConfig, v: &RateVector) -> Result<f64> {
    v.require_distinct()?;
    if x.n() != v.n() {
        return Err(Error::Dimension { expected: v.n(), got: x.n() });
    }
    if !Chamber::NonNeg.contains(x.x()) {
        return Err(Error::ChamberMismatch(Chamber::NonNeg.name()));
    }
    Ok(round(invariant_pmf_generic(x.x(), &exact_rates(v))))
}

/// One-step kernel `P(G(n) = y | G(n-1) = xprev)` with `v_1` the new row's rate.
pub fn dw_step_kernel_generic<S: Scalar>(xprev: &[i64], y: &[i64], v: &[S]) -> Result<S> {
    let n = y.len();
    if xprev.len() + 1 != n || v.len() != n {
        return Err(Error::Dimension { expected: n, got: xprev.len() + 1 });
    }
    let mut x = vec![0];
    x.extend_from_slice(xprev);
    let b: Vec<S> = v.iter().map(|vk| S::one() / (v[0].clone() * vk.clone())).collect();
    let mut m = vec![vec![S::zero(); n]; n];
    for i in 1..=n {
        for j in 1..=n {
            let u = y[j - 1] - x[i - 1] + j as i64 - i as i64;
            m[i - 1][j - 1] = match j.cmp(&i) {
                std::cmp::Ordering::Greater => {
                    let e = elementary(&b[i..j]);
                    let mut s = S::zero();
                    for (k, ek) in e.iter().enumerate() {
                        if u - k as i64 >= 0 {
                            s = if k % 2 == 0 { s + ek.clone() } else { s - ek.clone() };
                        }
                    }
                    s
                }
                std::cmp::Ordering::Less => {
                    if u < 0 {
                        S::zero()
                    } else {
                        complete(&b[j..i], u as usize).into_iter().fold(S::zero(), |a, c| a + c)
                    }
                }
                std::cmp::Ordering::Equal => {
                    if u >= 0 {
                        S::one()
                    } else {
                        S::zero()
                    }
                }
            };
        }
    }
    let mut pref = S::one();
    for k in 0..n {
        let p = v[0].clone() * v[k].clone();
        pref = pref * (S::one() - p.clone()) * p.ipow(y[k] - x[k]);
    }
    Ok(pref * det(m))
}

/// Same kernel with entries built by the operator table on [`LatticeSeq`].
pub fn dw_step_kernel_operators<S: Scalar>(xprev: &[i64], y: &[i64], v: &[S]) -> Result<S> {
    let n = y.len();
    let mut x = vec![0];
    x.extend_from_slice(xprev);
    let pinv: Vec<S> = v.iter().map(|vk| S::one() / (v[0].clone() * vk.clone())).collect();
    let w1 = LatticeSeq::<S>::step();
    let mut m = vec![vec![S::zero(); n]; n];
    for i in 1..=n {
        for j in 1..=n {
            let u = y[j - 1] - x[i - 1] + j as i64 - i as i64;
            m[i - 1][j - 1] = mixed_entry(&pinv, i, j, &w1)?.eval(u);
        }
    }
    let mut pref = S::one();
    for k in 0..n {
        let p = v[0].clone() * v[k].clone();
        pref = pref * (S::one() - p.clone()) * p.ipow(y[k] - x[k]);
    }
    Ok(pref * det(m))
}

pub fn dw_step_kernel(xprev: &[i64], y: &[i64], v: &RateVector) -> Result<f64> {
    if !xprev.is_empty() && !Chamber::NonNeg.contains(xprev) {
        return Err(Error::ChamberMismatch(Chamber::NonNeg.name()));
    }
    if !Chamber::NonNeg.contains(y) {
        return Ok(0.0);
    }
    dw_step_kernel_generic(xprev, y, &exact_rates(v)).map(round)
}

/// `prod_{i<=j}(1 - v_i v_j)`.
fn pair_product<S: Scalar>(v: &[S]) -> S {
    let mut acc = S::one();
    for i in 0..v.len() {
        for j in i..v.len() {
            acc = acc * (S::one() - v[i].clone() * v[j].clone());
        }
    }
    acc
}

/// `F(eta) = prod_{i<=j}(1 - v_i v_j) (prod v)^eta Sp_{(eta,...,eta)}(v)`.
pub fn sup_cdf_generic<S: Scalar>(eta: i64, v: &[S]) -> S {
    let mut pv = S::one();
    for x in v {
        pv = pv * x.clone();
    }
    pair_product(v) * pv.ipow(eta) * sp_formula(&vec![eta; v.len()], v)
}

pub fn sup_cdf(eta: i64, v: &RateVector) -> Result<f64> {
    v.require_distinct()?;
    if eta < 0 {
        return Ok(0.0);
    }
    Ok(round(sup_cdf_generic(eta, &exact_rates(v))))
}

/// `P_x(sup_{t>=0} Z_n(t) <= m)` for the ordered walk started at `x`.
pub fn zdagger_sup_cdf_generic<S: Scalar>(x: &[i64], m: i64, v: &[S]) -> S {
    let n = x.len();
    if x[n - 1] > m {
        return S::zero();
    }
    let lam: Vec<i64> = x.iter().rev().map(|a| m - a).collect();
    let shifted: Vec<i64> = x.iter().map(|a| a - m).collect();
    pair_product(v) * sp_formula(&lam, v) / schur_formula(&shifted, v)
}

pub fn zdagger_sup_cdf(x: &ChamberConfig, m: i64, v: &RateVector) -> Result<f64> {
    v.require_distinct()?;
    if !Chamber::Full.contains(x.x()) {
        return Err(Error::ChamberMismatch(Chamber::Full.name()));
    }
    Ok(round(zdagger_sup_cdf_generic(x.x(), m, &exact_rates(v))))
}

// ---------------------------------------------------------------------------
// Rate tables

/// PushASEP with a wall: right clocks push the run of equal particles above,
/// left clocks are blocked by the particle below and by the wall.
pub fn pushasep_rates<S: Scalar>(y: &[i64], v: &[S]) -> RateTable<Vec<i64>, S> {
    let n = y.len();
    let mut t = RateTable::new();
    for i in 0..n {
        let mut j = i;
        while j + 1 < n && y[j + 1] == y[i] {
            j += 1;
        }
        let mut z = y.to_vec();
        for p in i..=j {
            z[p] += 1;
        }
        t.push(z, v[i].clone());
        let floor = if i == 0 { 0 } else { y[i - 1] };
        if y[i] > floor {
            let mut z = y.to_vec();
            z[i] -= 1;
            t.push(z, S::one() / v[i].clone());
        }
    }
    t
}

/// Ordered walk `Q(x, x +- e_i) = S_{x +- e_i}/S_x`, zero off `W^n`.
pub fn zdagger_rates_generic<S: Scalar>(x: &[i64], v: &[S]) -> RateTable<Vec<i64>, S> {
    let sx = schur_formula(x, v);
    let mut t = RateTable::new();
    for i in 0..x.len() {
        for d in [1, -1] {
            let mut z = x.to_vec();
            z[i] += d;
            if Chamber::Full.contains(&z) {
                let r = schur_formula(&z, v) / sx.clone();
                t.push(z, r);
            }
        }
    }
    t
}

pub fn zdagger_rates(x: &ChamberConfig, v: &RateVector) -> Result<RateTable<Vec<i64>>> {
    v.require_distinct()?;
    if !Chamber::Full.contains(x.x()) {
        return Err(Error::ChamberMismatch(Chamber::Full.name()));
    }
    let t = zdagger_rates_generic(x.x(), &exact_rates(v));
    Ok(RateTable { moves: t.moves.into_iter().map(|(z, r)| (z, round(r))).collect() })
}

/// Float rates through the log-scaled determinant; for well separated rates.
pub fn zdagger_rates_fast(x: &[i64], v: &[f64]) -> RateTable<Vec<i64>> {
    let (_, lx) = schur_log_fast(x, v);
    let mut t = RateTable::new();
    for i in 0..x.len() {
        for d in [1, -1] {
            let mut z = x.to_vec();
            z[i] += d;
            if Chamber::Full.contains(&z) {
                let (_, lz) = schur_log_fast(&z, v);
                t.push(z, (lz - lx).exp());
            }
        }
    }
    t
}

fn vv<S: Scalar>(v: &[S], k: usize) -> S {
    v[k - 1].clone()
}

fn field_with(x: &TriangularField, cells: &[(usize, usize)], d: i64) -> Option<TriangularField> {
    let mut vals = x.values().to_vec();
    for &(i, j) in cells {
        vals[crate::model::tri_index(x.n(), i, j)] += d;
    }
    TriangularField::from_values(x.n(), vals).ok()
}

/// Forward X-array rates: row pushes to the right, column pushes to the left.
pub fn x_rates<S: Scalar>(x: &TriangularField, v: &[S]) -> RateTable<TriangularField, S> {
    let n = x.n();
    let mut t = RateTable::new();
    for (i, j) in crate::model::tri_cells(n) {
        let xij = x.get(i, j);
        let mut k = j;
        while k > 1 && x.get(i, k - 1) == xij {
            k -= 1;
        }
        let cells: Vec<_> = (k..=j).map(|p| (i, p)).collect();
        if let Some(target) = field_with(x, &cells, 1) {
            let mut r = vv(v, n - j + 1);
            if !x.ext(i - 1, j + 1).gt(xij) {
                r = r / (vv(v, n - j + 1) * vv(v, i - 1));
            }
            t.push(target, r);
        }
        let mut l = i;
        while x.in_range(l + 1, j) && x.get(l + 1, j) == xij {
            l += 1;
        }
        let cells: Vec<_> = (i..=l).map(|p| (p, j)).collect();
        if let Some(target) = field_with(x, &cells, -1) {
            let mut r = S::one() / vv(v, n - j + 1);
            if !x.ext(i - 1, j + 1).ge(xij) {
                r = r * vv(v, i - 1) * vv(v, n - j + 1);
            }
            t.push(target, r);
        }
    }
    t
}

/// Reversed X-array rates `q-hat(y, .)` out of state `y`.
pub fn x_rates_reversed<S: Scalar>(y: &TriangularField, v: &[S]) -> RateTable<TriangularField, S> {
    let n = y.n();
    let mut t = RateTable::new();
    for (i, k) in crate::model::tri_cells(n) {
        let yik = y.get(i, k);
        // row move to the left, run (i, k..j) maximal to the right
        let mut j = k;
        while y.in_range(i, j + 1) && y.get(i, j + 1) == yik {
            j += 1;
        }
        let cells: Vec<_> = (k..=j).map(|p| (i, p)).collect();
        if let Some(x) = field_with(y, &cells, -1) {
            let mut r = S::one() / vv(v, i);
            if !x.ext(i + 1, k - 1).gt(x.get(i, k)) {
                r = r * vv(v, n - k + 2) * vv(v, i);
            }
            t.push(x, r);
        }
        // column move up, run (i..l, j) maximal upwards, initiated by (l, j) = (i, k) here
        let (l, jc) = (i, k);
        let mut top = l;
        while top > 1 && y.get(top - 1, jc) == yik {
            top -= 1;
        }
        let cells: Vec<_> = (top..=l).map(|p| (p, jc)).collect();
        if let Some(x) = field_with(y, &cells, 1) {
            let mut r = vv(v, l);
            if !x.ext(l + 1, jc - 1).ge(x.get(l, jc)) {
                r = r / (vv(v, n - jc + 2) * vv(v, l));
            }
            t.push(x, r);
        }
    }
    t
}

fn ind(b: bool) -> i64 {
    b as i64
}

/// Total forward exit rate, transcribed from the closed-form display.
pub fn q_total_display<S: Scalar>(x: &TriangularField, v: &[S]) -> S {
    let n = x.n();
    let one = S::one();
    let mut s = vv(v, 1);
    if x.get(1, n) > 0 {
        s = s + one.clone() / vv(v, 1);
    }
    for k in 1..n {
        s = s + vv(v, n - k + 1);
        if x.get(1, k) > x.get(1, k + 1) {
            s = s + one.clone() / vv(v, n - k + 1);
        }
    }
    for (i, j) in crate::model::tri_cells(n) {
        if i == 1 {
            continue;
        }
        let xij = x.get(i, j);
        let up_right = x.get(i - 1, j + 1);
        let base = vv(v, n - j + 1) * vv(v, i - 1);
        if xij < x.get(i - 1, j) {
            s = s + vv(v, n - j + 1) * base.ipow(-ind(xij >= up_right));
        }
        let gate = if i + j < n + 1 { xij > x.get(i, j + 1) } else { xij > 0 };
        if gate {
            s = s + base.ipow(ind(xij > up_right)) / vv(v, n - j + 1);
        }
    }
    s
}

/// Total reversed exit rate, transcribed from the closed-form display.
pub fn q_hat_total_display<S: Scalar>(x: &TriangularField, v: &[S]) -> S {
    let n = x.n();
    let one = S::one();
    let mut s = S::zero();
    for k in 1..n {
        s = s + vv(v, k);
        if x.get(k, 1) > x.get(k + 1, 1) {
            s = s + one.clone() / vv(v, k);
        }
    }
    s = s + vv(v, n);
    if x.get(n, 1) > 0 {
        s = s + one.clone() / vv(v, n);
    }
    for (i, j) in crate::model::tri_cells(n) {
        if i == 1 {
            continue;
        }
        let xij = x.get(i, j);
        let ur = x.get(i - 1, j + 1);
        let base = vv(v, i - 1) * vv(v, n - j + 1);
        if ur < x.get(i - 1, j) {
            s = s + vv(v, i - 1) * base.ipow(-ind(ur >= xij));
        }
        let gate = if i + j < n + 1 { ur > x.get(i, j + 1) } else { ur > 0 };
        if gate {
            s = s + base.ipow(ind(ur > xij)) / vv(v, i - 1);
        }
    }
    s
}

/// Law of the last-passage field `(G(i,j))` evaluated at `x`.
pub fn field_pmf_generic<S: Scalar>(x: &TriangularField, v: &[S]) -> S {
    let n = x.n();
    let one = S::one();
    let mut acc = one.clone();
    for (i, j) in crate::model::tri_cells(n) {
        if i + j < n + 1 {
            let p = vv(v, i) * vv(v, n - j + 1);
            let m = x.get(i + 1, j).max(x.get(i, j + 1));
            acc = acc * (one.clone() - p.clone()) * p.ipow(x.get(i, j) - m);
        }
    }
    for i in 1..=n {
        let p = vv(v, i) * vv(v, i);
        acc = acc * (one.clone() - p.clone()) * vv(v, i).ipow(2 * x.get(i, n - i + 1));
    }
    acc
}

pub fn field_pmf(x: &TriangularField, v: &RateVector) -> Result<f64> {
    if x.n() != v.n() {
        return Err(Error::Dimension { expected: v.n(), got: x.n() });
    }
    Ok(round(field_pmf_generic(x, &exact_rates(v))))
}

// ---------------------------------------------------------------------------
// Two-level intertwining

/// `m(x, y) = v_{n+1}^{|y| - |x|} S_x(v_1..v_n) / S_y(v_1..v_{n+1})`.
pub fn intertwining_m<S: Scalar>(x: &[i64], y: &[i64], v: &[S]) -> S {
    let n = x.len();
    let d: i64 = y.iter().sum::<i64>() - x.iter().sum::<i64>();
    v[n].ipow(d) * schur_formula(x, &v[..n]) / schur_formula(y, v)
}

/// Off-diagonal moves of the two-level process out of `(x, y)`.
pub fn two_level_rates<S: Scalar>(x: &[i64], y: &[i64], v: &[S]) -> RateTable<(Vec<i64>, Vec<i64>), S> {
    let n = x.len();
    let qx = zdagger_rates_generic(x, &v[..n]);
    let vn = v[n].clone();
    let mut t = RateTable::new();
    for (xt, r) in qx.moves {
        let i = (0..n).find(|&k| xt[k] != x[k]).expect("neighbour differs in one coordinate");
        let mut yt = y.to_vec();
        if xt[i] > x[i] {
            if x[i] == y[i + 1] {
                yt[i + 1] += 1;
            }
        } else if x[i] == y[i] {
            yt[i] -= 1;
        }
        if Chamber::Full.contains(&yt) && interlaces(&xt, &yt) {
            t.push((xt, yt), r);
        }
    }
    for i in 0..=n {
        for (d, r) in [(1, vn.clone()), (-1, S::one() / vn.clone())] {
            let mut yt = y.to_vec();
            yt[i] += d;
            if Chamber::Full.contains(&yt) && interlaces(x, &yt) {
                t.push((x.to_vec(), yt), r);
            }
        }
    }
    t
}

/// Diagonal entry of the two-level generator from the closed-form display.
pub fn two_level_diagonal<S: Scalar>(x: &[i64], y: &[i64], v: &[S]) -> S {
    let n = x.len();
    let vn = v[n].clone();
    let mut s = vn.clone() + S::one() / vn.clone();
    for i in 0..n {
        s = s + v[i].clone() + S::one() / v[i].clone();
        if y[i] < x[i] {
            s = s + vn.clone();
        }
        if y[i + 1] > x[i] {
            s = s + S::one() / vn.clone();
        }
    }
    -s
}

/// Every `x` with `x ⪯ y`.
pub fn interlaced_below(y: &[i64]) -> Vec<Vec<i64>> {
    let n = y.len() - 1;
    let mut out = vec![Vec::with_capacity(n)];
    for i in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for a in y[i]..=y[i + 1] {
                let mut q = p.clone();
                q.push(a);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Both sides of `Q_Y(y, y') m(x', y') = sum_{x ⪯ y} m(x, y) A((x, y), (x', y'))`.
pub fn intertwining_sides<S: Scalar>(y: &[i64], yp: &[i64], xp: &[i64], v: &[S]) -> Result<(S, S)> {
    if let Some(vio) = interlace_violation(xp, yp) {
        return Err(Error::InterlacingViolation(vio.to_string()));
    }
    let qy = if y == yp {
        v.iter().fold(S::zero(), |a, b| a - b.clone() - S::one() / b.clone())
    } else {
        zdagger_rates_generic(y, v).rate_to(&yp.to_vec())
    };
    let lhs = qy * intertwining_m(xp, yp, v);
    let target = (xp.to_vec(), yp.to_vec());
    let mut rhs = S::zero();
    for x in interlaced_below(y) {
        if !Chamber::Full.contains(&x) {
            continue;
        }
        let a = if x == xp && y == yp {
            two_level_diagonal(xp, yp, v)
        } else {
            two_level_rates(&x, y, v).rate_to(&target)
        };
        if !a.is_zero() {
            rhs = rhs + intertwining_m(&x, y, v) * a;
        }
    }
    Ok((lhs, rhs))
}

/// `sum_{x ⪯ y} m(x, y)`, which is 1 when `Λ(y, .)` is a probability kernel.
pub fn lambda_row_sum<S: Scalar>(y: &[i64], v: &[S]) -> S {
    interlaced_below(y)
        .into_iter()
        .filter(|x| Chamber::Full.contains(x))
        .fold(S::zero(), |acc, x| acc + intertwining_m(&x, y, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leibniz_matches_elimination() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(4).iter().map(|p| p.1).sum::<f64>(), 0.0);
        let m = vec![vec![2.0, -1.0, 0.5], vec![1.0, 3.0, -2.0], vec![0.25, 4.0, 1.0]];
        let zero = vec![vec![f64::NEG_INFINITY; 3]; 3];
        let (s, l, err) = leibniz_f64(&m, &zero);
        let (s2, l2) = log_det_f64(m);
        assert_eq!(s, s2);
        assert!((l - l2).abs() < 1e-14);
        assert!(err < l - 30.0);
    }
    use crate::model::GeomEnvironment;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    fn rv(s: &str) -> RateVector {
        RateVector::parse(s).unwrap()
    }

    #[test]
    fn psi_basic_values() {
        for x in 0..5 {
            assert_eq!(psi(0.7, x, -1), 0.0);
        }
        assert_eq!(psi(0.0, 3, 3), 1.0);
        assert_eq!(psi(0.0, 3, 4), 0.0);
        let a = psi(1.0, 0, 0);
        let b = psi_contour(1.0, 0, 0, 1e-15);
        assert!((a - b).abs() < 1e-12);
        assert!((psi(1.3, 2, 5) - psi(1.3, 5, 2)).abs() < 1e-15);
    }

    #[test]
    fn r0_is_identity() {
        let v = rv("0.3,0.5");
        let k = TransitionKernel::new(0.0, &v).unwrap();
        for x in w_nonneg_states(2, 3) {
            for y in w_nonneg_states(2, 3) {
                let r = k.r(&x, &y).unwrap();
                let want = if x == y { 1.0 } else { 0.0 };
                assert!((r - want).abs() < 1e-14, "{x:?} {y:?} {r}");
            }
        }
    }

    #[test]
    fn fast_and_generic_paths_agree() {
        let v = [0.3, 0.5, 0.7];
        let k = TransitionKernel::new(0.8, &RateVector::new(v.to_vec()).unwrap()).unwrap();
        for (x, y) in [([0, 1, 1], [0, 0, 2]), ([1, 2, 4], [0, 3, 3]), ([0, 0, 0], [2, 2, 5])] {
            let a = k.r(&x, &y).unwrap();
            let b = transition_r_generic(0.8, &x, &y, &v, 80).unwrap();
            assert!((a - b).abs() < 1e-9 * a.abs(), "{x:?} {y:?}: {a} vs {b}");
        }
        // 50-digit evaluation of the same determinant
        let want = 7.830_867_935_540_322e-6;
        let got = k.r(&[0, 0, 0], &[2, 2, 5]).unwrap();
        assert!((got - want).abs() < 1e-9 * want);
    }

    #[test]
    fn one_particle_rows_sum_to_one() {
        let v = rv("0.5");
        let k = TransitionKernel::new(1.5, &v).unwrap();
        for x in 0..4 {
            let s: f64 = (0..120).map(|y| k.r(&[x], &[y]).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-10, "x={x} s={s}");
        }
    }

    #[test]
    fn push_identity_exact() {
        let v = vec![q(1, 3), q(1, 2), q(2, 3)];
        let t = q(1, 2);
        let x = [0, 1, 3];
        for y in [[1, 1, 2], [0, 2, 2], [2, 2, 2]] {
            for j in 0..2 {
                if y[j] != y[j + 1] {
                    continue;
                }
                let mut ye = y;
                ye[j] += 1;
                let lhs = transition_r_taylor(&t, &x, &ye, &v, 5) / v[j].clone();
                let rhs = transition_r_taylor(&t, &x, &y, &v, 5) / v[j + 1].clone();
                assert_eq!(lhs, rhs, "y={y:?} j={j}");
            }
        }
    }

    #[test]
    fn invariant_pmf_one_particle() {
        let v = rv("0.5");
        let p0 = invariant_pmf(&ChamberConfig::new(vec![0], Chamber::NonNeg).unwrap(), &v).unwrap();
        let p1 = invariant_pmf(&ChamberConfig::new(vec![1], Chamber::NonNeg).unwrap(), &v).unwrap();
        assert!((p0 - 0.75).abs() < 1e-15 && (p1 - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn invariant_pmf_matches_sup_cdf() {
        let v = rv("0.3,0.5");
        for eta in 0..6 {
            let s: f64 = w_nonneg_states(2, eta)
                .iter()
                .map(|x| invariant_pmf(&ChamberConfig::new(x.clone(), Chamber::NonNeg).unwrap(), &v).unwrap())
                .sum();
            assert!((s - sup_cdf(eta, &v).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_cdf_closed_forms() {
        let v = rv("0.5");
        for eta in 0..6 {
            let want = 1.0 - 0.5f64.powi(2 * (eta as i32 + 1));
            assert!((sup_cdf(eta, &v).unwrap() - want).abs() < 1e-15);
        }
        let v = rv("0.3,0.5");
        assert!((sup_cdf(0, &v).unwrap() - 0.91 * 0.85 * 0.75).abs() < 1e-15);
        let zero = ChamberConfig::new(vec![0, 0], Chamber::Full).unwrap();
        for m in 0..5 {
            assert!((zdagger_sup_cdf(&zero, m, &v).unwrap() - sup_cdf(m, &v).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn dw_kernel_forms_agree_and_reduce() {
        let v = vec![q(3, 10), q(1, 2), q(2, 5)];
        for xprev in [[0, 1], [2, 2], [1, 3]] {
            for y in w_nonneg_states(3, 4) {
                let a = dw_step_kernel_generic(&xprev, &y, &v).unwrap();
                let b = dw_step_kernel_operators(&xprev, &y, &v).unwrap();
                assert_eq!(a, b);
            }
        }
        let one = rv("0.5");
        let k = dw_step_kernel(&[], &[2], &one).unwrap();
        assert!((k - 0.75 * 0.25f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn dw_kernel_one_step_matches_enumeration() {
        // G^pl(1) = g_21 (rate v_2 v_1... with n = 2 the first row uses v_2)
        let v = rv("0.3,0.5");
        let env_law = |g: &[i64]| -> f64 {
            let e = GeomEnvironment::new(v.clone(), g.to_vec()).unwrap();
            crate::model::tri_cells(2)
                .iter()
                .map(|&(i, j)| {
                    let p = e.ratio(i, j);
                    (1.0 - p) * p.powi(e.get(i, j) as i32)
                })
                .product()
        };
        let mut brute = std::collections::HashMap::new();
        let cap = 40;
        for a in 0..cap {
            for b in 0..cap {
                for c in 0..cap {
                    let g = [a, b, c];
                    let f = GeomEnvironment::new(v.clone(), g.to_vec()).unwrap().lpp_field();
                    *brute.entry((f.get(1, 2), f.get(1, 1))).or_insert(0.0) += env_law(&g);
                }
            }
        }
        // kernel from G^pl(1) = (x_2) with the new row's rate v_1
        for y in w_nonneg_states(2, 5) {
            let mut p = 0.0;
            for x2 in 0..cap {
                let prior = (1.0 - 0.25) * 0.25f64.powi(x2 as i32);
                p += prior * dw_step_kernel(&[x2], &y, &v).unwrap();
            }
            let want = brute.get(&(y[0], y[1])).copied().unwrap_or(0.0);
            assert!((p - want).abs() < 1e-12, "{y:?}: {p} vs {want}");
        }
    }

    #[test]
    fn x_rates_one_cell() {
        let v = vec![q(1, 2)];
        let x = TriangularField::from_values(1, vec![0]).unwrap();
        let t = x_rates(&x, &v);
        assert_eq!(t.total_exit(), q(1, 2));
        let x = TriangularField::from_values(1, vec![3]).unwrap();
        assert_eq!(x_rates(&x, &v).total_exit(), q(5, 2));
        assert_eq!(x_rates_reversed(&x, &v).total_exit(), q(5, 2));
    }

    #[test]
    fn x_rate_totals_match_displays() {
        let v = vec![q(1, 3), q(1, 2), q(3, 4)];
        for vals in [[0, 0, 0, 0, 0, 0], [3, 2, 1, 1, 1, 0], [4, 4, 2, 4, 1, 1], [2, 2, 2, 2, 2, 2]] {
            let x = TriangularField::from_values(3, vals.to_vec()).unwrap();
            let fwd = x_rates(&x, &v).total_exit();
            let rev = x_rates_reversed(&x, &v).total_exit();
            assert_eq!(fwd, q_total_display(&x, &v), "{vals:?}");
            assert_eq!(rev, q_hat_total_display(&x, &v), "{vals:?}");
            assert_eq!(fwd, rev, "{vals:?}");
        }
    }

    #[test]
    fn kelly_pairing_on_a_field() {
        let v = vec![q(1, 3), q(1, 2), q(3, 4)];
        let x = TriangularField::from_values(3, vec![4, 4, 2, 4, 1, 1]).unwrap();
        for (xp, r) in x_rates(&x, &v).moves {
            let back = x_rates_reversed(&xp, &v).rate_to(&x);
            assert_eq!(field_pmf_generic(&x, &v) * r, field_pmf_generic(&xp, &v) * back);
        }
    }

    #[test]
    fn field_pmf_one_cell() {
        let v = rv("0.5");
        let x = TriangularField::from_values(1, vec![2]).unwrap();
        assert!((field_pmf(&x, &v).unwrap() - 0.75 * 0.25f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn zdagger_examples() {
        let v = rv("0.4");
        let t = zdagger_rates(&ChamberConfig::new(vec![-3], Chamber::Full).unwrap(), &v).unwrap();
        assert!((t.rate_to(&vec![-2]) - 0.4).abs() < 1e-15);
        assert!((t.rate_to(&vec![-4]) - 2.5).abs() < 1e-15);
        let v = rv("0.3,0.5");
        let t = zdagger_rates(&ChamberConfig::new(vec![2, 2], Chamber::Full).unwrap(), &v).unwrap();
        assert_eq!(t.rate_to(&vec![3, 2]), 0.0);
        assert!(t.rate_to(&vec![2, 3]) > 0.0);
        let total: f64 = 0.3 + 0.5 + 1.0 / 0.3 + 2.0;
        assert!((t.total_exit() - total).abs() < 1e-12);
        let fast = zdagger_rates_fast(&[2, 2], &[0.3, 0.5]);
        assert!((fast.total_exit() - total).abs() < 1e-12);
    }

    #[test]
    fn intertwining_small_case() {
        let v = vec![q(1, 3), q(1, 2), q(3, 4)];
        let y = vec![0, 1, 3];
        assert_eq!(lambda_row_sum(&y, &v), q(1, 1));
        for yp in [vec![0, 1, 3], vec![1, 1, 3], vec![0, 2, 3], vec![0, 1, 4], vec![-1, 1, 3], vec![0, 0, 3]] {
            for xp in interlaced_below(&yp) {
                if !Chamber::Full.contains(&xp) {
                    continue;
                }
                let (l, r) = intertwining_sides(&y, &yp, &xp, &v).unwrap();
                assert_eq!(l, r, "y'={yp:?} x'={xp:?}");
            }
        }
    }

    #[test]
    fn kernel_matrix_compose() {
        let a = KernelMatrix::build(vec![vec![0], vec![1]], vec![vec![0], vec![1]], |x, y| {
            Ok(if x == y { 0.5 } else { 0.5 })
        })
        .unwrap();
        let b = a.compose(&a).unwrap();
        assert_eq!(b.row_sums(), vec![1.0, 1.0]);
    }
}
