//! Identity checks in exact arithmetic, float kernel checks, and the
//! statistical comparisons of simulated laws against exact ones.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use num_traits::{One, Signed, Zero};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::discrete_ops::{apply_d, apply_j, LatticeSeq};
use crate::error::{Error, Result};
use crate::kernels::{
    dw_step_kernel, field_pmf_generic, interlaced_below, intertwining_sides, invariant_pmf, pushasep_rates, psi,
    psi_contour, q_hat_total_display, q_total_display, sup_cdf, transition_r_taylor, truncation_cap,
    w_nonneg_states, x_rates, x_rates_reversed, zdagger_rates_fast, TransitionKernel,
};
use crate::linalg::det;
use crate::model::{Chamber, ChamberConfig, GeomEnvironment, RateVector, RngContract, TriangularField};
use crate::oracle::FiniteGenerator;
use crate::samplers::{
    default_burn_in, gt_run, pushasep_burned_in, pushasep_run, replicate, replicate_with, sample_geometric_field,
    x_array_run, Direction, MzSampler, ZdaggerSampler,
};
use crate::scalar::{format_rational, Rational, Scalar};
use crate::symfunc::{
    h_a_formula, h_c_formula, schur, schur_oracle, sp_weyl_det, sp_weyl_product, vandermonde,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
    Statistical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Discrepancy {
    /// Exact residual, printed as a fraction.
    Rational(String),
    /// Absolute float residual.
    Residual(f64),
    PValue(f64),
    Tv(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub instance: String,
    pub mode: Mode,
    pub discrepancy: Discrepancy,
    pub tolerance: f64,
    pub pass: bool,
    pub seconds: f64,
}

impl CheckReport {
    pub fn exact(name: &str, instance: String, residual: &Rational) -> Self {
        Self {
            name: name.into(),
            instance,
            mode: Mode::Exact,
            discrepancy: Discrepancy::Rational(format_rational(residual)),
            tolerance: 0.0,
            pass: residual.is_zero(),
            seconds: 0.0,
        }
    }

    pub fn float(name: &str, instance: String, residual: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            instance,
            mode: Mode::Float,
            discrepancy: Discrepancy::Residual(residual),
            tolerance: tol,
            pass: residual <= tol,
            seconds: 0.0,
        }
    }

    pub fn p_value(name: &str, instance: String, p: f64, alpha: f64) -> Self {
        Self {
            name: name.into(),
            instance,
            mode: Mode::Statistical,
            discrepancy: Discrepancy::PValue(p),
            tolerance: alpha,
            pass: p > alpha,
            seconds: 0.0,
        }
    }

    pub fn tv(name: &str, instance: String, tv: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            instance,
            mode: Mode::Statistical,
            discrepancy: Discrepancy::Tv(tv),
            tolerance: threshold,
            pass: tv < threshold,
            seconds: 0.0,
        }
    }

    fn timed(mut self, start: Instant) -> Self {
        self.seconds = start.elapsed().as_secs_f64();
        self
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match &self.discrepancy {
            Discrepancy::Rational(s) => format!("residual {s}"),
            Discrepancy::Residual(x) => format!("residual {x:.3e} (tol {:.0e})", self.tolerance),
            Discrepancy::PValue(p) => format!("p = {p:.4} (alpha {})", self.tolerance),
            Discrepancy::Tv(t) => format!("TV = {t:.5} (< {})", self.tolerance),
        };
        write!(
            f,
            "{} {:<40} {} [{}] {:.2}s",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            d,
            self.instance,
            self.seconds
        )
    }
}

pub fn reports_to_json(reports: &[CheckReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

// ---------------------------------------------------------------------------
// Random rational instances

fn q(a: i64, b: i64) -> Rational {
    Rational::new(a.into(), b.into())
}

/// Distinct rationals in `(0,1)` with denominators up to 13.
pub fn random_rates(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    let mut out: Vec<Rational> = Vec::with_capacity(n);
    while out.len() < n {
        let b = rng.random_range(3..=13i64);
        let a = rng.random_range(1..b);
        let r = q(a, b);
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

/// Sorted vector with entries in `[lo, hi]`, with a forced tie half the time.
fn random_config(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64) -> Vec<i64> {
    let mut x: Vec<i64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    x.sort_unstable();
    if n > 1 && rng.random_bool(0.5) {
        let k = rng.random_range(0..n - 1);
        x[k + 1] = x[k];
    }
    x
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> TriangularField {
    let v = RateVector::new(vec![0.5; n]).expect("valid");
    let g = (0..n * (n + 1) / 2).map(|_| if rng.random_bool(0.4) { 0 } else { rng.random_range(0..3) }).collect();
    GeomEnvironment::new(v, g).expect("nonnegative").lpp_field()
}

fn show(v: &[Rational]) -> String {
    v.iter().map(format_rational).collect::<Vec<_>>().join(",")
}

/// Runs `instances` draws of an exact identity; the report carries the first
/// nonzero residual, or zero.
fn exact_family(
    name: &str,
    instances: usize,
    rng: &mut ChaCha8Rng,
    mut one: impl FnMut(&mut ChaCha8Rng) -> Result<(String, Rational)>,
) -> Result<CheckReport> {
    let start = Instant::now();
    for _ in 0..instances {
        let (inst, r) = one(rng)?;
        if !r.is_zero() {
            return Ok(CheckReport::exact(name, inst, &r).timed(start));
        }
    }
    Ok(CheckReport::exact(name, format!("{instances} random rational instances"), &Rational::zero()).timed(start))
}

// ---------------------------------------------------------------------------
// Exact identities

/// `v_j^{-1} r_t(x, y + e_j) - v_{j+1}^{-1} r_t(x, y)` on the rational
/// surrogate of `r_t` (Taylor-truncated Bessel series), with `j` 0-based.
pub fn push_identity_residual(t: &Rational, x: &[i64], y: &[i64], j: usize, v: &[Rational], order: usize) -> Result<Rational> {
    if j + 1 >= y.len() || y[j] != y[j + 1] {
        return Err(Error::NotApplicable(format!("push identity needs y_j = y_(j+1) at j = {}", j + 1)));
    }
    let mut ye = y.to_vec();
    ye[j] += 1;
    let lhs = transition_r_taylor(t, x, &ye, v, order) / v[j].clone();
    let rhs = transition_r_taylor(t, x, y, v, order) / v[j + 1].clone();
    Ok(lhs - rhs)
}

/// Float version on the Bessel kernel, relative tolerance `1e-9`.
pub fn check_push_identity(t: f64, x: &[i64], y: &[i64], j: usize, v: &RateVector) -> Result<CheckReport> {
    if j + 1 >= y.len() || y[j] != y[j + 1] {
        return Err(Error::NotApplicable(format!("push identity needs y_j = y_(j+1) at j = {}", j + 1)));
    }
    let k = TransitionKernel::new(t, v)?;
    let mut ye = y.to_vec();
    ye[j] += 1;
    let lhs = k.r(x, &ye)? / v.get(j + 1);
    let rhs = k.r(x, y)? / v.get(j + 2);
    let scale = lhs.abs().max(rhs.abs()).max(1e-300);
    Ok(CheckReport::float("push-identity", format!("t={t} x={x:?} y={y:?} j={}", j + 1), (lhs - rhs).abs() / scale, 1e-9))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Harmonic {
    A,
    C,
}

/// `sum_i v_(n-i+1)(h(x+e_i) - h(x)) + v_(n-i+1)^{-1}(h(x-e_i) - h(x))`.
pub fn harmonic_residual(kind: Harmonic, x: &[i64], v: &[Rational]) -> Rational {
    let n = x.len();
    let h = |z: &[i64]| match kind {
        Harmonic::A => h_a_formula(z, v),
        Harmonic::C => h_c_formula(z, v),
    };
    let hx = h(x);
    let mut acc = Rational::zero();
    for i in 0..n {
        let w = v[n - 1 - i].clone();
        let mut up = x.to_vec();
        up[i] += 1;
        let mut down = x.to_vec();
        down[i] -= 1;
        acc += w.clone() * (h(&up) - hx.clone()) + (h(&down) - hx.clone()) / w;
    }
    acc
}

pub fn check_harmonic(kind: Harmonic, x: &[i64], v: &[Rational]) -> Result<CheckReport> {
    let chamber = match kind {
        Harmonic::A => Chamber::Full,
        Harmonic::C => Chamber::NonPos,
    };
    if let Some(vio) = chamber.check(x) {
        return Err(Error::Invalid(vio));
    }
    Ok(CheckReport::exact(
        match kind {
            Harmonic::A => "harmonic-hA",
            Harmonic::C => "harmonic-hC",
        },
        format!("x={x:?} v=({})", show(v)),
        &harmonic_residual(kind, x, v),
    ))
}

/// Kelly conditions at `x`: `q(x) - q-hat(x)`, the same for the closed-form
/// totals, and `pi(x) q(x, x') - pi(x') q-hat(x', x)` over all moves.
/// Returns the first nonzero residual.
pub fn kelly_residual(x: &TriangularField, v: &[Rational]) -> Rational {
    let fwd = x_rates(x, v);
    let rev = x_rates_reversed(x, v);
    let t = fwd.total_exit() - rev.total_exit();
    if !t.is_zero() {
        return t;
    }
    let t = q_total_display(x, v) - q_hat_total_display(x, v);
    if !t.is_zero() {
        return t;
    }
    let px = field_pmf_generic(x, v);
    for (xp, r) in fwd.moves {
        let back = x_rates_reversed(&xp, v).rate_to(x);
        let d = px.clone() * r - field_pmf_generic(&xp, v) * back;
        if !d.is_zero() {
            return d;
        }
    }
    Rational::zero()
}

pub fn check_kelly(x: &TriangularField, v: &[Rational]) -> CheckReport {
    CheckReport::exact("kelly", format!("x={:?} v=({})", x.values(), show(v)), &kelly_residual(x, v))
}

/// `q-hat(x; v)` against `q(x^T; reversed v)` move by move; the sum of
/// absolute rate differences.
pub fn transpose_symmetry_residual(x: &TriangularField, v: &[Rational]) -> Rational {
    let rv: Vec<Rational> = v.iter().rev().cloned().collect();
    let a = x_rates_reversed(x, v);
    let b = x_rates(&x.transpose(), &rv);
    let mut acc = Rational::zero();
    for (z, r) in &a.moves {
        acc += (r.clone() - b.rate_to(&z.transpose())).abs();
    }
    for (z, r) in &b.moves {
        if a.rate_to(&z.transpose()).is_zero() {
            acc += r.abs();
        }
    }
    acc
}

/// Both sides of the intertwining at every `x' ⪯ y'`; first nonzero difference.
pub fn intertwining_residual(y: &[i64], yp: &[i64], v: &[Rational]) -> Result<Rational> {
    for xp in interlaced_below(yp) {
        if !Chamber::Full.contains(&xp) {
            continue;
        }
        let (l, r) = intertwining_sides(y, yp, &xp, v)?;
        if l != r {
            return Ok(l - r);
        }
    }
    Ok(Rational::zero())
}

/// Neighbours `y' = y ± e_i` inside `W^n`, and `y` itself.
pub fn neighbours(y: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![y.to_vec()];
    for i in 0..y.len() {
        for d in [1, -1] {
            let mut z = y.to_vec();
            z[i] += d;
            if Chamber::Full.contains(&z) {
                out.push(z);
            }
        }
    }
    out
}

pub fn check_intertwining(y: &[i64], v: &[Rational]) -> Result<CheckReport> {
    for yp in neighbours(y) {
        let r = intertwining_residual(y, &yp, v)?;
        if !r.is_zero() {
            return Ok(CheckReport::exact("intertwining", format!("y={y:?} y'={yp:?} v=({})", show(v)), &r));
        }
    }
    Ok(CheckReport::exact("intertwining", format!("y={y:?} v=({})", show(v)), &Rational::zero()))
}

/// Type C Weyl denominator (determinant minus product), and the type A
/// Vandermonde determinant minus its product.
pub fn weyl_residual(v: &[Rational]) -> Rational {
    let c = sp_weyl_det(v) - sp_weyl_product(v);
    if !c.is_zero() {
        return c;
    }
    let n = v.len();
    let m = (0..n).map(|i| (0..n).map(|j| v[i].ipow(j as i64)).collect()).collect();
    det(m) - vandermonde(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IbpPart {
    /// Operators start at `v_1`; needs `f_i(-1) = 0`.
    First,
    /// Operators start at `v_2`.
    Second,
}

/// Both sides of the summation-by-parts lemma for finitely supported `f_i`,
/// `g_j` on `Z_{>=-1}`.
pub fn ibp_sides(part: IbpPart, fs: &[LatticeSeq<Rational>], gs: &[LatticeSeq<Rational>], v: &[Rational]) -> Result<(Rational, Rational)> {
    let n = v.len();
    if fs.len() != n || gs.len() != n {
        return Err(Error::Dimension { expected: n, got: fs.len().min(gs.len()) });
    }
    for s in fs.iter().chain(gs) {
        if !s.left_tail().is_empty() || !s.right_tail().is_empty() || s.lo() < -1 {
            return Err(Error::NotApplicable("inputs must be finitely supported on Z>=-1".into()));
        }
    }
    if part == IbpPart::First && fs.iter().any(|f| !f.eval(-1).is_zero()) {
        return Err(Error::NotApplicable("part (i) needs f_i(-1) = 0".into()));
    }
    let first = match part {
        IbpPart::First => 0,
        IbpPart::Second => 1,
    };
    // df[i][j] = D^(1/v_first .. 1/v_j) f_i, jg[i][j] = J^(v_first .. v_i) g_j
    let mut df = vec![Vec::with_capacity(n); n];
    for (i, f) in fs.iter().enumerate() {
        let mut cur = f.clone();
        for j in 0..n {
            if j >= first {
                cur = apply_d(&(Rational::one() / v[j].clone()), &cur);
            }
            df[i].push(cur.clone());
        }
    }
    let mut jg = vec![Vec::with_capacity(n); n];
    for g in gs {
        let mut cur = g.clone();
        for (i, row) in jg.iter_mut().enumerate() {
            if i >= first {
                cur = apply_j(&v[i], &cur)?;
            }
            row.push(cur.clone());
        }
    }
    let top = gs.iter().map(|g| g.hi()).max().unwrap_or(0);
    let cap = (top - n as i64 + 1).max(0);
    let mut lhs = Rational::zero();
    for x in w_nonneg_states(n, cap) {
        let a = (0..n).map(|i| (0..n).map(|j| df[i][j].eval(x[j] + j as i64)).collect()).collect();
        let da = det(a);
        if da.is_zero() {
            continue;
        }
        let b = (0..n).map(|i| (0..n).map(|j| jg[i][j].eval(x[i] + i as i64)).collect()).collect();
        lhs += da * det(b);
    }
    let m = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..=top).fold(Rational::zero(), |acc, u| acc + fs[i].eval(u) * gs[j].eval(u)))
                .collect()
        })
        .collect();
    Ok((lhs, det(m)))
}

pub fn check_ibp(part: IbpPart, fs: &[LatticeSeq<Rational>], gs: &[LatticeSeq<Rational>], v: &[Rational]) -> Result<CheckReport> {
    let (l, r) = ibp_sides(part, fs, gs, v)?;
    Ok(CheckReport::exact(
        match part {
            IbpPart::First => "ibp-part-i",
            IbpPart::Second => "ibp-part-ii",
        },
        format!("n={} v=({})", v.len(), show(v)),
        &(l - r),
    ))
}

fn random_seq(rng: &mut ChaCha8Rng, zero_at_minus_one: bool) -> LatticeSeq<Rational> {
    let len = rng.random_range(2..=6);
    let mut vals: Vec<Rational> = (0..len).map(|_| q(rng.random_range(-4..=4), rng.random_range(1..=5))).collect();
    if zero_at_minus_one {
        vals[0] = Rational::zero();
    }
    LatticeSeq::new(-1, vals)
}

/// The exact-identity suite: each family over `instances` random instances.
pub fn exact_suite(instances: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = RngContract::new(seed, 0xE).rng();
    let mut out = Vec::new();
    out.push(exact_family("push-identity", instances, &mut rng, |rng| {
        let n = rng.random_range(2..=3);
        let v = random_rates(rng, n);
        let t = q(rng.random_range(1..=8), 8);
        let x = random_config(rng, n, 0, 3);
        let mut y = random_config(rng, n, 0, 4);
        let j = rng.random_range(0..n - 1);
        y[j + 1] = y[j];
        let r = push_identity_residual(&t, &x, &y, j, &v, 4)?;
        Ok((format!("t={} x={x:?} y={y:?} j={} v=({})", format_rational(&t), j + 1, show(&v)), r))
    })?);
    for kind in [Harmonic::A, Harmonic::C] {
        let name = if kind == Harmonic::A { "harmonic-hA" } else { "harmonic-hC" };
        out.push(exact_family(name, instances, &mut rng, |rng| {
            let n = rng.random_range(1..=3);
            let v = random_rates(rng, n);
            let x = match kind {
                Harmonic::A => random_config(rng, n, -4, 4),
                Harmonic::C => random_config(rng, n, -5, 0),
            };
            Ok((format!("x={x:?} v=({})", show(&v)), harmonic_residual(kind, &x, &v)))
        })?);
    }
    out.push(exact_family("kelly", instances, &mut rng, |rng| {
        let n = rng.random_range(1..=3);
        let v = random_rates(rng, n);
        let x = random_field(rng, n);
        Ok((format!("x={:?} v=({})", x.values(), show(&v)), kelly_residual(&x, &v)))
    })?);
    out.push(exact_family("q-equals-q-hat", instances, &mut rng, |rng| {
        let n = rng.random_range(1..=4);
        let v = random_rates(rng, n);
        let x = random_field(rng, n);
        let r = x_rates(&x, &v).total_exit() - x_rates_reversed(&x, &v).total_exit();
        Ok((format!("x={:?} v=({})", x.values(), show(&v)), r))
    })?);
    out.push(exact_family("transpose-symmetry", instances, &mut rng, |rng| {
        let n = rng.random_range(1..=3);
        let v = random_rates(rng, n);
        let x = random_field(rng, n);
        Ok((format!("x={:?} v=({})", x.values(), show(&v)), transpose_symmetry_residual(&x, &v)))
    })?);
    for n in [2usize, 3] {
        let name = if n == 2 { "intertwining-1-to-2" } else { "intertwining-2-to-3" };
        out.push(exact_family(name, instances, &mut rng, |rng| {
            let v = random_rates(rng, n);
            let y = random_config(rng, n, -3, 3);
            for yp in neighbours(&y) {
                let r = intertwining_residual(&y, &yp, &v)?;
                if !r.is_zero() {
                    return Ok((format!("y={y:?} y'={yp:?} v=({})", show(&v)), r));
                }
            }
            Ok((String::new(), Rational::zero()))
        })?);
    }
    out.push(exact_family("weyl-denominator", instances, &mut rng, |rng| {
        let n = rng.random_range(1..=5);
        let v = random_rates(rng, n);
        Ok((format!("v=({})", show(&v)), weyl_residual(&v)))
    })?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Statistical machinery

pub fn empirical<K: Ord + Clone>(samples: &[K]) -> BTreeMap<K, f64> {
    let mut m = BTreeMap::new();
    for s in samples {
        *m.entry(s.clone()).or_insert(0.0) += 1.0;
    }
    let n = samples.len() as f64;
    m.values_mut().for_each(|c| *c /= n);
    m
}

/// Total variation distance; mass missing from either map counts as one
/// extra shared "elsewhere" cell.
pub fn tv_distance<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut acc = 0.0;
    for (k, a) in p {
        acc += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, b) in q {
        if !p.contains_key(k) {
            acc += b.abs();
        }
    }
    let rest_p = 1.0 - p.values().sum::<f64>();
    let rest_q = 1.0 - q.values().sum::<f64>();
    acc += (rest_p - rest_q).abs();
    0.5 * acc
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub cells: usize,
}

fn chi_p(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(df as f64).expect("df > 0").cdf(stat)
}

/// Goodness of fit of `samples` to the law `probs`. Cells with expected
/// count below `min_expected` are pooled, together with all mass outside
/// `probs`; a pooled cell that is itself too small joins the smallest kept cell.
pub fn chi_square<K: Ord + Clone>(samples: &[K], probs: &BTreeMap<K, f64>, min_expected: f64) -> ChiSquare {
    let n = samples.len() as f64;
    let mut obs: BTreeMap<K, f64> = BTreeMap::new();
    for s in samples {
        *obs.entry(s.clone()).or_insert(0.0) += 1.0;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (k, p) in probs {
        let o = obs.remove(k).unwrap_or(0.0);
        let e = n * p;
        if e >= min_expected {
            cells.push((o, e));
        } else {
            pool_o += o;
            pool_e += e;
        }
    }
    pool_o += obs.values().sum::<f64>();
    pool_e += (n - n * probs.values().sum::<f64>()).max(0.0);
    pool_cells(&mut cells, pool_o, pool_e, min_expected);
    let stat = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len().saturating_sub(1);
    ChiSquare { statistic: stat, df, p_value: chi_p(stat, df), cells: cells.len() }
}

fn pool_cells(cells: &mut Vec<(f64, f64)>, pool_o: f64, pool_e: f64, min_expected: f64) {
    if pool_e >= min_expected || cells.is_empty() {
        if pool_e > 0.0 || pool_o > 0.0 {
            cells.push((pool_o, pool_e.max(f64::MIN_POSITIVE)));
        }
    } else if pool_e > 0.0 || pool_o > 0.0 {
        let k = (0..cells.len()).min_by(|&a, &b| cells[a].1.total_cmp(&cells[b].1)).expect("nonempty");
        cells[k].0 += pool_o;
        cells[k].1 += pool_e;
    }
}

/// Two-sample chi-square on a `2 x k` table of exact state counts, pooling
/// states whose smaller expected count is below `min_expected`.
pub fn chi_square_two_sample<K: Ord + Clone>(a: &[K], b: &[K], min_expected: f64) -> ChiSquare {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut counts: BTreeMap<K, (f64, f64)> = BTreeMap::new();
    for s in a {
        counts.entry(s.clone()).or_insert((0.0, 0.0)).0 += 1.0;
    }
    for s in b {
        counts.entry(s.clone()).or_insert((0.0, 0.0)).1 += 1.0;
    }
    let small = na.min(nb) / (na + nb);
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    for (_, (ca, cb)) in counts {
        if (ca + cb) * small >= min_expected {
            kept.push((ca, cb));
        } else {
            pool.0 += ca;
            pool.1 += cb;
        }
    }
    if (pool.0 + pool.1) * small >= min_expected || kept.is_empty() {
        if pool.0 + pool.1 > 0.0 {
            kept.push(pool);
        }
    } else if pool.0 + pool.1 > 0.0 {
        let k = (0..kept.len())
            .min_by(|&x, &y| (kept[x].0 + kept[x].1).total_cmp(&(kept[y].0 + kept[y].1)))
            .expect("nonempty");
        kept[k].0 += pool.0;
        kept[k].1 += pool.1;
    }
    let total = na + nb;
    let mut stat = 0.0;
    for (ca, cb) in &kept {
        let m = ca + cb;
        let ea = na * m / total;
        let eb = nb * m / total;
        stat += (ca - ea).powi(2) / ea + (cb - eb).powi(2) / eb;
    }
    let df = kept.len().saturating_sub(1);
    ChiSquare { statistic: stat, df, p_value: chi_p(stat, df), cells: kept.len() }
}

// ---------------------------------------------------------------------------
// Statistical checks

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatParams {
    pub replicas: usize,
    pub tv_single: f64,
    pub tv_pair: f64,
    pub alpha: f64,
    pub min_expected: f64,
}

impl Default for StatParams {
    fn default() -> Self {
        Self { replicas: 100_000, tv_single: 0.015, tv_pair: 0.02, alpha: 0.001, min_expected: 5.0 }
    }
}

/// Law of `max` from `F(eta)` differences until the tail is below `1e-13`.
pub fn sup_law(v: &RateVector) -> Result<BTreeMap<i64, f64>> {
    let mut law = BTreeMap::new();
    let mut prev = 0.0;
    for eta in 0.. {
        let f = sup_cdf(eta, v)?;
        law.insert(eta, f - prev);
        prev = f;
        if 1.0 - f < 1e-13 {
            break;
        }
        if eta > 100_000 {
            return Err(Error::TruncationFailure(1e-13));
        }
    }
    Ok(law)
}

fn stream(seed: u64, k: u64) -> RngContract {
    RngContract::new(seed, k)
}

/// `Y_n^*` (burned in), its control at twice the burn-in, `sup Z_n` from the
/// origin (distinct rates only) and `G(1,1)`, each against `F` and pairwise.
pub fn check_theorem1(v: &RateVector, params: &StatParams, seed: u64) -> Result<Vec<CheckReport>> {
    let start = Instant::now();
    let n = v.n();
    let reps = params.replicas;
    let vals = v.values().to_vec();
    let burn = default_burn_in(v);
    let top = |y: Vec<i64>| y[n - 1];
    let y_star: Vec<i64> = replicate(reps, stream(seed, 11), |r| top(pushasep_burned_in(&vals, burn, r)));
    let y_ctrl: Vec<i64> = replicate(reps, stream(seed, 12), |r| top(pushasep_burned_in(&vals, 2.0 * burn, r)));
    let g11: Vec<i64> = replicate(reps, stream(seed, 13), |r| sample_geometric_field(v, r).1.get(1, 1));
    let zsup: Option<Vec<i64>> = if v.is_distinct() {
        let sampler = ZdaggerSampler::new(v, 1e-4)?;
        let out: Result<Vec<i64>> = replicate_with(
            reps,
            stream(seed, 14),
            || sampler.clone(),
            |s, r| s.sample_sup(&vec![0; n], r).map(|x| x.sup),
        )
        .into_iter()
        .collect();
        Some(out?)
    } else {
        None
    };
    let inst = format!("n={n} v={:?} replicas={reps} burn-in={burn:.1}", vals);
    let mut out = Vec::new();
    let e_y = empirical(&y_star);
    let e_c = empirical(&y_ctrl);
    let e_g = empirical(&g11);
    let e_z = zsup.as_ref().map(|z| empirical(z));
    if v.is_distinct() {
        let f = sup_law(v)?;
        out.push(CheckReport::tv("theorem1/Y*-vs-F", inst.clone(), tv_distance(&e_y, &f), params.tv_single));
        out.push(CheckReport::tv("theorem1/Y*(2T)-vs-F", inst.clone(), tv_distance(&e_c, &f), params.tv_single));
        if let Some(z) = &e_z {
            out.push(CheckReport::tv("theorem1/supZ-vs-F", inst.clone(), tv_distance(z, &f), params.tv_single));
        }
        out.push(CheckReport::tv("theorem1/G11-vs-F", inst.clone(), tv_distance(&e_g, &f), params.tv_single));
    }
    out.push(CheckReport::tv("theorem1/Y*-vs-Y*(2T)", inst.clone(), tv_distance(&e_y, &e_c), params.tv_pair));
    out.push(CheckReport::tv("theorem1/Y*-vs-G11", inst.clone(), tv_distance(&e_y, &e_g), params.tv_pair));
    if let Some(z) = &e_z {
        out.push(CheckReport::tv("theorem1/Y*-vs-supZ", inst.clone(), tv_distance(&e_y, z), params.tv_pair));
        out.push(CheckReport::tv("theorem1/supZ-vs-G11", inst.clone(), tv_distance(z, &e_g), params.tv_pair));
    }
    Ok(out.into_iter().map(|r| r.timed(start)).collect())
}

/// Joint law of `(Y_1^*, ..., Y_n^*)` against `(G(1,n), ..., G(1,1))`, and
/// against the exact invariant PMF when the rates are distinct.
pub fn check_theorem2(v: &RateVector, params: &StatParams, seed: u64) -> Result<Vec<CheckReport>> {
    let start = Instant::now();
    let n = v.n();
    let reps = params.replicas;
    let vals = v.values().to_vec();
    let burn = default_burn_in(v);
    let ys: Vec<Vec<i64>> = replicate(reps, stream(seed, 21), |r| pushasep_burned_in(&vals, burn, r));
    let gs: Vec<Vec<i64>> = replicate(reps, stream(seed, 22), |r| sample_geometric_field(v, r).1.row_reversed(1));
    let inst = format!("n={n} v={vals:?} replicas={reps}");
    let mut out = Vec::new();
    let c = chi_square_two_sample(&ys, &gs, params.min_expected);
    out.push(CheckReport::p_value(
        "theorem2/Y*-vs-LPP",
        format!("{inst} cells={} df={}", c.cells, c.df),
        c.p_value,
        params.alpha,
    ));
    if v.is_distinct() {
        let (cap, _) = truncation_cap(v, 1e-10)?;
        let mut law = BTreeMap::new();
        for x in w_nonneg_states(n, cap) {
            let p = invariant_pmf(&ChamberConfig::new(x.clone(), Chamber::NonNeg)?, v)?;
            law.insert(x, p);
        }
        for (name, s) in [("theorem2/Y*-vs-pi", &ys), ("theorem2/LPP-vs-pi", &gs)] {
            let c = chi_square(s, &law, params.min_expected);
            out.push(CheckReport::p_value(name, format!("{inst} cells={} df={}", c.cells, c.df), c.p_value, params.alpha));
        }
    }
    Ok(out.into_iter().map(|r| r.timed(start)).collect())
}

/// `(X(0), X(s))` under `v` from the stationary field law, against
/// `(Y(s)^T, Y(0)^T)` for the array under reversed `v`.
pub fn check_reversibility(v: &RateVector, s: f64, params: &StatParams, seed: u64) -> Result<CheckReport> {
    let start = Instant::now();
    let reps = params.replicas;
    let vals = v.values().to_vec();
    let rv = v.reversed();
    let rvals = rv.values().to_vec();
    let fwd: Result<Vec<(Vec<i64>, Vec<i64>)>> = replicate(reps, stream(seed, 31), |r| {
        let x0 = sample_geometric_field(v, r).1;
        let xs = x_array_run(x0.clone(), &vals, s, Direction::Forward, r, |_, _| {})?;
        Ok((x0.values().to_vec(), xs.values().to_vec()))
    })
    .into_iter()
    .collect();
    let bwd: Result<Vec<(Vec<i64>, Vec<i64>)>> = replicate(reps, stream(seed, 32), |r| {
        let y0 = sample_geometric_field(&rv, r).1;
        let ys = x_array_run(y0.clone(), &rvals, s, Direction::Forward, r, |_, _| {})?;
        Ok((ys.transpose().values().to_vec(), y0.transpose().values().to_vec()))
    })
    .into_iter()
    .collect();
    let c = chi_square_two_sample(&fwd?, &bwd?, params.min_expected);
    Ok(CheckReport::p_value(
        "reversibility",
        format!("n={} v={vals:?} s={s} replicas={reps} cells={} df={}", v.n(), c.cells, c.df),
        c.p_value,
        params.alpha,
    )
    .timed(start))
}

/// `(row(0), row(s))` of the top row of the stationary array against
/// PushASEP with a wall started from an independent stationary row.
pub fn check_row_marginal(v: &RateVector, s: f64, params: &StatParams, seed: u64) -> Result<CheckReport> {
    let start = Instant::now();
    let reps = params.replicas;
    let vals = v.values().to_vec();
    let arr: Result<Vec<(Vec<i64>, Vec<i64>)>> = replicate(reps, stream(seed, 41), |r| {
        let x0 = sample_geometric_field(v, r).1;
        let xs = x_array_run(x0.clone(), &vals, s, Direction::Forward, r, |_, _| {})?;
        Ok((x0.row_reversed(1), xs.row_reversed(1)))
    })
    .into_iter()
    .collect();
    let push: Vec<(Vec<i64>, Vec<i64>)> = replicate(reps, stream(seed, 42), |r| {
        let y0 = sample_geometric_field(v, r).1.row_reversed(1);
        let mut y = y0.clone();
        pushasep_run(&mut y, &vals, s, r, |_, _| {});
        (y0, y)
    });
    let c = chi_square_two_sample(&arr?, &push, params.min_expected);
    Ok(CheckReport::p_value(
        "row-marginal-pushasep",
        format!("n={} v={vals:?} s={s} replicas={reps} cells={} df={}", v.n(), c.cells, c.df),
        c.p_value,
        params.alpha,
    )
    .timed(start))
}

/// Law at time `t` of the ordered walk from `z`, by uniformization on the
/// box of width `pad` around `z`.
pub fn zdagger_law_truncated(z: &[i64], v: &RateVector, t: f64, pad: i64) -> Result<(BTreeMap<Vec<i64>, f64>, f64)> {
    v.require_distinct()?;
    let lo = z[0] - pad;
    let hi = z[z.len() - 1] + pad;
    let states: Vec<Vec<i64>> =
        w_nonneg_states(z.len(), hi - lo).into_iter().map(|x| x.iter().map(|a| a + lo).collect()).collect();
    let vals = v.values().to_vec();
    let g = FiniteGenerator::build(states, |x| zdagger_rates_fast(x, &vals));
    let (dist, lost) = g.transient_from(&z.to_vec(), t)?;
    let law = g.states().iter().cloned().zip(dist).filter(|(_, p)| *p > 0.0).collect();
    Ok((law, lost))
}

/// Bottom row of the push-block dynamics from an `M_z` start, at time `t`,
/// against the truncated ordered-walk law.
pub fn check_gt_bottom_row(v: &RateVector, z: &[i64], t: f64, params: &StatParams, seed: u64) -> Result<CheckReport> {
    let start = Instant::now();
    let reps = params.replicas;
    let vals = v.values().to_vec();
    let mz = MzSampler::new(v)?;
    let samples: Result<Vec<Vec<i64>>> = replicate_with(
        reps,
        stream(seed, 51),
        || mz.clone(),
        |m, r| {
            let p = m.sample(z, r)?;
            let mut levels = p.levels().to_vec();
            gt_run(&mut levels, &vals, t, r, |_, _| {});
            Ok(levels.pop().expect("n >= 1"))
        },
    )
    .into_iter()
    .collect();
    let (law, lost) = zdagger_law_truncated(z, v, t, 30)?;
    let tv = tv_distance(&empirical(&samples?), &law);
    Ok(CheckReport::tv(
        "gt-bottom-row-vs-zdagger",
        format!("n={} v={vals:?} z={z:?} t={t} replicas={reps} truncation loss={lost:.1e}", v.n()),
        tv,
        params.tv_pair,
    )
    .timed(start))
}

// ---------------------------------------------------------------------------
// Float kernel checks

/// `pi`, `F` and `r_t` for one particle against closed forms and the
/// uniformized truncated generator.
pub fn check_one_particle(v: f64) -> Result<Vec<CheckReport>> {
    let start = Instant::now();
    let rv = RateVector::new(vec![v])?;
    let w = v * v;
    let mut e_pi = 0.0f64;
    let mut e_f = 0.0f64;
    for k in 0..40 {
        let p = invariant_pmf(&ChamberConfig::new(vec![k], Chamber::NonNeg)?, &rv)?;
        e_pi = e_pi.max((p - (1.0 - w) * w.powi(k as i32)).abs());
        e_f = e_f.max((sup_cdf(k, &rv)? - (1.0 - w.powi(k as i32 + 1))).abs());
    }
    let mut out = vec![
        CheckReport::float("n1/pi-geometric", format!("v={v}, 0..40"), e_pi, 1e-14).timed(start),
        CheckReport::float("n1/F-closed-form", format!("v={v}, 0..40"), e_f, 1e-14).timed(start),
    ];
    let states: Vec<Vec<i64>> = (0..120).map(|k| vec![k]).collect();
    let g = FiniteGenerator::build(states, |s| pushasep_rates(s, &[v]));
    let mut worst = 0.0f64;
    for t in [0.1, 0.5, 1.0, 1.5, 2.0] {
        let k = TransitionKernel::new(t, &rv)?;
        for x in 0..8 {
            let (dist, _) = g.transient_from(&vec![x], t)?;
            for y in 0..25 {
                worst = worst.max((k.r(&[x], &[y])? - dist[y as usize]).abs());
            }
        }
    }
    out.push(CheckReport::float("n1/r_t-vs-generator", format!("v={v}, t<=2, x<8, y<25"), worst, 1e-8).timed(start));
    Ok(out)
}

/// Five-point centered derivative of `r_t(x, y)` in `t`.
fn dr_dt(v: &RateVector, t: f64, x: &[i64], y: &[i64], h: f64) -> Result<f64> {
    let r = |s: f64| TransitionKernel::new(s, v)?.r(x, y);
    Ok((-r(t + 2.0 * h)? + 8.0 * r(t + h)? - 8.0 * r(t - h)? + r(t - 2.0 * h)?) / (12.0 * h))
}

pub fn check_forward_equation(t: f64, x: &[i64], y: &[i64], v: &RateVector, h: f64) -> Result<CheckReport> {
    let k = TransitionKernel::new(t, v)?;
    let lhs = dr_dt(v, t, x, y, h)?;
    let rhs = k.forward_rhs(x, y)?;
    let tol = 1e-6f64.max(h.powi(4) * 1e2);
    Ok(CheckReport::float("forward-equation", format!("t={t} x={x:?} y={y:?} h={h}"), (lhs - rhs).abs(), tol))
}

/// Chapman-Kolmogorov, stationarity of `pi`, the forward equation and row
/// sums of the one-step kernel, for `n <= 2`.
pub fn check_kernel_consistency(v: &RateVector) -> Result<Vec<CheckReport>> {
    let n = v.n();
    let inst = format!("v={:?}", v.values());
    let mut out = Vec::new();

    let start = Instant::now();
    let (s, t) = (0.4, 0.6);
    let ks = TransitionKernel::new(s, v)?;
    let kt = TransitionKernel::new(t, v)?;
    let kst = TransitionKernel::new(s + t, v)?;
    let zs = w_nonneg_states(n, 45);
    let mut worst = 0.0f64;
    for x in [vec![0; n], (0..n as i64).collect::<Vec<_>>()] {
        for y in [vec![1; n], (1..=n as i64).map(|a| 2 * a).collect::<Vec<_>>()] {
            let mut acc = 0.0;
            for z in &zs {
                acc += ks.r(&x, z)? * kt.r(z, &y)?;
            }
            worst = worst.max((acc - kst.r(&x, &y)?).abs());
        }
    }
    out.push(CheckReport::float("chapman-kolmogorov", format!("{inst} s={s} t={t}"), worst, 1e-7).timed(start));

    let start = Instant::now();
    let t = 0.7;
    let kt = TransitionKernel::new(t, v)?;
    let (cap, _) = truncation_cap(v, 1e-13)?;
    let xs = w_nonneg_states(n, cap);
    let pis = xs
        .iter()
        .map(|x| invariant_pmf(&ChamberConfig::new(x.clone(), Chamber::NonNeg)?, v))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for y in w_nonneg_states(n, 3) {
        let mut acc = 0.0;
        for (x, p) in xs.iter().zip(&pis) {
            acc += p * kt.r(x, &y)?;
        }
        let py = invariant_pmf(&ChamberConfig::new(y.clone(), Chamber::NonNeg)?, v)?;
        worst = worst.max((acc - py).abs());
    }
    out.push(CheckReport::float("stationarity", format!("{inst} t={t} cap={cap}"), worst, 1e-8).timed(start));

    let start = Instant::now();
    let mut worst = 0.0f64;
    let cases: Vec<(Vec<i64>, Vec<i64>)> = if n == 1 {
        vec![(vec![0], vec![0]), (vec![2], vec![1]), (vec![0], vec![3])]
    } else {
        vec![(vec![0; n], vec![0; n]), (vec![0; n], vec![1; n]), ((0..n as i64).collect(), (1..=n as i64).map(|a| 2 * a).collect())]
    };
    for (x, y) in &cases {
        let r = check_forward_equation(0.8, x, y, v, 5e-3)?;
        if let Discrepancy::Residual(d) = r.discrepancy {
            worst = worst.max(d);
        }
    }
    out.push(CheckReport::float("forward-equation", format!("{inst} t=0.8 h=5e-3"), worst, 1e-6).timed(start));

    let start = Instant::now();
    let ys = w_nonneg_states(n, 60);
    let mut worst = 0.0f64;
    let prevs: Vec<Vec<i64>> = if n == 1 { vec![vec![]] } else { (0..4).map(|a| vec![a; n - 1]).collect() };
    for xp in &prevs {
        let mut acc = 0.0;
        for y in &ys {
            acc += dw_step_kernel(xp, y, v)?;
        }
        worst = worst.max((acc - 1.0).abs());
    }
    out.push(CheckReport::float("dw-kernel-row-sums", format!("{inst} y<=60"), worst, 1e-10).timed(start));
    Ok(out)
}

/// Schur against pattern sums, `psi` against quadrature, and the
/// summation-by-parts lemma on random finite inputs.
pub fn check_oracles(instances: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = RngContract::new(seed, 0x0A).rng();
    let mut out = Vec::new();

    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in 1..=4usize {
        for _ in 0..10 {
            let v = RateVector::new(random_rates(&mut rng, n).iter().map(|r| r.to_f64_lossy()).collect())?;
            let z = random_config(&mut rng, n, -2, 4);
            let c = ChamberConfig::new(z, Chamber::Full)?;
            let a = schur(&c, &v)?.value();
            let b = schur_oracle(&c, &v, 10_000_000)?.value();
            worst = worst.max((a - b).abs() / a.abs().max(1e-300));
        }
    }
    out.push(CheckReport::float("schur-vs-gt-sum", "n<=4, 40 instances".into(), worst, 1e-10).timed(start));

    let start = Instant::now();
    let mut worst = 0.0f64;
    for t in [0.05, 0.3, 1.0, 2.0, 5.0] {
        for x in 0..10 {
            for y in -1..12 {
                let q = psi_contour(t, x, y, 1e-15);
                // absolute below 1, relative above: I_k(2t) grows like e^{2t}
                worst = worst.max((psi(t, x, y) - q).abs() / q.abs().max(1.0));
            }
        }
    }
    out.push(CheckReport::float("psi-bessel-vs-contour", "t<=5, x<10, y<12".into(), worst, 1e-12).timed(start));

    for part in [IbpPart::First, IbpPart::Second] {
        let name = if part == IbpPart::First { "ibp-part-i" } else { "ibp-part-ii" };
        out.push(exact_family(name, instances, &mut rng, |rng| {
            let n = rng.random_range(1..=3);
            let v = random_rates(rng, n);
            let fs: Vec<_> = (0..n).map(|_| random_seq(rng, part == IbpPart::First)).collect();
            let gs: Vec<_> = (0..n).map(|_| random_seq(rng, false)).collect();
            let (l, r) = ibp_sides(part, &fs, &gs, &v)?;
            Ok((format!("n={n} v=({})", show(&v)), l - r))
        })?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Suites

pub const SUITES: &[&str] = &["exact", "oracles", "kernels", "theorems", "dynamics", "fast", "all"];

/// Runs a named suite. `fast` is the exact and oracle suites plus kernel
/// checks; `all` adds the Monte Carlo suites.
pub fn run_suite(name: &str, v: &RateVector, params: &StatParams, seed: u64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let want = |s: &str| name == s || name == "all" || (name == "fast" && matches!(s, "exact" | "oracles" | "kernels"));
    if !SUITES.contains(&name) {
        return Err(Error::Parse(format!("unknown suite '{name}'; expected one of {}", SUITES.join(", "))));
    }
    if want("exact") {
        out.extend(exact_suite(100, seed)?);
    }
    if want("oracles") {
        out.extend(check_oracles(100, seed)?);
    }
    if want("kernels") {
        if v.n() <= 2 && v.is_distinct() {
            out.extend(check_kernel_consistency(v)?);
        }
        if v.n() == 1 {
            out.extend(check_one_particle(v.get(1))?);
        }
    }
    if want("theorems") {
        out.extend(check_theorem1(v, params, seed)?);
        out.extend(check_theorem2(v, params, seed)?);
    }
    if want("dynamics") {
        out.push(check_reversibility(v, 0.5, params, seed)?);
        out.push(check_row_marginal(v, 0.5, params, seed)?);
        if v.is_distinct() {
            let z: Vec<i64> = (0..v.n() as i64).collect();
            out.push(check_gt_bottom_row(v, &z, 1.0, params, seed)?);
        }
    }
    Ok(out)
}

/// Groups reports by name, keeping the order of first appearance.
pub fn by_name(reports: &[CheckReport]) -> HashMap<&str, Vec<&CheckReport>> {
    let mut m: HashMap<&str, Vec<&CheckReport>> = HashMap::new();
    for r in reports {
        m.entry(r.name.as_str()).or_default().push(r);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_extremes() {
        let p: BTreeMap<i64, f64> = [(0, 0.5), (1, 0.5)].into();
        let r: BTreeMap<i64, f64> = [(2, 1.0)].into();
        assert_eq!(tv_distance(&p, &p), 0.0);
        assert!((tv_distance(&p, &r) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi_square_calibration() {
        let mut rng = RngContract::new(9, 0).rng();
        let law: BTreeMap<i64, f64> = (0..10).map(|k| (k, 0.1)).collect();
        let mut ps: Vec<f64> = (0..100)
            .map(|_| {
                let s: Vec<i64> = (0..10_000).map(|_| rng.random_range(0..10)).collect();
                chi_square(&s, &law, 5.0).p_value
            })
            .collect();
        ps.sort_by(f64::total_cmp);
        let median = 0.5 * (ps[49] + ps[50]);
        assert!((0.2..=0.8).contains(&median), "median {median}");
        let a: Vec<i64> = (0..5000).map(|_| rng.random_range(0..10)).collect();
        let b: Vec<i64> = (0..5000).map(|_| rng.random_range(0..10)).collect();
        assert!(chi_square_two_sample(&a, &b, 5.0).p_value > 1e-4);
        let c: Vec<i64> = (0..5000).map(|_| rng.random_range(0..9)).collect();
        assert!(chi_square_two_sample(&a, &c, 5.0).p_value < 1e-6);
    }

    #[test]
    fn push_identity_float_and_errors() {
        let v = RateVector::parse("0.3,0.5,0.7").unwrap();
        assert!(check_push_identity(0.7, &[0, 1, 2], &[1, 1, 3], 0, &v).unwrap().pass);
        assert!(matches!(check_push_identity(0.7, &[0, 1, 2], &[1, 2, 3], 0, &v), Err(Error::NotApplicable(_))));
        let r = check_push_identity(0.0, &[1, 1, 3], &[1, 1, 3], 0, &v).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn harmonic_small_cases() {
        let v = vec![q(1, 3), q(1, 2)];
        assert!(check_harmonic(Harmonic::A, &[0, 2], &v).unwrap().pass);
        assert!(check_harmonic(Harmonic::A, &[1, 1], &v).unwrap().pass);
        assert!(check_harmonic(Harmonic::C, &[-2, 0], &v).unwrap().pass);
        let one = vec![q(2, 5)];
        assert!(check_harmonic(Harmonic::A, &[3], &one).unwrap().pass);
    }

    #[test]
    fn kelly_wall_case_and_transpose() {
        let v = vec![q(2, 5)];
        let x = TriangularField::from_values(1, vec![0]).unwrap();
        assert!(check_kelly(&x, &v).pass);
        let v = vec![q(1, 3), q(1, 2), q(3, 4)];
        let x = TriangularField::from_values(3, vec![4, 4, 2, 4, 1, 1]).unwrap();
        assert!(transpose_symmetry_residual(&x, &v).is_zero());
    }

    #[test]
    fn ibp_one_dimensional() {
        let v = vec![q(1, 2)];
        let f = LatticeSeq::new(-1, vec![q(0, 1), q(1, 1), q(2, 1), q(-1, 1)]);
        let g = LatticeSeq::new(-1, vec![q(5, 1), q(1, 1), q(1, 3), q(2, 1), q(1, 1)]);
        let (l, r) = ibp_sides(IbpPart::First, &[f.clone()], &[g.clone()], &v).unwrap();
        assert_eq!(l, r);
        let bad = LatticeSeq::new(-1, vec![q(1, 1), q(1, 1)]);
        assert!(ibp_sides(IbpPart::First, &[bad.clone()], &[g.clone()], &v).is_err());
        let (l, r) = ibp_sides(IbpPart::Second, &[bad], &[g], &v).unwrap();
        assert_eq!(l, r);
    }

    #[test]
    fn exact_suite_small() {
        for r in exact_suite(10, 3).unwrap() {
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn unknown_suite() {
        let v = RateVector::parse("0.5").unwrap();
        assert!(matches!(run_suite("nope", &v, &StatParams::default(), 1), Err(Error::Parse(_))));
    }
}
