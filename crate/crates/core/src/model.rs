//! Domain types: rate vectors, chamber configurations, triangular fields,
//! Gelfand-Tsetlin patterns, geometric environments and the RNG contract.

use std::cmp::Ordering;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::scalar::{format_rational, parse_rational, rational_from_f64, Rational, Scalar};

// ---------------------------------------------------------------------------
// RateVector

/// Rates `v_1..v_n` in `(0,1)`, stored as floats and, when built from
/// literals, also as exact rationals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateRepr", into = "RateRepr")]
pub struct RateVector {
    v: Vec<f64>,
    exact: Option<Vec<Rational>>,
    distinct: bool,
}

#[derive(Serialize, Deserialize)]
struct RateRepr {
    n: usize,
    v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exact: Option<Vec<String>>,
}

impl TryFrom<RateRepr> for RateVector {
    type Error = Error;
    fn try_from(r: RateRepr) -> Result<Self> {
        let out = match r.exact {
            Some(ex) => {
                let q = ex.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
                RateVector::from_rationals(q)?
            }
            None => RateVector::new(r.v)?,
        };
        if out.n() != r.n {
            return Err(Error::Dimension { expected: r.n, got: out.n() });
        }
        Ok(out)
    }
}

impl From<RateVector> for RateRepr {
    fn from(r: RateVector) -> Self {
        RateRepr {
            n: r.n(),
            exact: r.exact.as_ref().map(|q| q.iter().map(format_rational).collect()),
            v: r.v,
        }
    }
}

fn check_unit_interval(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidRates("need at least one rate".into()));
    }
    for (i, &x) in v.iter().enumerate() {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::InvalidRates(format!("v_{} = {x} is not inside (0,1)", i + 1)));
        }
    }
    Ok(())
}

impl RateVector {
    /// Float-only rates.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        check_unit_interval(&v)?;
        let distinct = all_distinct(&v);
        Ok(Self { v, exact: None, distinct })
    }

    /// Exact rates; the float copy is the nearest double.
    pub fn from_rationals(q: Vec<Rational>) -> Result<Self> {
        let zero = Rational::from_integer(0.into());
        let one = Rational::from_integer(1.into());
        if q.is_empty() {
            return Err(Error::InvalidRates("need at least one rate".into()));
        }
        for (i, x) in q.iter().enumerate() {
            if *x <= zero || *x >= one {
                return Err(Error::InvalidRates(format!(
                    "v_{} = {} is not inside (0,1)",
                    i + 1,
                    format_rational(x)
                )));
            }
        }
        let v: Vec<f64> = q.iter().map(|x| x.to_f64_lossy()).collect();
        let distinct = all_distinct(&q);
        Ok(Self { v, exact: Some(q), distinct })
    }

    /// Comma separated literals such as `0.3,0.5` or `3/10,1/2`; always exact.
    pub fn parse(s: &str) -> Result<Self> {
        let q = s.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
        Self::from_rationals(q)
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    /// 1-based access, matching the indexing used in formulas.
    pub fn get(&self, i: usize) -> f64 {
        self.v[i - 1]
    }

    pub fn exact(&self) -> Option<&[Rational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn is_distinct(&self) -> bool {
        self.distinct
    }

    pub fn require_distinct(&self) -> Result<()> {
        if self.distinct {
            Ok(())
        } else {
            Err(Error::NonDistinctRates)
        }
    }

    /// Exact rates, or the exact binary values of the floats.
    pub fn exact_or_binary(&self) -> Vec<Rational> {
        match &self.exact {
            Some(q) => q.clone(),
            None => self.v.iter().map(|&x| rational_from_f64(x)).collect(),
        }
    }

    /// Rates in the requested arithmetic.
    pub fn scalars<S: Scalar>(&self) -> Vec<S> {
        if S::EXACT {
            self.exact_or_binary().iter().map(S::from_rational).collect()
        } else {
            self.v.iter().map(|&x| S::from_f64(x).unwrap()).collect()
        }
    }

    /// `(v_n, ..., v_1)`.
    pub fn reversed(&self) -> Self {
        let mut v = self.v.clone();
        v.reverse();
        let exact = self.exact.clone().map(|mut q| {
            q.reverse();
            q
        });
        Self { v, exact, distinct: self.distinct }
    }

    /// Drops the first rate: `(v_2, ..., v_n)`.
    pub fn tail(&self) -> Result<Self> {
        if self.n() < 2 {
            return Err(Error::InvalidRates("cannot drop the only rate".into()));
        }
        let v = self.v[1..].to_vec();
        let exact = self.exact.as_ref().map(|q| q[1..].to_vec());
        let distinct = match &exact {
            Some(q) => all_distinct(q),
            None => all_distinct(&v),
        };
        Ok(Self { v, exact, distinct })
    }

    /// First `k` rates.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n() {
            return Err(Error::Dimension { expected: self.n(), got: k });
        }
        let v = self.v[..k].to_vec();
        let exact = self.exact.as_ref().map(|q| q[..k].to_vec());
        let distinct = match &exact {
            Some(q) => all_distinct(q),
            None => all_distinct(&v),
        };
        Ok(Self { v, exact, distinct })
    }

    pub fn max_product(&self) -> f64 {
        let m = self.v.iter().cloned().fold(0.0, f64::max);
        m * m
    }
}

impl fmt::Display for RateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match &self.exact {
            Some(q) => q.iter().map(format_rational).collect(),
            None => self.v.iter().map(|x| x.to_string()).collect(),
        };
        write!(f, "({})", parts.join(","))
    }
}

fn all_distinct<T: PartialEq>(v: &[T]) -> bool {
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] == v[j] {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// ChamberConfig

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chamber {
    #[serde(rename = "W")]
    Full,
    #[serde(rename = "W>=0")]
    NonNeg,
    #[serde(rename = "W<=0")]
    NonPos,
}

impl Chamber {
    pub fn name(self) -> &'static str {
        match self {
            Chamber::Full => "W",
            Chamber::NonNeg => "W>=0",
            Chamber::NonPos => "W<=0",
        }
    }

    /// First violated chamber condition, if any (1-based indices).
    pub fn check(self, x: &[i64]) -> Option<Violation> {
        if x.is_empty() {
            return Some(Violation::new("empty configuration", vec![]));
        }
        for i in 1..x.len() {
            if x[i - 1] > x[i] {
                return Some(Violation::new("x_i <= x_(i+1) fails", vec![i, i + 1]));
            }
        }
        match self {
            Chamber::NonNeg if x[0] < 0 => Some(Violation::new("x_1 >= 0 fails", vec![1])),
            Chamber::NonPos if x[x.len() - 1] > 0 => {
                Some(Violation::new("x_n <= 0 fails", vec![x.len()]))
            }
            _ => None,
        }
    }

    pub fn contains(self, x: &[i64]) -> bool {
        self.check(x).is_none()
    }

    /// Points outside the chamber at unit l1-distance from it.
    pub fn on_boundary(self, x: &[i64]) -> bool {
        if self.contains(x) {
            return false;
        }
        let mut y = x.to_vec();
        for i in 0..y.len() {
            for d in [-1, 1] {
                y[i] += d;
                let hit = self.contains(&y);
                y[i] -= d;
                if hit {
                    return true;
                }
            }
        }
        false
    }
}

/// A weakly increasing integer configuration in one of the three chambers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ChamberRepr")]
pub struct ChamberConfig {
    x: Vec<i64>,
    chamber: Chamber,
}

#[derive(Deserialize)]
struct ChamberRepr {
    x: Vec<i64>,
    chamber: Chamber,
}

impl TryFrom<ChamberRepr> for ChamberConfig {
    type Error = Error;
    fn try_from(r: ChamberRepr) -> Result<Self> {
        ChamberConfig::new(r.x, r.chamber)
    }
}

impl ChamberConfig {
    pub fn new(x: Vec<i64>, chamber: Chamber) -> Result<Self> {
        match chamber.check(&x) {
            Some(v) => Err(Error::Invalid(v)),
            None => Ok(Self { x, chamber }),
        }
    }

    pub fn x(&self) -> &[i64] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn chamber(&self) -> Chamber {
        self.chamber
    }

    /// The constant vector `(eta, ..., eta)`.
    pub fn constant(n: usize, eta: i64, chamber: Chamber) -> Result<Self> {
        Self::new(vec![eta; n], chamber)
    }
}

// ---------------------------------------------------------------------------
// Triangular index set S = {(i,j) : i,j >= 1, i+j <= n+1}

/// Cells of the triangle in `(i,j)` lexicographic order.
pub fn tri_cells(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 1..=n {
        for j in 1..=n + 1 - i {
            out.push((i, j));
        }
    }
    out
}

/// Position of `(i,j)` in [`tri_cells`] order.
pub fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= 1 && j >= 1 && i + j <= n + 1, "cell ({i},{j}) outside S for n={n}");
    // rows 1..i-1 hold n, n-1, ..., n-i+2 cells
    (i - 1) * (n + 1) - (i - 1) * i / 2 + (j - 1)
}

/// A cell value or the infinite boundary sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ext {
    Finite(i64),
    Infinite,
}

impl Ext {
    pub fn gt(self, x: i64) -> bool {
        self > Ext::Finite(x)
    }
    pub fn ge(self, x: i64) -> bool {
        self >= Ext::Finite(x)
    }
}

impl PartialEq<i64> for Ext {
    fn eq(&self, other: &i64) -> bool {
        *self == Ext::Finite(*other)
    }
}

impl PartialOrd<i64> for Ext {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.cmp(&Ext::Finite(*other)))
    }
}

// ---------------------------------------------------------------------------
// TriangularField

/// Nonnegative values on S with `x_(i+1,j) <= x_ij` and `x_(i,j+1) <= x_ij`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TriangularField {
    n: usize,
    vals: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct CellRepr {
    i: usize,
    j: usize,
    value: i64,
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    n: usize,
    cells: Vec<CellRepr>,
}

fn cells_from_repr(r: FieldRepr) -> Result<(usize, Vec<i64>)> {
    let n = r.n;
    let mut vals = vec![None; n * (n + 1) / 2];
    for c in r.cells {
        if c.i == 0 || c.j == 0 || c.i + c.j > n + 1 {
            return Err(Error::Invalid(Violation::new("cell outside S", vec![c.i, c.j])));
        }
        vals[tri_index(n, c.i, c.j)] = Some(c.value);
    }
    let mut out = Vec::with_capacity(vals.len());
    for (k, v) in vals.into_iter().enumerate() {
        let (i, j) = tri_cells(n)[k];
        out.push(v.ok_or_else(|| Error::Invalid(Violation::new("missing cell", vec![i, j])))?);
    }
    Ok((n, out))
}

fn cells_to_repr(n: usize, vals: &[i64]) -> FieldRepr {
    FieldRepr {
        n,
        cells: tri_cells(n)
            .into_iter()
            .zip(vals)
            .map(|((i, j), &value)| CellRepr { i, j, value })
            .collect(),
    }
}

impl Serialize for TriangularField {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        cells_to_repr(self.n, &self.vals).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TriangularField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FieldRepr::deserialize(d)?;
        let (n, vals) = cells_from_repr(r).map_err(serde::de::Error::custom)?;
        TriangularField::from_values(n, vals).map_err(serde::de::Error::custom)
    }
}

impl TriangularField {
    /// Values in [`tri_cells`] order.
    pub fn from_values(n: usize, vals: Vec<i64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid(Violation::new("n must be at least 1", vec![])));
        }
        if vals.len() != n * (n + 1) / 2 {
            return Err(Error::Dimension { expected: n * (n + 1) / 2, got: vals.len() });
        }
        let f = Self { n, vals };
        match f.check() {
            Some(v) => Err(Error::Invalid(v)),
            None => Ok(f),
        }
    }

    /// Builds from a closure over 1-based cells.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> i64) -> Result<Self> {
        let vals = tri_cells(n).into_iter().map(|(i, j)| f(i, j)).collect();
        Self::from_values(n, vals)
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, vals: vec![0; n * (n + 1) / 2] }
    }

    pub(crate) fn from_values_unchecked(n: usize, vals: Vec<i64>) -> Self {
        Self { n, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[i64] {
        &self.vals
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.vals[tri_index(self.n, i, j)]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: i64) {
        let k = tri_index(self.n, i, j);
        self.vals[k] = v;
    }

    pub fn in_range(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i + j <= self.n + 1
    }

    /// Cell value with the conventions `x_(0,j) = x_(j,0) = +inf`.
    pub fn ext(&self, i: usize, j: usize) -> Ext {
        if i == 0 || j == 0 {
            Ext::Infinite
        } else {
            Ext::Finite(self.get(i, j))
        }
    }

    /// First violated invariant, scanning cells lexicographically.
    pub fn check(&self) -> Option<Violation> {
        for (i, j) in tri_cells(self.n) {
            let x = self.get(i, j);
            if x < 0 {
                return Some(Violation::new("x_ij >= 0 fails", vec![i, j]));
            }
            if self.in_range(i + 1, j) && self.get(i + 1, j) > x {
                return Some(Violation::new("x_(i+1,j) <= x_ij fails", vec![i + 1, j]));
            }
            if self.in_range(i, j + 1) && self.get(i, j + 1) > x {
                return Some(Violation::new("x_(i,j+1) <= x_ij fails", vec![i, j + 1]));
            }
        }
        None
    }

    /// The swap `x_ij -> x_ji`.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i)).expect("transpose preserves validity")
    }

    /// Row `i` read right to left: `(x_(i,n-i+1), ..., x_(i,1))`.
    pub fn row_reversed(&self, i: usize) -> Vec<i64> {
        (1..=self.n + 1 - i).rev().map(|j| self.get(i, j)).collect()
    }
}

// ---------------------------------------------------------------------------
// GTPattern

/// Interlacing array; `levels[j-1]` holds the `j` entries of level `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GtRepr")]
pub struct GTPattern {
    n: usize,
    levels: Vec<Vec<i64>>,
}

#[derive(Deserialize)]
struct GtRepr {
    n: usize,
    levels: Vec<Vec<i64>>,
}

impl TryFrom<GtRepr> for GTPattern {
    type Error = Error;
    fn try_from(r: GtRepr) -> Result<Self> {
        let p = GTPattern::new(r.levels)?;
        if p.n != r.n {
            return Err(Error::Dimension { expected: r.n, got: p.n });
        }
        Ok(p)
    }
}

/// First index pair where `x preceq y` (i.e. `y_1 <= x_1 <= y_2 <= ... <= x_n <= y_(n+1)`) fails.
pub fn interlace_violation(x: &[i64], y: &[i64]) -> Option<Violation> {
    if y.len() != x.len() + 1 {
        return Some(Violation::new("level sizes differ by more than one", vec![x.len(), y.len()]));
    }
    for i in 0..x.len() {
        if y[i] > x[i] {
            return Some(Violation::new("y_i <= x_i fails", vec![i + 1]));
        }
        if x[i] > y[i + 1] {
            return Some(Violation::new("x_i <= y_(i+1) fails", vec![i + 1]));
        }
    }
    None
}

pub fn interlaces(x: &[i64], y: &[i64]) -> bool {
    interlace_violation(x, y).is_none()
}

impl GTPattern {
    pub fn new(levels: Vec<Vec<i64>>) -> Result<Self> {
        let n = levels.len();
        if n == 0 {
            return Err(Error::Invalid(Violation::new("pattern needs a level", vec![])));
        }
        for (j, l) in levels.iter().enumerate() {
            if l.len() != j + 1 {
                return Err(Error::Invalid(Violation::new("level j must have j entries", vec![j + 1])));
            }
        }
        let p = Self { n, levels };
        match p.check() {
            Some(v) => Err(Error::Invalid(v)),
            None => Ok(p),
        }
    }

    pub(crate) fn from_levels_unchecked(levels: Vec<Vec<i64>>) -> Self {
        Self { n: levels.len(), levels }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> &[Vec<i64>] {
        &self.levels
    }

    /// `x^j_i`, 1-based.
    pub fn get(&self, j: usize, i: usize) -> i64 {
        self.levels[j - 1][i - 1]
    }

    pub fn bottom(&self) -> &[i64] {
        &self.levels[self.n - 1]
    }

    /// First interlacing failure as `[j, i]` (level, position).
    pub fn check(&self) -> Option<Violation> {
        for j in 1..self.n {
            if let Some(v) = interlace_violation(&self.levels[j - 1], &self.levels[j]) {
                let mut idx = vec![j];
                idx.extend(v.index);
                return Some(Violation::new(format!("interlacing between levels: {}", v.rule), idx));
            }
        }
        None
    }

    /// `w_v(x) = prod_i v_i^{|x^i| - |x^(i-1)|}`.
    pub fn weight<S: Scalar>(&self, v: &[S]) -> S {
        let mut acc = S::one();
        let mut prev = 0i64;
        for (j, l) in self.levels.iter().enumerate() {
            let s: i64 = l.iter().sum();
            acc = acc * v[j].ipow(s - prev);
            prev = s;
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// GeomEnvironment

/// Geometric weights `g_ij` on S; cell `(i,j)` has parameter `1 - v_i v_(n-j+1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeomEnvironment {
    pub n: usize,
    g: Vec<i64>,
    pub rates: RateVector,
}

impl GeomEnvironment {
    pub fn new(rates: RateVector, g: Vec<i64>) -> Result<Self> {
        let n = rates.n();
        if g.len() != n * (n + 1) / 2 {
            return Err(Error::Dimension { expected: n * (n + 1) / 2, got: g.len() });
        }
        if let Some(k) = g.iter().position(|&x| x < 0) {
            let (i, j) = tri_cells(n)[k];
            return Err(Error::Invalid(Violation::new("g_ij >= 0 fails", vec![i, j])));
        }
        Ok(Self { n, g, rates })
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.g[tri_index(self.n, i, j)]
    }

    pub fn values(&self) -> &[i64] {
        &self.g
    }

    /// The success probability `v_i v_(n-j+1)` ... i.e. `P(g = k) = (1-q) q^k` with this `q`.
    pub fn ratio(&self, i: usize, j: usize) -> f64 {
        self.rates.get(i) * self.rates.get(self.n - j + 1)
    }

    /// Last-passage field `G(k,l) = g_kl + max(G(k+1,l), G(k,l+1))`, `G = g` on the anti-diagonal.
    pub fn lpp_field(&self) -> TriangularField {
        let n = self.n;
        let mut f = TriangularField::from_values_unchecked(n, vec![0; n * (n + 1) / 2]);
        for s in (2..=n + 1).rev() {
            for i in 1..s {
                let j = s - i;
                let g = self.get(i, j);
                let below = if i + 1 + j <= n + 1 { f.get(i + 1, j) } else { 0 };
                let right = if i + j + 1 <= n + 1 { f.get(i, j + 1) } else { 0 };
                f.set(i, j, g + below.max(right));
            }
        }
        f
    }
}

// ---------------------------------------------------------------------------
// RngContract

/// `(seed, stream)` identifies one reproducible random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngContract {
    pub seed: u64,
    pub stream: u64,
}

impl RngContract {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        Self { seed: self.seed, stream }
    }
}

/// Validation entry point over the three state types.
pub enum StateRef<'a> {
    Chamber(&'a [i64], Chamber),
    Field(&'a TriangularField),
    Pattern(&'a GTPattern),
}

/// Returns the first violated invariant, or `None` when the state is valid.
pub fn validate(state: StateRef<'_>) -> Option<Violation> {
    match state {
        StateRef::Chamber(x, c) => c.check(x),
        StateRef::Field(f) => f.check(),
        StateRef::Pattern(p) => p.check(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chamber_validation_examples() {
        assert!(validate(StateRef::Chamber(&[0, 1, 3], Chamber::NonNeg)).is_none());
        let v = validate(StateRef::Chamber(&[2, 1], Chamber::Full)).unwrap();
        assert_eq!(v.index, vec![1, 2]);
        assert!(Chamber::NonNeg.check(&[-1, 0]).is_some());
        assert!(Chamber::NonPos.check(&[-1, 1]).is_some());
    }

    #[test]
    fn boundary_membership() {
        assert!(Chamber::Full.on_boundary(&[2, 1]));
        assert!(!Chamber::Full.on_boundary(&[3, 1]));
        assert!(!Chamber::Full.on_boundary(&[1, 1]));
        assert!(Chamber::NonPos.on_boundary(&[0, 1]));
        assert!(!Chamber::NonPos.on_boundary(&[0, 2]));
    }

    #[test]
    fn field_monotonicity_violation() {
        // n=2 cells (1,1),(1,2),(2,1)
        let err = TriangularField::from_values(2, vec![0, 1, 0]).unwrap_err();
        match err {
            Error::Invalid(v) => assert_eq!(v.index, vec![1, 2]),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn sentinel_exceeds_every_cell() {
        let f = TriangularField::from_values(2, vec![5, 3, 4]).unwrap();
        assert!(f.ext(0, 2) > f.ext(1, 1));
        assert!(f.ext(2, 0).gt(i64::MAX));
        assert_eq!(f.ext(2, 1), Ext::Finite(4));
    }

    #[test]
    fn tri_index_matches_enumeration() {
        for n in 1..6 {
            for (k, (i, j)) in tri_cells(n).into_iter().enumerate() {
                assert_eq!(tri_index(n, i, j), k);
            }
        }
    }

    #[test]
    fn hand_lpp_recursion() {
        let r = RateVector::new(vec![0.3, 0.5]).unwrap();
        // cells (1,1),(1,2),(2,1)
        let env = GeomEnvironment::new(r, vec![1, 2, 3]).unwrap();
        let g = env.lpp_field();
        assert_eq!(g.get(2, 1), 3);
        assert_eq!(g.get(1, 2), 2);
        assert_eq!(g.get(1, 1), 4);
    }

    #[test]
    fn json_round_trips() {
        let r = RateVector::parse("3/10,0.5").unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"n\":2"));
        let back: RateVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);

        let f = TriangularField::from_values(2, vec![5, 3, 4]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"cells\""));
        let back: TriangularField = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"n":2,"cells":[{"i":1,"j":1,"value":0},{"i":1,"j":2,"value":1},{"i":2,"j":1,"value":0}]}"#;
        assert!(serde_json::from_str::<TriangularField>(bad).is_err());

        let c = ChamberConfig::new(vec![0, 2], Chamber::NonNeg).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ChamberConfig>(&s).unwrap(), c);
        assert!(serde_json::from_str::<ChamberConfig>(r#"{"x":[2,1],"chamber":"W"}"#).is_err());

        let p = GTPattern::new(vec![vec![1], vec![0, 2]]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<GTPattern>(&s).unwrap(), p);
    }

    #[test]
    fn rates_reject_out_of_range_and_flag_repeats() {
        assert!(RateVector::new(vec![0.0]).is_err());
        assert!(RateVector::new(vec![1.0]).is_err());
        assert!(RateVector::parse("1/2,3/2").is_err());
        assert!(!RateVector::parse("0.4,2/5").unwrap().is_distinct());
        assert!(RateVector::new(vec![0.3, 0.5]).unwrap().is_distinct());
    }

    #[test]
    fn streams_are_reproducible() {
        use rand::RngCore;
        let a = RngContract::new(7, 3).rng().next_u64();
        let b = RngContract::new(7, 3).rng().next_u64();
        let c = RngContract::new(7, 4).rng().next_u64();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
