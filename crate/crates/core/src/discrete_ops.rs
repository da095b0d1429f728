//! Difference and summation operators on integer-indexed sequences.
//!
//! `D^(a) f(u) = f(u) - a f(u-1)`, `J^(a) f(u) = sum_{j>=u} a^{u-j} f(j)`,
//! `I^(a) f(u) = sum_{j=0}^{u} a^{u-j} f(j)` (zero for `u < 0`).
//!
//! A [`LatticeSeq`] is a finite window of values plus exponential tails on
//! either side, which every operator maps to the same form in closed form.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ExpTerm<S> {
    pub coef: S,
    pub base: S,
}

impl<S: Scalar> ExpTerm<S> {
    pub fn new(coef: S, base: S) -> Self {
        Self { coef, base }
    }

    pub fn eval(&self, u: i64) -> S {
        self.coef.clone() * self.base.ipow(u)
    }
}

/// Window `[lo, lo+len)` of explicit values; `left` applies below it and
/// `right` above it, each a sum of `c w^u` terms.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSeq<S> {
    lo: i64,
    values: Vec<S>,
    left: Vec<ExpTerm<S>>,
    right: Vec<ExpTerm<S>>,
}

fn merge_terms<S: Scalar>(terms: Vec<ExpTerm<S>>) -> Vec<ExpTerm<S>> {
    let mut out: Vec<ExpTerm<S>> = Vec::new();
    for t in terms {
        match out.iter_mut().find(|o| o.base == t.base) {
            Some(o) => o.coef = o.coef.clone() + t.coef,
            None => out.push(t),
        }
    }
    out.retain(|t| !t.coef.is_zero());
    out
}

impl<S: Scalar> LatticeSeq<S> {
    pub fn new(lo: i64, values: Vec<S>) -> Self {
        Self { lo, values, left: Vec::new(), right: Vec::new() }
    }

    pub fn zero() -> Self {
        Self::new(0, Vec::new())
    }

    pub fn with_left(mut self, terms: Vec<ExpTerm<S>>) -> Self {
        self.left = merge_terms(terms);
        self
    }

    pub fn with_right(mut self, terms: Vec<ExpTerm<S>>) -> Self {
        self.right = merge_terms(terms);
        self
    }

    /// `1_{u = k}`.
    pub fn indicator(k: i64) -> Self {
        Self::new(k, vec![S::one()])
    }

    /// `1_{u >= 0}`.
    pub fn step() -> Self {
        Self::new(0, Vec::new()).with_right(vec![ExpTerm::new(S::one(), S::one())])
    }

    /// Two-sided sum of exponentials `sum c w^u` on all of Z.
    pub fn exponentials(terms: Vec<ExpTerm<S>>) -> Self {
        Self::new(0, Vec::new()).with_left(terms.clone()).with_right(terms)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Last window index (`lo - 1` for an empty window).
    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn window(&self) -> &[S] {
        &self.values
    }

    pub fn left_tail(&self) -> &[ExpTerm<S>] {
        &self.left
    }

    pub fn right_tail(&self) -> &[ExpTerm<S>] {
        &self.right
    }

    pub fn eval(&self, u: i64) -> S {
        if u < self.lo {
            self.left.iter().fold(S::zero(), |acc, t| acc + t.eval(u))
        } else if u > self.hi() {
            self.right.iter().fold(S::zero(), |acc, t| acc + t.eval(u))
        } else {
            self.values[(u - self.lo) as usize].clone()
        }
    }

    /// Same function with the explicit window widened to cover `[lo, hi]`.
    pub fn widen(&self, lo: i64, hi: i64) -> Self {
        let lo2 = lo.min(self.lo);
        let hi2 = hi.max(self.hi());
        let values = (lo2..=hi2).map(|u| self.eval(u)).collect();
        Self { lo: lo2, values, left: self.left.clone(), right: self.right.clone() }
    }

    pub fn materialize(&self, lo: i64, hi: i64) -> Vec<S> {
        (lo..=hi).map(|u| self.eval(u)).collect()
    }

    pub fn scale(&self, c: &S) -> Self {
        let m = |t: &ExpTerm<S>| ExpTerm::new(t.coef.clone() * c.clone(), t.base.clone());
        Self {
            lo: self.lo,
            values: self.values.iter().map(|x| x.clone() * c.clone()).collect(),
            left: self.left.iter().map(m).collect(),
            right: self.right.iter().map(m).collect(),
        }
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Self {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let values = (lo..=hi).map(|u| self.eval(u) + other.eval(u)).collect();
        let mut left = self.left.clone();
        left.extend(other.left.iter().cloned());
        let mut right = self.right.clone();
        right.extend(other.right.iter().cloned());
        Self { lo, values, left: merge_terms(left), right: merge_terms(right) }
    }

    /// `u -> f(u - k)`.
    pub fn shift(&self, k: i64) -> Self {
        let m = |t: &ExpTerm<S>| ExpTerm::new(t.coef.clone() * t.base.ipow(-k), t.base.clone());
        Self {
            lo: self.lo + k,
            values: self.values.clone(),
            left: self.left.iter().map(m).collect(),
            right: self.right.iter().map(m).collect(),
        }
    }
}

/// `D^(a) f(u) = f(u) - a f(u-1)`.
///
/// The window becomes `[lo, hi+1]`; each tail term `c w^u` becomes `c(1 - a/w) w^u`.
pub fn apply_d<S: Scalar>(a: &S, f: &LatticeSeq<S>) -> LatticeSeq<S> {
    let lo = f.lo;
    let hi = f.hi() + 1;
    let values = (lo..=hi).map(|u| f.eval(u) - a.clone() * f.eval(u - 1)).collect();
    let m = |t: &ExpTerm<S>| {
        ExpTerm::new(t.coef.clone() * (S::one() - a.clone() / t.base.clone()), t.base.clone())
    };
    LatticeSeq {
        lo,
        values,
        left: merge_terms(f.left.iter().map(m).collect()),
        right: merge_terms(f.right.iter().map(m).collect()),
    }
}

/// `J^(a) f(u) = sum_{j >= u} a^{u-j} f(j)` in closed form.
///
/// Every right-tail base must satisfy `|w/a| < 1`, otherwise the sum diverges.
pub fn apply_j<S: Scalar>(a: &S, f: &LatticeSeq<S>) -> Result<LatticeSeq<S>> {
    for t in &f.right {
        let r = (t.base.clone() / a.clone()).abs();
        if r >= S::one() {
            return Err(Error::DivergentTail(r.to_f64_lossy()));
        }
    }
    let right: Vec<ExpTerm<S>> = f
        .right
        .iter()
        .map(|t| {
            let r = t.base.clone() / a.clone();
            ExpTerm::new(t.coef.clone() / (S::one() - r), t.base.clone())
        })
        .collect();
    let hi = f.hi();
    let tail_at = |u: i64| right.iter().fold(S::zero(), |acc, t| acc + t.eval(u));
    let len = f.values.len();
    let mut values = vec![S::zero(); len];
    let mut next = tail_at(hi + 1);
    for k in (0..len).rev() {
        let v = f.values[k].clone() + next / a.clone();
        values[k] = v.clone();
        next = v;
    }
    // `next` now holds Jf(lo)
    let mut left = Vec::with_capacity(f.left.len() + 1);
    let mut base_a_coef = next * a.ipow(-f.lo);
    for t in &f.left {
        if t.base == *a {
            return Err(Error::ResonantTail);
        }
        let r = t.base.clone() / a.clone();
        let c = t.coef.clone() / (S::one() - r.clone());
        base_a_coef = base_a_coef - c.clone() * r.ipow(f.lo);
        left.push(ExpTerm::new(c, t.base.clone()));
    }
    left.push(ExpTerm::new(base_a_coef, a.clone()));
    Ok(LatticeSeq { lo: f.lo, values, left: merge_terms(left), right: merge_terms(right) })
}

/// `J^(a)` by direct summation of `terms` values starting at `u`.
pub fn j_truncated<S: Scalar>(a: &S, f: &LatticeSeq<S>, u: i64, terms: usize) -> S {
    let mut acc = S::zero();
    for k in 0..terms as i64 {
        acc = acc + a.ipow(-k) * f.eval(u + k);
    }
    acc
}

/// `I^(a) f(u) = sum_{j=0}^{u} a^{u-j} f(j)`, zero for `u < 0`.
pub fn apply_i<S: Scalar>(a: &S, f: &LatticeSeq<S>) -> Result<LatticeSeq<S>> {
    if f.left.iter().any(|t| !t.coef.is_zero()) {
        return Err(Error::NegativeSupport);
    }
    let g = f.widen(f.lo.min(0), f.hi().max(0));
    for u in g.lo..0 {
        if !g.eval(u).is_zero() {
            return Err(Error::NegativeSupport);
        }
    }
    let hi = g.hi();
    let mut values = Vec::with_capacity((hi + 1) as usize);
    let mut prev = S::zero();
    for u in 0..=hi {
        let v = a.clone() * prev + g.eval(u);
        values.push(v.clone());
        prev = v;
    }
    let mut base_a_coef = prev * a.ipow(-hi);
    let mut right = Vec::with_capacity(g.right.len() + 1);
    for t in &g.right {
        if t.base == *a {
            return Err(Error::ResonantTail);
        }
        let r = t.base.clone() / a.clone();
        base_a_coef = base_a_coef + t.coef.clone() * r.ipow(hi + 1) / (S::one() - r);
        right.push(ExpTerm::new(
            -(t.coef.clone() * t.base.clone()) / (a.clone() - t.base.clone()),
            t.base.clone(),
        ));
    }
    right.push(ExpTerm::new(base_a_coef, a.clone()));
    Ok(LatticeSeq { lo: 0, values, left: Vec::new(), right: merge_terms(right) })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op<S> {
    D(S),
    J(S),
    I(S),
}

/// Applies the operator product `ops[0] ops[1] ... ops[k-1]` to `f`
/// (so the last operator acts first). An empty list is the identity.
pub fn concat<S: Scalar>(ops: &[Op<S>], f: &LatticeSeq<S>) -> Result<LatticeSeq<S>> {
    let mut g = f.clone();
    for op in ops.iter().rev() {
        g = match op {
            Op::D(a) => apply_d(a, &g),
            Op::J(a) => apply_j(a, &g)?,
            Op::I(a) => apply_i(a, &g)?,
        };
    }
    Ok(g)
}

/// `D^(b_1 ... b_k)`.
pub fn d_chain<S: Scalar>(b: &[S]) -> Vec<Op<S>> {
    b.iter().cloned().map(Op::D).collect()
}

/// `J^(a_1 ... a_k)`.
pub fn j_chain<S: Scalar>(a: &[S]) -> Vec<Op<S>> {
    a.iter().cloned().map(Op::J).collect()
}

/// `I^(a_1 ... a_k)`.
pub fn i_chain<S: Scalar>(a: &[S]) -> Vec<Op<S>> {
    a.iter().cloned().map(Op::I).collect()
}

/// Elementary symmetric polynomials `e_0, ..., e_k` of `b`.
pub fn elementary<S: Scalar>(b: &[S]) -> Vec<S> {
    let mut e = vec![S::one()];
    for x in b {
        e.push(S::zero());
        for k in (1..e.len()).rev() {
            e[k] = e[k].clone() + x.clone() * e[k - 1].clone();
        }
    }
    e
}

/// Complete homogeneous symmetric polynomials `h_0, ..., h_m` of `b`.
pub fn complete<S: Scalar>(b: &[S], m: usize) -> Vec<S> {
    let mut h = vec![S::zero(); m + 1];
    h[0] = S::one();
    for x in b {
        for k in 1..=m {
            h[k] = h[k].clone() + x.clone() * h[k - 1].clone();
        }
    }
    h
}

/// Mixed operators applied to `g`:
/// `D^(1/p_(i+1) ... 1/p_j) g` for `j > i`, `I^(1/p_(j+1) ... 1/p_i) g` for `j < i`,
/// and `g` itself on the diagonal. `pinv[k-1] = 1/p_k`; indices are 1-based.
pub fn mixed_entry<S: Scalar>(pinv: &[S], i: usize, j: usize, g: &LatticeSeq<S>) -> Result<LatticeSeq<S>> {
    use std::cmp::Ordering::*;
    match j.cmp(&i) {
        Greater => concat(&d_chain(&pinv[i..j]), g),
        Less => concat(&i_chain(&pinv[j..i]), g),
        Equal => Ok(g.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    #[test]
    fn d_on_indicator() {
        let v = q(2, 5);
        let f = apply_d(&v, &LatticeSeq::indicator(0));
        assert_eq!(f.eval(0), q(1, 1));
        assert_eq!(f.eval(1), -v.clone());
        assert_eq!(f.eval(2), q(0, 1));
        assert_eq!(f.eval(-1), q(0, 1));
    }

    #[test]
    fn d_on_phi_reduces_to_single_exponential() {
        // phi(u) = v^{-(u+1)} - v^{u+1}; D^(1/v) phi(x) = v^{x-1}(1 - v^2)
        let v = q(1, 3);
        let phi = LatticeSeq::exponentials(vec![
            ExpTerm::new(v.ipow(-1), v.ipow(-1)),
            ExpTerm::new(-v.clone(), v.clone()),
        ]);
        let g = apply_d(&v.ipow(-1), &phi);
        for x in -4..6 {
            assert_eq!(g.eval(x), v.ipow(x - 1) * (q(1, 1) - v.ipow(2)), "x={x}");
        }
    }

    #[test]
    fn d_eigen_relation_on_tail() {
        let (a, w) = (q(1, 2), q(1, 3));
        let f = LatticeSeq::new(0, vec![q(5, 1)]).with_right(vec![ExpTerm::new(q(1, 1), w.clone())]);
        let g = apply_d(&a, &f);
        assert_eq!(g.right_tail(), &[ExpTerm::new(q(1, 1) - a.clone() / w.clone(), w.clone())]);
        for u in -2..8 {
            assert_eq!(g.eval(u), f.eval(u) - a.clone() * f.eval(u - 1));
        }
    }

    #[test]
    fn j_of_indicator() {
        let v = q(1, 2);
        let g = apply_j(&v, &LatticeSeq::indicator(0)).unwrap();
        assert_eq!(g.eval(-2), v.ipow(-2));
        assert_eq!(g.eval(0), q(1, 1));
        assert_eq!(g.eval(1), q(0, 1));
        for u in -6..3 {
            assert_eq!(g.eval(u), j_truncated(&v, &LatticeSeq::indicator(0), u, 20));
        }
    }

    #[test]
    fn j_of_geometric_tail() {
        let (v, w) = (q(1, 2), q(1, 5));
        let f = LatticeSeq::new(0, vec![]).with_right(vec![ExpTerm::new(q(1, 1), w.clone())]);
        let g = apply_j(&v, &f).unwrap();
        for u in 1..5 {
            assert_eq!(g.eval(u), w.ipow(u) / (q(1, 1) - w.clone() / v.clone()));
        }
        let bad = LatticeSeq::new(0, vec![]).with_right(vec![ExpTerm::new(q(1, 1), q(3, 4))]);
        assert!(matches!(apply_j(&v, &bad), Err(Error::DivergentTail(_))));
    }

    #[test]
    fn j_left_tail_matches_direct_sum() {
        let a = q(1, 2);
        let f = LatticeSeq::new(-1, vec![q(2, 1), q(-1, 1), q(3, 7)])
            .with_left(vec![ExpTerm::new(q(1, 1), q(3, 1))])
            .with_right(vec![ExpTerm::new(q(2, 1), q(1, 4))]);
        let g = apply_j(&a, &f).unwrap();
        // exact tail sum past the window plus a long direct sum from u
        for u in -6..6 {
            let cut = 60;
            let direct = j_truncated(&a, &f, u, (cut - u) as usize);
            let rest = j_truncated(&a, &f, cut, 1) * q(0, 1)
                + f.right_tail()[0].coef.clone() * f.right_tail()[0].base.ipow(cut)
                    * a.ipow(u - cut)
                    / (q(1, 1) - f.right_tail()[0].base.clone() / a.clone());
            assert_eq!(g.eval(u), direct + rest, "u={u}");
        }
    }

    #[test]
    fn dj_translation_invariance() {
        // D_w^(1/r) J_u^(r) f(w - u) = f(w - u) for finite-support f
        let r = q(2, 7);
        let f = LatticeSeq::new(-2, vec![q(1, 1), q(3, 1), q(-2, 5), q(0, 1), q(4, 1)]);
        for u in -4..4 {
            // h(w) = J_u f(w - u) = sum_{k>=u} r^{u-k} f(w-k)
            let h = |w: i64| -> Rational {
                let mut acc = q(0, 1);
                for k in u..u + 40 {
                    acc = acc + r.ipow(u - k) * f.eval(w - k);
                }
                acc
            };
            for w in -6..8 {
                let lhs = h(w) - r.ipow(-1) * h(w - 1);
                assert_eq!(lhs, f.eval(w - u), "u={u} w={w}");
            }
        }
    }

    #[test]
    fn i_examples() {
        let v = q(1, 3);
        let g = apply_i(&v, &LatticeSeq::step()).unwrap();
        assert_eq!(g.eval(2), q(1, 1) + v.clone() + v.ipow(2));
        assert_eq!(g.eval(-1), q(0, 1));
        for u in 0..12 {
            let direct = (0..=u).fold(q(0, 1), |acc, j| acc + v.ipow(u - j));
            assert_eq!(g.eval(u), direct);
        }
        let neg = LatticeSeq::new(-1, vec![q(1, 1)]);
        assert!(matches!(apply_i(&v, &neg), Err(Error::NegativeSupport)));
        let res = LatticeSeq::new(0, vec![]).with_right(vec![ExpTerm::new(q(1, 1), v.clone())]);
        assert!(matches!(apply_i(&v, &res), Err(Error::ResonantTail)));
    }

    #[test]
    fn j_of_reflected_equals_i() {
        // (J^(p) g)(z - .)(u) = (I^(1/p) g)(z - u) for g supported on [0, inf)
        let p = q(3, 5);
        let g = LatticeSeq::new(0, vec![q(1, 1), q(2, 1), q(-1, 3), q(5, 2)]);
        let ig = apply_i(&p.ipow(-1), &g).unwrap();
        let z = 3;
        for u in -4..6 {
            let mut acc = q(0, 1);
            for k in u..u + 30 {
                acc = acc + p.ipow(u - k) * g.eval(z - k);
            }
            assert_eq!(acc, ig.eval(z - u), "u={u}");
        }
    }

    #[test]
    fn concat_rules() {
        let f = LatticeSeq::new(-1, vec![q(1, 1), q(2, 1), q(5, 1)]);
        assert_eq!(concat::<Rational>(&[], &f).unwrap(), f);
        let ab = concat(&[Op::D(q(1, 2)), Op::D(q(3, 1))], &f).unwrap();
        let ba = concat(&[Op::D(q(3, 1)), Op::D(q(1, 2))], &f).unwrap();
        for u in -5..6 {
            assert_eq!(ab.eval(u), ba.eval(u));
        }
    }

    #[test]
    fn mixed_table_cases() {
        let pinv = [q(2, 1), q(3, 1), q(5, 1)];
        let g = LatticeSeq::<Rational>::step();
        let above = mixed_entry(&pinv, 1, 3, &g).unwrap();
        let direct = concat(&[Op::D(q(3, 1)), Op::D(q(5, 1))], &g).unwrap();
        let below = mixed_entry(&pinv, 3, 1, &g).unwrap();
        let direct_i = concat(&[Op::I(q(3, 1)), Op::I(q(5, 1))], &g).unwrap();
        for u in -3..7 {
            assert_eq!(above.eval(u), direct.eval(u));
            assert_eq!(below.eval(u), direct_i.eval(u));
            assert_eq!(mixed_entry(&pinv, 2, 2, &g).unwrap().eval(u), g.eval(u));
        }
    }

    #[test]
    fn symmetric_polynomials() {
        let b = [q(1, 2), q(1, 3)];
        let e = elementary(&b);
        assert_eq!(e, vec![q(1, 1), q(5, 6), q(1, 6)]);
        let h = complete(&b, 2);
        assert_eq!(h[2], q(1, 4) + q(1, 6) + q(1, 9));
    }
}
