//! Binary big-float evaluation of `r_t`, for the points where the `f64`
//! determinant cancels too much to certify its value.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use crate::error::{Error, Result};
use crate::kernels::{TransitionKernel, ENTRY_RTOL};

type F = FBig<HalfEven, 2>;

fn lift(x: f64, prec: usize) -> F {
    F::try_from(x).expect("finite input").with_precision(prec).value()
}

fn int(k: i64, prec: usize) -> F {
    F::from(k).with_precision(prec).value()
}

/// `ln |x|`, `-inf` for zero, without overflowing for any exponent.
pub(crate) fn ln_abs(x: &F) -> f64 {
    let repr = x.repr();
    let sig = repr.significand();
    if sig.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (_, mag) = sig.clone().into_parts();
    let bits = repr.digits() as isize;
    let drop = (bits - 60).max(0);
    let top: f64 = (mag >> drop as usize).to_f64().value();
    top.ln() + (drop + repr.exponent()) as f64 * std::f64::consts::LN_2
}

fn sign(x: &F) -> f64 {
    match x.repr().significand().signum().to_f64().value() {
        s if s > 0.0 => 1.0,
        s if s < 0.0 => -1.0,
        _ => 0.0,
    }
}

fn lse(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

/// `I_0(2t), ..., I_K(2t)` from two ascending series at the top and the
/// downward recurrence, which only adds positive terms.
struct Bessel {
    t: f64,
    prec: usize,
    values: Vec<F>,
}

impl Bessel {
    fn new(t: f64, prec: usize) -> Self {
        let mut b = Self { t, prec, values: Vec::new() };
        b.build(64);
        b
    }

    fn series(&self, k: usize) -> F {
        let p = self.prec;
        let t = lift(self.t, p);
        let t2 = &t * &t;
        let mut lead = int(1, p);
        for m in 1..=k {
            lead = lead * &t / int(m as i64, p);
        }
        let mut sum = lead.clone();
        let mut term = lead;
        let stop = ln_abs(&sum) - (p as f64 + 16.0) * std::f64::consts::LN_2;
        for m in 1.. {
            term = term * &t2 / int((m * (m + k)) as i64, p);
            sum += &term;
            if (m as f64) > self.t && ln_abs(&term) < stop {
                break;
            }
        }
        sum
    }

    fn build(&mut self, kmax: usize) {
        let p = self.prec;
        if self.t == 0.0 {
            self.values = (0..=kmax).map(|k| int((k == 0) as i64, p)).collect();
            return;
        }
        let mut next = self.series(kmax + 1);
        let mut cur = self.series(kmax);
        let t = lift(self.t, p);
        let mut out = vec![int(0, p); kmax + 1];
        for k in (1..=kmax).rev() {
            out[k] = cur.clone();
            let prev = int(k as i64, p) / &t * &cur + &next;
            next = cur;
            cur = prev;
        }
        out[0] = cur;
        self.values = out;
    }

    fn get(&mut self, k: i64) -> &F {
        let k = k.unsigned_abs() as usize;
        if k >= self.values.len() {
            self.build(2 * k);
        }
        &self.values[k]
    }

    fn len(&self) -> usize {
        self.values.len()
    }
}

/// An entry and the natural log of an absolute error bound for it.
struct Entry {
    value: F,
    ln_err: f64,
}

fn elementary_signed(inv: &[F], prec: usize) -> Vec<F> {
    let mut e = vec![int(1, prec)];
    for b in inv {
        e.push(int(0, prec));
        for k in (1..e.len()).rev() {
            let add = &e[k - 1] * b;
            e[k] += add;
        }
    }
    e.into_iter().enumerate().map(|(k, x)| if k % 2 == 0 { x } else { -x }).collect()
}

fn abs(x: &F) -> F {
    if sign(x) < 0.0 {
        -x.clone()
    } else {
        x.clone()
    }
}

/// Raises `h` (complete homogeneous polynomials in `inv[..l+1]`, one per
/// prefix) by one degree.
fn advance(h: &mut [F], inv: &[F], prec: usize) {
    let mut below = int(0, prec);
    for (hl, b) in h.iter_mut().zip(inv) {
        let v = &below + b * &*hl;
        *hl = v.clone();
        below = v;
    }
}

/// Same split as the `f64` entry: the telescoped shift series on
/// `I_{w-u}`, then the reflected J-sum.
fn entry(k: &TransitionKernel, bes: &mut Bessel, i: usize, j: usize, a: i64, b: i64, prec: usize) -> Result<Entry> {
    let inv: Vec<F> = k.rates().iter().map(|v| int(1, prec) / lift(*v, prec)).collect();
    let unit_ln = -(prec as f64) * std::f64::consts::LN_2;
    let d = b - a;
    let mut ops = bes.len() + 64;

    let mut trans = int(0, prec);
    let mut trans_mag = int(0, prec);
    let mut trans_tail = f64::NEG_INFINITY;
    if i <= j {
        for (p, c) in elementary_signed(&inv[i..j], prec).iter().enumerate() {
            let x = bes.get(d - p as i64).clone();
            trans += c * &x;
            trans_mag += abs(c) * &x;
            ops += 2;
        }
    } else {
        let mut h = vec![int(1, prec); i - j];
        let mut done = false;
        for m in 0..crate::kernels::J_TERMS_MAX {
            if m > 0 {
                advance(&mut h, &inv[j..i], prec);
            }
            trans += &h[i - j - 1] * bes.get(d - m as i64);
            ops += 2;
            if let Some(tail) = k.tail_ln(i - j, 0.0, m + 1, m as i64 + 1 - d) {
                if tail <= ln_abs(&trans) + unit_ln {
                    trans_tail = tail;
                    done = true;
                    break;
                }
            }
        }
        if !done {
            return Err(Error::TruncationFailure(ENTRY_RTOL));
        }
        trans_mag = trans.clone();
    }

    let ec = elementary_signed(&inv[..j], prec);
    let ln_e = k.ln_e_abs(j);
    let mut h = vec![int(1, prec); i];
    let mut refl = int(0, prec);
    let mut refl_mag = int(0, prec);
    for m in 0..crate::kernels::J_TERMS_MAX {
        if m > 0 {
            advance(&mut h, &inv[..i], prec);
        }
        let u = a + m as i64;
        let mut s = int(0, prec);
        let mut s_abs = int(0, prec);
        for (p, c) in ec.iter().enumerate() {
            let x = bes.get(u + b - p as i64 + 2).clone();
            s += c * &x;
            s_abs += abs(c) * &x;
        }
        refl += &h[i - 1] * &s;
        refl_mag += &h[i - 1] * &s_abs;
        ops += 2 * ec.len() + 2;
        let q0 = a + m as i64 + 1 + b + 2 - j as i64;
        if let Some(tail) = k.tail_ln(i, ln_e, m + 1, q0) {
            let target = ln_abs(&refl_mag).max(ln_abs(&trans_mag)) + unit_ln;
            if tail <= target || tail == f64::NEG_INFINITY {
                // rounding: every term and every Bessel value is off by a few units
                let ln_round = ln_abs(&(&trans_mag + &refl_mag)) + unit_ln + (ops as f64).ln();
                return Ok(Entry { value: trans - refl, ln_err: lse(ln_round, lse(trans_tail, tail)) });
            }
        }
    }
    Err(Error::TruncationFailure(ENTRY_RTOL))
}

fn det(mut a: Vec<Vec<F>>) -> F {
    let n = a.len();
    let prec = a[0][0].precision().max(64);
    let mut d = int(1, prec);
    for col in 0..n {
        let p = (col..n)
            .max_by(|&r, &s| ln_abs(&a[r][col]).partial_cmp(&ln_abs(&a[s][col])).unwrap())
            .unwrap();
        if ln_abs(&a[p][col]) == f64::NEG_INFINITY {
            return int(0, prec);
        }
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        let pv = a[col][col].clone();
        d *= &pv;
        for r in col + 1..n {
            let factor = &a[r][col] / &pv;
            for c in col + 1..n {
                let sub = &factor * &a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    d
}

/// The determinant of the `r_t(x, y)` matrix at `prec` bits as
/// `(sign, ln |det|, ln error bound)`.
pub(crate) fn det_precise(k: &TransitionKernel, x: &[i64], y: &[i64], prec: usize) -> Result<(f64, f64, f64)> {
    thread_local! {
        static TABLE: std::cell::RefCell<Option<Bessel>> = const { std::cell::RefCell::new(None) };
    }
    TABLE.with(|cell| {
        let mut slot = cell.borrow_mut();
        let reuse = matches!(&*slot, Some(b) if b.t == k.t() && b.prec == prec);
        if !reuse {
            *slot = Some(Bessel::new(k.t(), prec));
        }
        det_with(k, slot.as_mut().expect("table just set"), x, y, prec)
    })
}

fn det_with(k: &TransitionKernel, bes: &mut Bessel, x: &[i64], y: &[i64], prec: usize) -> Result<(f64, f64, f64)> {
    let n = x.len();
    let mut m = Vec::with_capacity(n);
    let mut ln_abs_m = vec![vec![0.0; n]; n];
    let mut ln_err = vec![vec![0.0; n]; n];
    for i in 1..=n {
        let mut row = Vec::with_capacity(n);
        for j in 1..=n {
            let e = entry(k, bes, i, j, x[i - 1] + i as i64 - 1, y[j - 1] + j as i64 - 1, prec)?;
            ln_abs_m[i - 1][j - 1] = ln_abs(&e.value);
            ln_err[i - 1][j - 1] = e.ln_err;
            row.push(e.value);
        }
        m.push(row);
    }
    let unit_ln = -(prec as f64) * std::f64::consts::LN_2;
    if n <= crate::kernels::LEIBNIZ_MAX {
        let perms = crate::kernels::permutations(n);
        let mut d = int(0, prec);
        for (p, s) in &perms {
            let mut prod = int(*s as i64, prec);
            for (i, &j) in p.iter().enumerate() {
                prod *= &m[i][j];
            }
            d += prod;
        }
        let err = crate::kernels::leibniz_error_ln(&ln_abs_m, &ln_err, &perms, &vec![0.0; perms.len()], unit_ln);
        return Ok((sign(&d), ln_abs(&d), err));
    }
    let d = det(m);
    let ln_gamma = (n as f64 * 2f64.powi(n as i32)).ln() + unit_ln;
    let err = crate::kernels::det_error_ln(&ln_abs_m, &ln_err, ln_gamma);
    Ok((sign(&d), ln_abs(&d), err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::BesselTable;

    #[test]
    fn bessel_matches_float_table() {
        let t = BesselTable::new(3.0, 40);
        let mut b = Bessel::new(1.5, 200);
        for k in 0..40 {
            let hp = b.get(k).to_f64().value();
            assert!((hp - t.get(k)).abs() <= 1e-14 * t.get(k), "k={k}");
        }
    }

    #[test]
    fn log_magnitude_of_huge_and_tiny() {
        let big = int(3, 300).powi(1000.into());
        assert!((ln_abs(&big) - 1000.0 * 3f64.ln()).abs() < 1e-9);
        let small = int(1, 300) / big;
        assert!((ln_abs(&small) + 1000.0 * 3f64.ln()).abs() < 1e-9);
        assert_eq!(ln_abs(&int(0, 64)), f64::NEG_INFINITY);
    }

    #[test]
    fn float_kernel_agrees_with_big_floats() {
        let v = [0.05, 0.06];
        let rv = crate::RateVector::new(v.to_vec()).unwrap();
        let k = TransitionKernel::new(1.0, &rv).unwrap();
        let x = [0i64, 1];
        for y in [[0i64, 0], [0, 3], [2, 9], [5, 5], [9, 40], [17, 30]] {
            let f = k.r(&x, &y).unwrap();
            let (s, l, err) = det_precise(&k, &x, &y, 512).unwrap();
            assert!(err < l - 100.0, "{y:?}");
            let ln_pref: f64 = (0..2).map(|i| (y[i] - x[i]) as f64 * v[i].ln() - (v[i] + 1.0 / v[i])).sum();
            let p = s * (l + ln_pref).exp();
            assert!((f - p).abs() <= 1e-10 * p.abs(), "{y:?}: {f:e} vs {p:e}");
        }
    }
}
