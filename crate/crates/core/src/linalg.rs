//! Small dense determinants: generic elimination and a log-scaled float LU.

use crate::scalar::Scalar;

/// Determinant by Gaussian elimination.
///
/// Exact scalars pivot on the first nonzero entry; floats on the largest.
pub fn det<S: Scalar>(mut a: Vec<Vec<S>>) -> S {
    let n = a.len();
    if n == 0 {
        return S::one();
    }
    let mut acc = S::one();
    for col in 0..n {
        let pivot = if S::EXACT {
            (col..n).find(|&r| !a[r][col].is_zero())
        } else {
            let mut best: Option<usize> = None;
            for r in col..n {
                if a[r][col].is_zero() {
                    continue;
                }
                if best.is_none_or(|b| a[r][col].abs() > a[b][col].abs()) {
                    best = Some(r);
                }
            }
            best
        };
        let Some(p) = pivot else {
            return S::zero();
        };
        if p != col {
            a.swap(p, col);
            acc = -acc;
        }
        let pv = a[col][col].clone();
        acc = acc * pv.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / pv.clone();
            for c in col + 1..n {
                let t = factor.clone() * a[col][c].clone();
                a[r][c] = a[r][c].clone() - t;
            }
        }
    }
    acc
}

/// Signed log-determinant of a matrix whose entries are given as
/// `(sign, ln|entry|)` pairs, so that entries far outside the f64 range are fine.
///
/// Each row is rescaled by its largest magnitude before a partial-pivoting LU.
/// Returns `(sign, ln|det|)` with sign 0 for a singular matrix.
pub fn log_det_signed(entries: &[Vec<(f64, f64)>]) -> (f64, f64) {
    let n = entries.len();
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut log_scale = 0.0;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(n);
    for row in entries {
        let m = row
            .iter()
            .filter(|(s, _)| *s != 0.0)
            .map(|&(_, l)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return (0.0, f64::NEG_INFINITY);
        }
        log_scale += m;
        a.push(
            row.iter()
                .map(|&(s, l)| if s == 0.0 { 0.0 } else { s * (l - m).exp() })
                .collect(),
        );
    }
    let (s, l) = log_det_f64(a);
    (s, l + log_scale)
}

/// Signed log-determinant of a float matrix via partial-pivoting LU.
pub fn log_det_f64(mut a: Vec<Vec<f64>>) -> (f64, f64) {
    let n = a.len();
    let mut sign = 1.0;
    let mut logabs = 0.0;
    for col in 0..n {
        let mut p = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[p][col].abs() {
                p = r;
            }
        }
        if a[p][col] == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if p != col {
            a.swap(p, col);
            sign = -sign;
        }
        let pv = a[col][col];
        if pv < 0.0 {
            sign = -sign;
        }
        logabs += pv.abs().ln();
        for r in col + 1..n {
            let factor = a[r][col] / pv;
            if factor == 0.0 {
                continue;
            }
            for c in col + 1..n {
                a[r][c] -= factor * a[col][c];
            }
        }
    }
    (sign, logabs)
}

/// Plain float determinant (may overflow for extreme entries).
pub fn det_f64(a: Vec<Vec<f64>>) -> f64 {
    let (s, l) = log_det_f64(a);
    if s == 0.0 {
        0.0
    } else {
        s * l.exp()
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
    fn exact_and_float_agree_on_small_matrix() {
        let m = vec![
            vec![q(2, 1), q(1, 3), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(5, 2)],
            vec![q(1, 1), q(4, 1), q(-1, 1)],
        ];
        let d = det(m.clone());
        // 2*(0*-1 - 5/2*4) - 1/3*(0*-1 - 5/2*1) + 0 = -20 + 5/6
        assert_eq!(d, q(-115, 6));
        let mf: Vec<Vec<f64>> = m
            .iter()
            .map(|r| r.iter().map(|x| x.to_f64_lossy()).collect())
            .collect();
        assert!((det(mf.clone()) - (-115.0 / 6.0)).abs() < 1e-12);
        assert!((det_f64(mf) - (-115.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_zero() {
        let m = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        assert_eq!(det(m), q(0, 1));
        assert_eq!(log_det_f64(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).0, 0.0);
    }

    #[test]
    fn log_scaled_entries_survive_underflow() {
        // diag(1e-400, 1e-400) has det 1e-800
        let l = -400.0 * 10f64.ln();
        let m = vec![vec![(1.0, l), (0.0, 0.0)], vec![(0.0, 0.0), (-1.0, l)]];
        let (s, ld) = log_det_signed(&m);
        assert_eq!(s, -1.0);
        assert!((ld - 2.0 * l).abs() < 1e-9);
    }
}
