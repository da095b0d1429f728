//! Modified Bessel functions `I_k(z)` of integer order, `z >= 0`.

/// Values `I_0(z), ..., I_kmax(z)` held for repeated lookups at one argument.
///
/// Built once and then only read, so it can be shared across threads.
#[derive(Clone, Debug)]
pub struct BesselTable {
    z: f64,
    values: Vec<f64>,
}

impl BesselTable {
    pub fn new(z: f64, kmax: usize) -> Self {
        assert!(z >= 0.0 && z.is_finite(), "Bessel argument must be finite and nonnegative");
        let values = if z < 1.0 { series_all(z, kmax) } else { miller_all(z, kmax) };
        Self { z, values }
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn kmax(&self) -> usize {
        self.values.len() - 1
    }

    /// `I_k(z)`, with `I_{-k} = I_k`; orders past the table are computed on demand.
    pub fn get(&self, k: i64) -> f64 {
        let k = k.unsigned_abs() as usize;
        match self.values.get(k) {
            Some(v) => *v,
            None => bessel_i(k as i64, self.z),
        }
    }
}

/// `I_k(z)` for a single order.
pub fn bessel_i(k: i64, z: f64) -> f64 {
    let k = k.unsigned_abs() as usize;
    if z < 1.0 {
        series_all(z, k)[k]
    } else {
        miller_all(z, k)[k]
    }
}

/// Ascending series `sum_m (z/2)^{2m+k} / (m! (m+k)!)`.
fn series_all(z: f64, kmax: usize) -> Vec<f64> {
    let h = z / 2.0;
    let mut out = Vec::with_capacity(kmax + 1);
    let mut lead = 1.0; // (z/2)^k / k!
    for k in 0..=kmax {
        if k > 0 {
            lead *= h / k as f64;
        }
        if lead == 0.0 {
            out.push(0.0);
            continue;
        }
        let mut term = lead;
        let mut sum = term;
        let mut m = 1.0;
        loop {
            term *= h * h / (m * (m + k as f64));
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
            m += 1.0;
        }
        out.push(sum);
    }
    out
}

/// Downward recurrence `I_{k-1} = (2k/z) I_k + I_{k+1}` from far above `kmax`,
/// normalized with `I_0 + 2 sum_{k>=1} I_k = e^z`.
fn miller_all(z: f64, kmax: usize) -> Vec<f64> {
    let top = kmax.max(z.ceil() as usize);
    let start = top + 30 + (40.0 * top as f64).sqrt() as usize;
    let mut out = vec![0.0; kmax + 1];
    let mut next = 0.0; // I_{k+1}
    let mut cur = 1e-300; // I_k
    let mut norm = 0.0;
    // running scale; if values grow too large everything so far is divided down
    for k in (1..=start).rev() {
        let prev = (2.0 * k as f64 / z) * cur + next;
        next = cur;
        cur = prev;
        if k - 1 <= kmax {
            out[k - 1] = cur;
        }
        norm += if k - 1 == 0 { cur } else { 2.0 * cur };
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            for o in out.iter_mut() {
                *o *= s;
            }
        }
    }
    // norm = e^z / c, so I_k = out_k e^z / norm
    let factor = z.exp() / norm;
    if factor.is_finite() {
        out.iter().map(|&o| o * factor).collect()
    } else {
        let ln_scale = z - norm.ln();
        out.iter().map(|&o| if o == 0.0 { 0.0 } else { (o.ln() + ln_scale).exp() }).collect()
    }
}

/// `I_k(z)` by the trapezoid rule on `(1/pi) int_0^pi e^{z cos th} cos(k th) d th`,
/// doubling the node count until successive values agree to `tol` relative.
pub fn bessel_i_quadrature(k: i64, z: f64, tol: f64) -> f64 {
    let f = |th: f64| (z * th.cos()).exp() * (k as f64 * th).cos();
    let mut nodes = 16usize;
    let mut prev = f64::NAN;
    loop {
        // periodic integrand over the full circle: plain average of samples
        let h = 2.0 * std::f64::consts::PI / nodes as f64;
        let samples: Vec<f64> = (0..nodes).map(|m| f(m as f64 * h)).collect();
        let s = samples.iter().sum::<f64>() / nodes as f64;
        // rounding floor of the sum itself
        let floor = 8.0 * f64::EPSILON * samples.iter().map(|x| x.abs()).sum::<f64>() / nodes as f64;
        let d = (s - prev).abs();
        if d <= tol * s.abs().max(f64::MIN_POSITIVE) || d <= floor || nodes > 1 << 20 {
            return s;
        }
        prev = s;
        nodes *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // I_0(2), I_1(2), I_2(2)
        let t = BesselTable::new(2.0, 4);
        assert!((t.get(0) - 2.279_585_302_336_067).abs() < 1e-14);
        assert!((t.get(1) - 1.590_636_854_637_329).abs() < 1e-14);
        assert!((t.get(2) - 0.688_948_447_698_738_2).abs() < 1e-14);
        assert_eq!(t.get(-2), t.get(2));
        assert_eq!(bessel_i(0, 0.0), 1.0);
        assert_eq!(bessel_i(3, 0.0), 0.0);
    }

    #[test]
    fn series_and_miller_agree_near_switch() {
        for &z in &[0.6, 0.99, 1.0, 1.5] {
            let a = series_all(z, 30);
            let b = miller_all(z, 30);
            for k in 0..30 {
                assert!((a[k] - b[k]).abs() <= 1e-14 * a[k].abs().max(1e-300), "z={z} k={k}");
            }
        }
    }

    #[test]
    fn quadrature_oracle_agrees() {
        for &z in &[0.3, 2.0, 7.5, 20.0] {
            let t = BesselTable::new(z, 12);
            for k in 0..12 {
                let q = bessel_i_quadrature(k, z, 1e-15);
                assert!((t.get(k) - q).abs() <= 1e-12 * t.get(0), "z={z} k={k}");
            }
        }
    }

    #[test]
    fn large_orders_underflow_gracefully() {
        let t = BesselTable::new(2.0, 400);
        assert!(t.get(400) >= 0.0 && t.get(400) < 1e-300);
        assert!(t.get(50) > 0.0);
        let big = BesselTable::new(800.0, 5);
        assert!(big.get(0).is_infinite() || big.get(0) > 1e300);
    }
}
