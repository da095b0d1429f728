//! Independent reference computations: transient laws of truncated generators
//! by uniformization, and laws of last-passage functionals by enumerating
//! environments.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::kernels::RateTable;
use crate::model::{tri_cells, GeomEnvironment, RateVector};

/// Generator restricted to a finite state list. Jumps leaving the list are
/// kept in the exit rate, so probability leaks out instead of piling up.
#[derive(Clone, Debug)]
pub struct FiniteGenerator<T> {
    states: Vec<T>,
    index: HashMap<T, usize>,
    jumps: Vec<Vec<(usize, f64)>>,
    exit: Vec<f64>,
}

impl<T: Clone + Eq + Hash> FiniteGenerator<T> {
    pub fn build(states: Vec<T>, mut rates: impl FnMut(&T) -> RateTable<T>) -> Self {
        let index: HashMap<T, usize> = states.iter().cloned().enumerate().map(|(k, s)| (s, k)).collect();
        let mut jumps = Vec::with_capacity(states.len());
        let mut exit = Vec::with_capacity(states.len());
        for s in &states {
            let t = rates(s);
            exit.push(t.total_exit());
            jumps.push(t.moves.iter().filter_map(|(z, r)| index.get(z).map(|&k| (k, *r))).collect());
        }
        Self { states, index, jumps, exit }
    }

    pub fn states(&self) -> &[T] {
        &self.states
    }

    pub fn index_of(&self, s: &T) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// `mu e^{tQ}` by uniformization; also returns the mass that left the list.
    pub fn transient(&self, mu: &[f64], t: f64) -> (Vec<f64>, f64) {
        let lam = self.exit.iter().cloned().fold(0.0, f64::max).max(1e-300);
        let lt = lam * t;
        let mut cur = mu.to_vec();
        let mut out = vec![0.0; mu.len()];
        // Poisson weights computed in log form to survive large lt
        let mut k = 0u64;
        let mut ln_w = -lt;
        let mut acc_w = 0.0;
        loop {
            let w = ln_w.exp();
            for (o, c) in out.iter_mut().zip(&cur) {
                *o += w * c;
            }
            acc_w += w;
            // past 2 lt the remaining Poisson tail is at most 2 w; 1 - acc_w
            // alone can stall above the threshold through rounding
            let tail_small = (k + 1) as f64 > 2.0 * lt && w < 1e-17;
            if (1.0 - acc_w < 1e-16 && k as f64 > lt) || tail_small || k > 10_000_000 {
                break;
            }
            let mut next = vec![0.0; cur.len()];
            for (s, &p) in cur.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                next[s] += p * (1.0 - self.exit[s] / lam);
                for &(z, r) in &self.jumps[s] {
                    next[z] += p * r / lam;
                }
            }
            cur = next;
            k += 1;
            ln_w += lt.ln() - (k as f64).ln();
        }
        let lost = (mu.iter().sum::<f64>() - out.iter().sum::<f64>()).max(0.0);
        (out, lost)
    }

    /// Law at time `t` from a single state.
    pub fn transient_from(&self, s: &T, t: f64) -> Result<(Vec<f64>, f64)> {
        let k = self.index_of(s).ok_or_else(|| Error::NotApplicable("start state outside truncation".into()))?;
        let mut mu = vec![0.0; self.states.len()];
        mu[k] = 1.0;
        Ok(self.transient(&mu, t))
    }
}

/// Calls `visit(env, probability)` for every environment with each `g_ij`
/// below its own cap, where the caps leave at most `tail` total mass out.
/// Returns the mass actually covered.
pub fn enumerate_environments(
    v: &RateVector,
    tail: f64,
    mut visit: impl FnMut(&GeomEnvironment, f64),
) -> Result<f64> {
    let n = v.n();
    let cells = tri_cells(n);
    let per = tail / cells.len() as f64;
    let q: Vec<f64> = cells.iter().map(|&(i, j)| v.get(i) * v.get(n - j + 1)).collect();
    let caps: Vec<i64> = q.iter().map(|&p| ((per.ln() / p.ln()).ceil() as i64).max(1)).collect();
    let total: f64 = caps.iter().map(|&c| c as f64).product();
    if total > 5e7 {
        return Err(Error::TooManyPatterns(total as usize));
    }
    let mut g = vec![0i64; cells.len()];
    let mut covered = 0.0;
    loop {
        let mut p = 1.0;
        for (k, &gk) in g.iter().enumerate() {
            p *= (1.0 - q[k]) * q[k].powi(gk as i32);
        }
        let env = GeomEnvironment::new(v.clone(), g.clone())?;
        visit(&env, p);
        covered += p;
        let mut k = 0;
        loop {
            if k == g.len() {
                return Ok(covered);
            }
            g[k] += 1;
            if g[k] < caps[k] {
                break;
            }
            g[k] = 0;
            k += 1;
        }
    }
}

/// Law of `(G(1,n), ..., G(1,1))` by environment enumeration.
pub fn lpp_top_row_law(v: &RateVector, tail: f64) -> Result<(HashMap<Vec<i64>, f64>, f64)> {
    let n = v.n();
    let mut law = HashMap::new();
    let covered = enumerate_environments(v, tail, |env, p| {
        let f = env.lpp_field();
        let key: Vec<i64> = (1..=n).rev().map(|j| f.get(1, j)).collect();
        *law.entry(key).or_insert(0.0) += p;
    })?;
    Ok((law, covered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::pushasep_rates;

    #[test]
    fn uniformization_one_particle_stationary() {
        let v = [0.5];
        let states: Vec<Vec<i64>> = (0..80).map(|k| vec![k]).collect();
        let g = FiniteGenerator::build(states, |s| pushasep_rates(s, &v));
        let mu: Vec<f64> = (0..80).map(|k| 0.75 * 0.25f64.powi(k)).collect();
        let (out, lost) = g.transient(&mu, 2.0);
        assert!(lost < 1e-12);
        for k in 0..10 {
            assert!((out[k] - mu[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_sup_law_one_cell() {
        let v = RateVector::parse("0.5").unwrap();
        let (law, covered) = lpp_top_row_law(&v, 1e-12).unwrap();
        assert!((covered - 1.0).abs() < 1e-11);
        assert!((law[&vec![0]] - 0.75).abs() < 1e-15);
    }
}
