//! Seeded Monte Carlo for the particle systems and the exact field sampler.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    interlaced_below, intertwining_m, x_rates, x_rates_reversed, zdagger_rates_generic, zdagger_sup_cdf_generic,
    RateTable,
};
use crate::model::{tri_cells, Chamber, GTPattern, GeomEnvironment, RateVector, RngContract, TriangularField};
use crate::scalar::{Rational, Scalar};

/// Recorded path: full flattened state after each event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub process: String,
    pub initial: Vec<i64>,
    pub events: Vec<(f64, Vec<i64>)>,
    pub terminal_time: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &[i64] {
        self.events.last().map(|(_, s)| s.as_slice()).unwrap_or(&self.initial)
    }

    /// State in force at time `t`.
    pub fn state_at(&self, t: f64) -> &[i64] {
        let k = self.events.partition_point(|(s, _)| *s <= t);
        if k == 0 {
            &self.initial
        } else {
            &self.events[k - 1].1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Reversed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rates: RateVector,
    pub horizon: f64,
    pub replicas: usize,
    pub rng: RngContract,
    pub direction: Direction,
}

impl SimConfig {
    pub fn new(rates: RateVector, horizon: f64, replicas: usize, rng: RngContract) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Invalid(crate::error::Violation::new("horizon must be positive", vec![])));
        }
        if replicas == 0 {
            return Err(Error::Invalid(crate::error::Violation::new("replica count must be at least 1", vec![])));
        }
        Ok(Self { rates, horizon, replicas, rng, direction: Direction::Forward })
    }
}

/// Stream of replica `r` under a base contract: `(base.stream << 32) | r`.
pub fn replica_contract(base: RngContract, r: usize) -> RngContract {
    base.with_stream((base.stream << 32) | r as u64)
}

/// Runs `f` once per replica in parallel, each with its own stream; output in replica order.
pub fn replicate<R, F>(replicas: usize, base: RngContract, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(&mut ChaCha8Rng) -> R + Sync + Send,
{
    (0..replicas).into_par_iter().map(|r| f(&mut replica_contract(base, r).rng())).collect()
}

/// [`replicate`] with per-worker state (caches) created by `init`.
pub fn replicate_with<R, C, I, F>(replicas: usize, base: RngContract, init: I, f: F) -> Vec<R>
where
    R: Send,
    I: Fn() -> C + Sync + Send,
    F: Fn(&mut C, &mut ChaCha8Rng) -> R + Sync + Send,
{
    (0..replicas)
        .into_par_iter()
        .map_init(init, |c, r| f(c, &mut replica_contract(base, r).rng()))
        .collect()
}

fn exp_time(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    Exp::new(rate).expect("positive rate").sample(rng)
}

fn pick(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>, total: f64) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.enumerate() {
        acc += w;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

// ---------------------------------------------------------------------------
// Generic engine

/// Exact jump simulation up to `horizon`: exponential holding time at the
/// total exit rate, then a categorical choice of target. `observe` sees each
/// post-jump state. Returns the final state and the number of jumps.
pub fn ctmc_engine<T: Clone>(
    rate_fn: impl Fn(&T) -> RateTable<T>,
    init: T,
    horizon: f64,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(f64, &T),
) -> Result<(T, usize)> {
    let mut s = init;
    let mut t = 0.0;
    let mut jumps = 0;
    loop {
        let table = rate_fn(&s);
        table.validate()?;
        let total = table.total_exit();
        if total == 0.0 {
            return Ok((s, jumps));
        }
        t += exp_time(rng, total);
        if t > horizon {
            return Ok((s, jumps));
        }
        let k = pick(rng, table.moves.iter().map(|(_, r)| *r), total);
        s = table.moves[k].0.clone();
        jumps += 1;
        observe(t, &s);
    }
}

// ---------------------------------------------------------------------------
// PushASEP with a wall

/// Applies one clock: particle `i` (0-based), right if `right`.
pub fn pushasep_apply(y: &mut [i64], i: usize, right: bool) {
    if right {
        let a = y[i];
        let mut j = i;
        while j < y.len() && y[j] == a {
            y[j] += 1;
            j += 1;
        }
    } else {
        let floor = if i == 0 { 0 } else { y[i - 1] };
        if y[i] > floor {
            y[i] -= 1;
        }
    }
}

/// Runs PushASEP with a wall with `2n` independent clocks for time `horizon`.
pub fn pushasep_run(
    y: &mut [i64],
    v: &[f64],
    horizon: f64,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(f64, &[i64]),
) {
    let total: f64 = v.iter().map(|a| a + 1.0 / a).sum();
    let mut t = 0.0;
    loop {
        t += exp_time(rng, total);
        if t > horizon {
            return;
        }
        let k = pick(rng, v.iter().flat_map(|a| [*a, 1.0 / a]), total);
        let before = y.to_vec();
        pushasep_apply(y, k / 2, k % 2 == 0);
        if before != y {
            observe(t, y);
        }
    }
}

pub fn run_pushasep_wall(cfg: &SimConfig, init: &[i64], replica: usize) -> Result<Trajectory> {
    if let Some(v) = Chamber::NonNeg.check(init) {
        return Err(Error::Invalid(v));
    }
    let mut rng = replica_contract(cfg.rng, replica).rng();
    let mut y = init.to_vec();
    let mut events = Vec::new();
    pushasep_run(&mut y, cfg.rates.values(), cfg.horizon, &mut rng, |t, s| events.push((t, s.to_vec())));
    Ok(Trajectory { process: "pushasep".into(), initial: init.to_vec(), events, terminal_time: cfg.horizon })
}

/// Default burn-in `20 n / min_i (1 - v_i^2)`.
pub fn default_burn_in(v: &RateVector) -> f64 {
    let gap = v.values().iter().map(|a| 1.0 - a * a).fold(f64::INFINITY, f64::min);
    20.0 * v.n() as f64 / gap
}

/// State after running from the origin for `burn_in`.
pub fn pushasep_burned_in(v: &[f64], burn_in: f64, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let mut y = vec![0; v.len()];
    pushasep_run(&mut y, v, burn_in, rng, |_, _| {});
    y
}

// ---------------------------------------------------------------------------
// Ordered walk Z-dagger and its all-time supremum

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupSample {
    pub sup: i64,
    pub stop_time: f64,
    pub jumps: usize,
    /// Certified probability that the supremum would still increase.
    pub residual: f64,
}

/// Simulates `Z-dagger` with exact rates and stops once the probability of
/// a later new maximum is below `eps`. Rates and certificates are cached by
/// shift-invariant keys.
#[derive(Clone, Debug)]
pub struct ZdaggerSampler {
    v: Vec<Rational>,
    eps: f64,
    max_jumps: usize,
    rates: HashMap<Vec<i64>, (Vec<(usize, i64, f64)>, f64)>,
    certs: HashMap<Vec<i64>, f64>,
}

impl ZdaggerSampler {
    pub fn new(v: &RateVector, eps: f64) -> Result<Self> {
        v.require_distinct()?;
        Ok(Self { v: v.exact_or_binary(), eps, max_jumps: 50_000_000, rates: HashMap::new(), certs: HashMap::new() })
    }

    fn rates_at(&mut self, x: &[i64]) -> &(Vec<(usize, i64, f64)>, f64) {
        let key: Vec<i64> = x.iter().map(|a| a - x[0]).collect();
        let v = &self.v;
        self.rates.entry(key.clone()).or_insert_with(|| {
            let t = zdagger_rates_generic(&key, v);
            let mut out = Vec::with_capacity(t.len());
            for (z, r) in t.moves {
                let i = (0..z.len()).find(|&k| z[k] != key[k]).expect("one coordinate moves");
                out.push((i, z[i] - key[i], r.to_f64_lossy()));
            }
            let total = out.iter().map(|m| m.2).sum();
            (out, total)
        })
    }

    /// `P_x(sup Z_n <= m)`.
    pub fn sup_cdf_from(&mut self, x: &[i64], m: i64) -> f64 {
        let key: Vec<i64> = x.iter().map(|a| m - a).collect();
        let v = &self.v;
        *self.certs.entry(key).or_insert_with(|| {
            let x0: Vec<i64> = x.iter().map(|a| a - m).collect();
            zdagger_sup_cdf_generic(&x0, 0, v).to_f64_lossy()
        })
    }

    /// One Z-dagger trajectory observer-style up to `horizon`.
    pub fn run(
        &mut self,
        x: &mut [i64],
        horizon: f64,
        rng: &mut ChaCha8Rng,
        mut observe: impl FnMut(f64, &[i64]),
    ) -> usize {
        let mut t = 0.0;
        let mut jumps = 0;
        loop {
            let (moves, total) = self.rates_at(x).clone();
            t += exp_time(rng, total);
            if t > horizon {
                return jumps;
            }
            let k = pick(rng, moves.iter().map(|m| m.2), total);
            x[moves[k].0] += moves[k].1;
            jumps += 1;
            observe(t, x);
        }
    }

    pub fn sample_sup(&mut self, init: &[i64], rng: &mut ChaCha8Rng) -> Result<SupSample> {
        if let Some(v) = Chamber::Full.check(init) {
            return Err(Error::Invalid(v));
        }
        let n = init.len();
        let mut x = init.to_vec();
        let mut best = x[n - 1];
        let mut t = 0.0;
        let mut jumps = 0;
        loop {
            let residual = 1.0 - self.sup_cdf_from(&x, best);
            if residual <= self.eps {
                return Ok(SupSample { sup: best, stop_time: t, jumps, residual: residual.max(0.0) });
            }
            if jumps >= self.max_jumps {
                return Err(Error::TruncationFailure(self.eps));
            }
            let (moves, total) = self.rates_at(&x).clone();
            t += exp_time(rng, total);
            let k = pick(rng, moves.iter().map(|m| m.2), total);
            x[moves[k].0] += moves[k].1;
            best = best.max(x[n - 1]);
            jumps += 1;
        }
    }
}

pub fn run_zdagger(cfg: &SimConfig, init: &[i64], replica: usize) -> Result<Trajectory> {
    let mut s = ZdaggerSampler::new(&cfg.rates, 1e-4)?;
    let mut rng = replica_contract(cfg.rng, replica).rng();
    let mut x = init.to_vec();
    let mut events = Vec::new();
    s.run(&mut x, cfg.horizon, &mut rng, |t, z| events.push((t, z.to_vec())));
    Ok(Trajectory { process: "zdagger".into(), initial: init.to_vec(), events, terminal_time: cfg.horizon })
}

// ---------------------------------------------------------------------------
// Last-passage field and the sequential chain

pub fn sample_environment(v: &RateVector, rng: &mut ChaCha8Rng) -> GeomEnvironment {
    let n = v.n();
    let g = tri_cells(n)
        .into_iter()
        .map(|(i, j)| {
            let q = v.get(i) * v.get(n - j + 1);
            Geometric::new(1.0 - q).expect("parameter in (0,1)").sample(rng) as i64
        })
        .collect();
    GeomEnvironment::new(v.clone(), g).expect("nonnegative draws")
}

pub fn sample_geometric_field(v: &RateVector, rng: &mut ChaCha8Rng) -> (GeomEnvironment, TriangularField) {
    let env = sample_environment(v, rng);
    let f = env.lpp_field();
    (env, f)
}

/// `G^pl(n)` from the sequential update `G_1(k) = g_{n-k+1,k}`,
/// `G_j(k) = max(G_j(k-1), G_{j-1}(k)) + g_{n-k+1,k-j+1}`, where the
/// previous vector is padded with a leading zero so that its `j`-th entry is
/// the old `G_{j-1}(k-1)`. Then `G_j(k) = G(n-k+1, k-j+1)`.
pub fn seq_update_chain(env: &GeomEnvironment) -> Vec<i64> {
    let n = env.n;
    let mut prev: Vec<i64> = Vec::new();
    for k in 1..=n {
        let mut cur = Vec::with_capacity(k);
        cur.push(env.get(n - k + 1, k));
        for j in 2..=k {
            let base = prev[j - 2].max(cur[j - 2]);
            cur.push(base + env.get(n - k + 1, k - j + 1));
        }
        prev = cur;
    }
    prev
}

pub fn run_seq_update_chain(v: &RateVector, rng: &mut ChaCha8Rng) -> Vec<i64> {
    seq_update_chain(&sample_environment(v, rng))
}

// ---------------------------------------------------------------------------
// X-array

/// Runs the X-array with forward rates, or with the reversed rates `q-hat`.
pub fn x_array_run(
    x: TriangularField,
    v: &[f64],
    horizon: f64,
    direction: Direction,
    rng: &mut ChaCha8Rng,
    observe: impl FnMut(f64, &TriangularField),
) -> Result<TriangularField> {
    let rates = |s: &TriangularField| match direction {
        Direction::Forward => x_rates(s, v),
        Direction::Reversed => x_rates_reversed(s, v),
    };
    ctmc_engine(rates, x, horizon, rng, observe).map(|(s, _)| s)
}

pub fn run_x_array(cfg: &SimConfig, init: &TriangularField, replica: usize) -> Result<Trajectory> {
    if let Some(v) = init.check() {
        return Err(Error::Invalid(v));
    }
    let mut rng = replica_contract(cfg.rng, replica).rng();
    let mut events = Vec::new();
    x_array_run(init.clone(), cfg.rates.values(), cfg.horizon, cfg.direction, &mut rng, |t, s| {
        events.push((t, s.values().to_vec()))
    })?;
    Ok(Trajectory {
        process: match cfg.direction {
            Direction::Forward => "x-array".into(),
            Direction::Reversed => "x-array-reversed".into(),
        },
        initial: init.values().to_vec(),
        events,
        terminal_time: cfg.horizon,
    })
}

// ---------------------------------------------------------------------------
// Gelfand-Tsetlin push-block dynamics

/// Applies one clock of particle `i` on level `j` (both 1-based). Returns
/// false when the jump is suppressed.
pub fn gt_apply(levels: &mut [Vec<i64>], j: usize, i: usize, right: bool) -> bool {
    let get = |l: &[Vec<i64>], j: usize, i: usize| -> Option<i64> {
        if j == 0 || j > l.len() || i == 0 || i > j {
            None
        } else {
            Some(l[j - 1][i - 1])
        }
    };
    let a = levels[j - 1][i - 1];
    if right {
        if get(levels, j - 1, i) == Some(a) {
            return false;
        }
        let (mut jj, mut ii, mut old) = (j, i, a);
        levels[jj - 1][ii - 1] += 1;
        while get(levels, jj + 1, ii + 1) == Some(old) {
            jj += 1;
            ii += 1;
            old = levels[jj - 1][ii - 1];
            levels[jj - 1][ii - 1] += 1;
        }
    } else {
        if get(levels, j - 1, i.wrapping_sub(1)) == Some(a) {
            return false;
        }
        let (mut jj, ii, mut old) = (j, i, a);
        levels[jj - 1][ii - 1] -= 1;
        while get(levels, jj + 1, ii) == Some(old) {
            jj += 1;
            old = levels[jj - 1][ii - 1];
            levels[jj - 1][ii - 1] -= 1;
        }
    }
    true
}

pub fn gt_run(
    levels: &mut [Vec<i64>],
    v: &[f64],
    horizon: f64,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(f64, &[Vec<i64>]),
) {
    let n = levels.len();
    let level_rate: Vec<f64> = (1..=n).map(|j| j as f64 * (v[j - 1] + 1.0 / v[j - 1])).collect();
    let total: f64 = level_rate.iter().sum();
    let mut t = 0.0;
    loop {
        t += exp_time(rng, total);
        if t > horizon {
            return;
        }
        let j = pick(rng, level_rate.iter().cloned(), total) + 1;
        let i = rng.random_range(1..=j);
        let vj = v[j - 1];
        let right = rng.random::<f64>() * (vj + 1.0 / vj) < vj;
        if gt_apply(levels, j, i, right) {
            observe(t, levels);
        }
    }
}

pub fn run_gt_pushblock(cfg: &SimConfig, init: &GTPattern, replica: usize) -> Result<Trajectory> {
    if let Some(v) = init.check() {
        return Err(Error::Invalid(v));
    }
    let flat = |l: &[Vec<i64>]| l.iter().flatten().cloned().collect::<Vec<i64>>();
    let mut rng = replica_contract(cfg.rng, replica).rng();
    let mut levels = init.levels().to_vec();
    let mut events = Vec::new();
    gt_run(&mut levels, cfg.rates.values(), cfg.horizon, &mut rng, |t, l| events.push((t, flat(l))));
    Ok(Trajectory { process: "gt-pushblock".into(), initial: flat(init.levels()), events, terminal_time: cfg.horizon })
}

/// Conditional laws of each level given the one below under `M_z`, as
/// cumulative tables keyed by the lower level.
#[derive(Clone, Debug, Default)]
pub struct MzSampler {
    v: Vec<Rational>,
    cache: HashMap<Vec<i64>, (Vec<Vec<i64>>, Vec<f64>)>,
}

impl MzSampler {
    pub fn new(v: &RateVector) -> Result<Self> {
        v.require_distinct()?;
        Ok(Self { v: v.exact_or_binary(), cache: HashMap::new() })
    }

    /// Draws a pattern with bottom row `z` and law `w_v(x) / S_z(v)`.
    pub fn sample(&mut self, z: &[i64], rng: &mut ChaCha8Rng) -> Result<GTPattern> {
        let n = z.len();
        if n != self.v.len() {
            return Err(Error::Dimension { expected: self.v.len(), got: n });
        }
        if let Some(v) = Chamber::Full.check(z) {
            return Err(Error::Invalid(v));
        }
        let mut levels = vec![z.to_vec()];
        for j in (2..=n).rev() {
            let y = levels.last().expect("nonempty").clone();
            let v = &self.v[..j];
            let (xs, cum) = self.cache.entry(y.clone()).or_insert_with(|| {
                let xs: Vec<Vec<i64>> =
                    interlaced_below(&y).into_iter().filter(|x| Chamber::Full.contains(x)).collect();
                let mut acc = 0.0;
                let cum = xs
                    .iter()
                    .map(|x| {
                        acc += intertwining_m(x, &y, v).to_f64_lossy();
                        acc
                    })
                    .collect();
                (xs, cum)
            });
            let u = rng.random::<f64>() * cum.last().copied().unwrap_or(0.0);
            let k = cum.partition_point(|&c| c <= u).min(xs.len() - 1);
            levels.push(xs[k].clone());
        }
        levels.reverse();
        GTPattern::new(levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v: &str, horizon: f64) -> SimConfig {
        SimConfig::new(RateVector::parse(v).unwrap(), horizon, 1, RngContract::new(7, 0)).unwrap()
    }

    #[test]
    fn push_and_wall_rules() {
        let mut y = vec![2, 2];
        pushasep_apply(&mut y, 0, true);
        assert_eq!(y, vec![3, 3]);
        let mut y = vec![0, 4];
        pushasep_apply(&mut y, 0, false);
        assert_eq!(y, vec![0, 4]);
        let mut y = vec![1, 1];
        pushasep_apply(&mut y, 1, false);
        assert_eq!(y, vec![1, 1]);
    }

    #[test]
    fn trajectories_stay_valid_and_reproduce() {
        let c = cfg("0.3,0.5,0.7", 20.0);
        let a = run_pushasep_wall(&c, &[0, 0, 0], 3).unwrap();
        let b = run_pushasep_wall(&c, &[0, 0, 0], 3).unwrap();
        assert_eq!(a, b);
        let other = run_pushasep_wall(&c, &[0, 0, 0], 4).unwrap();
        assert_ne!(a.events, other.events);
        for (k, (t, s)) in a.events.iter().enumerate() {
            assert!(Chamber::NonNeg.contains(s));
            if k > 0 {
                assert!(*t > a.events[k - 1].0);
            }
        }
    }

    #[test]
    fn seq_chain_couples_with_field() {
        let v = RateVector::parse("0.3,0.5,0.6,0.2").unwrap();
        let mut rng = RngContract::new(1, 0).rng();
        for _ in 0..200 {
            let (env, f) = sample_geometric_field(&v, &mut rng);
            let top: Vec<i64> = (1..=4).rev().map(|j| f.get(1, j)).collect();
            assert_eq!(seq_update_chain(&env), top);
        }
    }

    #[test]
    fn hand_field() {
        let v = RateVector::parse("0.3,0.5").unwrap();
        let env = GeomEnvironment::new(v, vec![1, 2, 3]).unwrap();
        let f = env.lpp_field();
        assert_eq!((f.get(2, 1), f.get(1, 2), f.get(1, 1)), (3, 2, 4));
    }

    #[test]
    fn gt_push_cascade() {
        let mut l = vec![vec![1], vec![0, 1]];
        assert!(gt_apply(&mut l, 1, 1, true));
        assert_eq!(l, vec![vec![2], vec![0, 2]]);
        let mut l = vec![vec![1], vec![1, 3]];
        assert!(!gt_apply(&mut l, 2, 1, true));
        assert!(gt_apply(&mut l, 1, 1, false));
        assert_eq!(l, vec![vec![0], vec![0, 3]]);
    }

    #[test]
    fn gt_and_xarray_stay_valid() {
        let c = cfg("0.3,0.5,0.7", 5.0);
        let p = GTPattern::new(vec![vec![0], vec![0, 1], vec![-1, 0, 2]]).unwrap();
        let tr = run_gt_pushblock(&c, &p, 0).unwrap();
        for (_, s) in &tr.events {
            let levels = vec![vec![s[0]], vec![s[1], s[2]], vec![s[3], s[4], s[5]]];
            assert!(GTPattern::new(levels).is_ok());
        }
        let x = TriangularField::zeros(3);
        for dir in [Direction::Forward, Direction::Reversed] {
            let mut c2 = c.clone();
            c2.direction = dir;
            let tr = run_x_array(&c2, &x, 0).unwrap();
            for (_, s) in &tr.events {
                assert!(TriangularField::from_values(3, s.clone()).is_ok());
            }
        }
    }

    #[test]
    fn zdagger_sup_stops_with_certificate() {
        let v = RateVector::parse("0.3,0.5").unwrap();
        let mut s = ZdaggerSampler::new(&v, 1e-4).unwrap();
        let mut rng = RngContract::new(3, 0).rng();
        let r = s.sample_sup(&[0, 0], &mut rng).unwrap();
        assert!(r.sup >= 0 && r.residual <= 1e-4);
    }

    #[test]
    fn mz_sampler_respects_bottom_row() {
        let v = RateVector::parse("0.3,0.5,0.7").unwrap();
        let mut m = MzSampler::new(&v).unwrap();
        let mut rng = RngContract::new(5, 0).rng();
        for _ in 0..50 {
            let p = m.sample(&[0, 1, 3], &mut rng).unwrap();
            assert_eq!(p.bottom(), &[0, 1, 3]);
        }
    }
}
