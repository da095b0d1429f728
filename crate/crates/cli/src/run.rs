//! Executes a validated [`RunSpec`] into a table of rows.

use pushasep::kernels::{
    field_pmf, invariant_pmf, sup_cdf, truncation_cap, w_nonneg_states, TransitionKernel, R_ABS_FLOOR, R_RTOL,
};
use pushasep::model::tri_cells;
use pushasep::samplers::{
    default_burn_in, gt_run, pushasep_run, replica_contract, sample_geometric_field, seq_update_chain,
    x_array_run, Direction, MzSampler, ZdaggerSampler,
};
use pushasep::symfunc::{schur, sp_schur};
use pushasep::verify::{run_suite, CheckReport, StatParams};
use pushasep::{Chamber, ChamberConfig, Error, GTPattern, RateVector, RngContract, TriangularField};
use rayon::prelude::*;
use serde::Serialize;

use crate::runspec::{Dir, RunSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(k) => write!(f, "{k}"),
            Cell::Float(x) => write!(f, "{x:?}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

pub enum Outcome {
    Table(Table),
    Reports(Vec<CheckReport>),
}

fn ints(xs: &[i64]) -> impl Iterator<Item = Cell> + '_ {
    xs.iter().map(|&k| Cell::Int(k))
}

fn state_columns(target: &str, n: usize) -> Vec<String> {
    match target {
        "x-array" | "lpp-field" | "field-pmf" => tri_cells(n).into_iter().map(|(i, j)| format!("x_{i}_{j}")).collect(),
        "gt-pushblock" => (1..=n).flat_map(|j| (1..=j).map(move |i| format!("x{j}_{i}"))).collect(),
        "seq-chain" => (1..=n).map(|j| format!("g{j}")).collect(),
        _ => (1..=n).map(|i| format!("y{i}")).collect(),
    }
}

fn flat(levels: &[Vec<i64>]) -> Vec<i64> {
    levels.iter().flatten().cloned().collect()
}

/// Per-replica rows: either the whole recorded path or the final state.
fn path_rows(r: usize, events: Vec<(f64, Vec<i64>)>, initial: Vec<i64>, horizon: f64, full: bool) -> Vec<Vec<Cell>> {
    let row = |t: f64, s: &[i64]| {
        let mut out = vec![Cell::Int(r as i64), Cell::Float(t)];
        out.extend(ints(s));
        out
    };
    if full {
        let mut rows = vec![row(0.0, &initial)];
        rows.extend(events.iter().map(|(t, s)| row(*t, s)));
        rows
    } else {
        let last = events.last().map(|(_, s)| s.clone()).unwrap_or(initial);
        vec![row(horizon, &last)]
    }
}

pub fn simulate(spec: &RunSpec) -> pushasep::Result<Table> {
    let v = RateVector::parse(&spec.rates.join(","))?;
    let vals = v.values().to_vec();
    let n = v.n();
    let base = RngContract::new(spec.seed, 0);
    let horizon = spec.horizon.unwrap_or(1.0);
    let burn = spec.burn_in.unwrap_or(0.0);
    let full = spec.trajectory;
    let target = spec.target.as_str();
    let mut columns: Vec<String> = vec!["replica".into(), "time".into()];

    if target == "zdagger" && spec.sup {
        let sampler = ZdaggerSampler::new(&v, spec.tail.unwrap_or(1e-4))?;
        let init = spec.init.clone().unwrap_or(vec![0; n]);
        let rows = (0..spec.replicas)
            .into_par_iter()
            .map_init(
                || sampler.clone(),
                |s, r| {
                    let mut rng = replica_contract(base, r).rng();
                    let x = s.sample_sup(&init, &mut rng)?;
                    Ok(vec![
                        Cell::Int(r as i64),
                        Cell::Int(x.sup),
                        Cell::Float(x.stop_time),
                        Cell::Int(x.jumps as i64),
                        Cell::Float(x.residual),
                    ])
                },
            )
            .collect::<pushasep::Result<Vec<_>>>()?;
        return Ok(Table {
            columns: ["replica", "sup", "stop_time", "jumps", "residual"].map(String::from).to_vec(),
            rows,
        });
    }

    let one = |r: usize| -> pushasep::Result<Vec<Vec<Cell>>> {
        let mut rng = replica_contract(base, r).rng();
        let mut events = Vec::new();
        match target {
            "pushasep-wall" => {
                let mut y = spec.init.clone().unwrap_or(vec![0; n]);
                if let Some(vio) = Chamber::NonNeg.check(&y) {
                    return Err(Error::Invalid(vio));
                }
                pushasep_run(&mut y, &vals, burn, &mut rng, |_, _| {});
                let init = y.clone();
                pushasep_run(&mut y, &vals, horizon, &mut rng, |t, s| {
                    if full {
                        events.push((t, s.to_vec()))
                    }
                });
                if !full {
                    events.push((horizon, y));
                }
                Ok(path_rows(r, events, init, horizon, full))
            }
            "zdagger" => {
                let mut s = ZdaggerSampler::new(&v, 1e-4)?;
                let mut x = spec.init.clone().unwrap_or(vec![0; n]);
                if let Some(vio) = Chamber::Full.check(&x) {
                    return Err(Error::Invalid(vio));
                }
                s.run(&mut x, burn, &mut rng, |_, _| {});
                let init = x.clone();
                s.run(&mut x, horizon, &mut rng, |t, z| {
                    if full {
                        events.push((t, z.to_vec()))
                    }
                });
                if !full {
                    events.push((horizon, x));
                }
                Ok(path_rows(r, events, init, horizon, full))
            }
            "x-array" => {
                let x0 = match &spec.init {
                    Some(vals) => TriangularField::from_values(n, vals.clone())?,
                    None => sample_geometric_field(&v, &mut rng).1,
                };
                let dir = match spec.direction {
                    Dir::Forward => Direction::Forward,
                    Dir::Reversed => Direction::Reversed,
                };
                let x0 = x_array_run(x0, &vals, burn, dir, &mut rng, |_, _| {})?;
                let init = x0.values().to_vec();
                let end = x_array_run(x0, &vals, horizon, dir, &mut rng, |t, s| {
                    if full {
                        events.push((t, s.values().to_vec()))
                    }
                })?;
                if !full {
                    events.push((horizon, end.values().to_vec()));
                }
                Ok(path_rows(r, events, init, horizon, full))
            }
            "gt-pushblock" => {
                let z = spec.init.clone().unwrap_or((0..n as i64).collect());
                let mut levels = MzSampler::new(&v)?.sample(&z, &mut rng)?.levels().to_vec();
                gt_run(&mut levels, &vals, burn, &mut rng, |_, _| {});
                let init = flat(&levels);
                gt_run(&mut levels, &vals, horizon, &mut rng, |t, l| {
                    if full {
                        events.push((t, flat(l)))
                    }
                });
                GTPattern::new(levels.clone())?;
                if !full {
                    events.push((horizon, flat(&levels)));
                }
                Ok(path_rows(r, events, init, horizon, full))
            }
            "lpp-field" => {
                let (_, f) = sample_geometric_field(&v, &mut rng);
                Ok(path_rows(r, vec![], f.values().to_vec(), 0.0, false))
            }
            "seq-chain" => {
                let (env, _) = sample_geometric_field(&v, &mut rng);
                Ok(path_rows(r, vec![], seq_update_chain(&env), 0.0, false))
            }
            other => Err(Error::NotApplicable(format!("unknown process {other}"))),
        }
    };
    let rows: Vec<Vec<Cell>> = (0..spec.replicas)
        .into_par_iter()
        .map(one)
        .collect::<pushasep::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    columns.extend(state_columns(target, n));
    Ok(Table { columns, rows })
}

/// Every field in the triangle with all values at most `max`.
fn fields_up_to(n: usize, max: i64) -> pushasep::Result<Vec<TriangularField>> {
    let cells = n * (n + 1) / 2;
    let count = ((max + 1) as f64).powi(cells as i32);
    if count > 2e6 {
        return Err(Error::TooManyPatterns(count as usize));
    }
    let mut out = Vec::new();
    let mut vals = vec![0i64; cells];
    loop {
        if let Ok(f) = TriangularField::from_values(n, vals.clone()) {
            out.push(f);
        }
        let mut k = 0;
        loop {
            if k == cells {
                return Ok(out);
            }
            vals[k] += 1;
            if vals[k] <= max {
                break;
            }
            vals[k] = 0;
            k += 1;
        }
    }
}

pub fn exact(spec: &RunSpec) -> pushasep::Result<Table> {
    let v = RateVector::parse(&spec.rates.join(","))?;
    let n = v.n();
    let tail = spec.tail.unwrap_or(1e-9);
    let default_max = || -> pushasep::Result<i64> { Ok(truncation_cap(&v, tail)?.0) };
    let mut rows = Vec::new();
    let columns: Vec<String>;
    let tail_cols = ["value".to_string(), "truncation_error".to_string()];
    match spec.target.as_str() {
        "pmf" => {
            let max = match spec.max {
                Some(m) => m,
                None => default_max()?,
            };
            columns = state_columns("pmf", n).into_iter().chain(tail_cols).collect();
            for y in w_nonneg_states(n, max) {
                let p = invariant_pmf(&ChamberConfig::new(y.clone(), Chamber::NonNeg)?, &v)?;
                rows.push(ints(&y).chain([Cell::Float(p), Cell::Float(0.0)]).collect());
            }
        }
        "sup-cdf" => {
            let (a, b) = spec.eta.expect("validated");
            columns = ["eta".to_string()].into_iter().chain(tail_cols).collect();
            for eta in a..=b {
                rows.push(vec![Cell::Int(eta), Cell::Float(sup_cdf(eta, &v)?), Cell::Float(0.0)]);
            }
        }
        "transition" => {
            let x = spec.x.clone().expect("validated");
            let t = spec.t.expect("validated");
            let k = TransitionKernel::new(t, &v)?;
            let max = spec.max.unwrap_or(x.iter().cloned().max().unwrap_or(0) + 10);
            columns = state_columns("transition", n).into_iter().chain(tail_cols).collect();
            for y in w_nonneg_states(n, max) {
                let r = k.r(&x, &y)?;
                rows.push(ints(&y).chain([Cell::Float(r), Cell::Float((R_RTOL * r.abs()).max(R_ABS_FLOOR))]).collect());
            }
        }
        "field-pmf" => {
            let max = spec.max.unwrap_or(4);
            columns = state_columns("field-pmf", n).into_iter().chain(tail_cols).collect();
            for f in fields_up_to(n, max)? {
                let p = field_pmf(&f, &v)?;
                rows.push(ints(f.values()).chain([Cell::Float(p), Cell::Float(0.0)]).collect());
            }
        }
        "schur" | "sp-schur" => {
            let x = spec.x.clone().expect("validated");
            let val = if spec.target == "schur" {
                schur(&ChamberConfig::new(x.clone(), Chamber::Full)?, &v)?
            } else {
                sp_schur(&ChamberConfig::new(x.clone(), Chamber::NonNeg)?, &v)?
            };
            columns = state_columns("schur", n)
                .into_iter()
                .chain(["value".to_string(), "exact".to_string(), "truncation_error".to_string()])
                .collect();
            let exact = val.exact.as_ref().map(pushasep::scalar::format_rational).unwrap_or_default();
            rows.push(ints(&x).chain([Cell::Float(val.value()), Cell::Text(exact), Cell::Float(0.0)]).collect());
        }
        other => return Err(Error::NotApplicable(format!("unknown quantity {other}"))),
    }
    Ok(Table { columns, rows })
}

pub fn verify(spec: &RunSpec) -> pushasep::Result<Vec<CheckReport>> {
    let v = RateVector::parse(&spec.rates.join(","))?;
    let params = StatParams { replicas: spec.replicas, ..StatParams::default() };
    run_suite(&spec.target, &v, &params, spec.seed)
}

pub fn execute(spec: &RunSpec) -> pushasep::Result<Outcome> {
    match spec.command.as_str() {
        "simulate" => simulate(spec).map(Outcome::Table),
        "exact" => exact(spec).map(Outcome::Table),
        "verify" => verify(spec).map(Outcome::Reports),
        other => Err(Error::NotApplicable(format!("unknown command {other}"))),
    }
}

/// The default burn-in rule, resolved for the manifest.
pub fn auto_burn_in(rates: &[String]) -> Option<f64> {
    RateVector::parse(&rates.join(",")).ok().map(|v| default_burn_in(&v))
}
