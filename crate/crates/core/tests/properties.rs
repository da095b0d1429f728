use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;
use pushasep::discrete_ops::{apply_d, apply_i, apply_j, LatticeSeq};
use pushasep::kernels::{dw_step_kernel, invariant_pmf, psi, sup_cdf, TransitionKernel};
use pushasep::samplers::{pushasep_burned_in, sample_geometric_field, seq_update_chain, MzSampler};
use pushasep::symfunc::{schur_formula, schur_oracle_generic};
use pushasep::verify::{chi_square, empirical, kelly_residual, transpose_symmetry_residual, tv_distance};
use pushasep::{Chamber, ChamberConfig, GeomEnvironment, RateVector, Rational, RngContract};

fn rate() -> impl Strategy<Value = f64> {
    (5u32..95).prop_map(|k| k as f64 / 100.0)
}

fn rational_rate() -> impl Strategy<Value = Rational> {
    (3i64..=13).prop_flat_map(|d| (1..d).prop_map(move |k| Rational::new(BigInt::from(k), BigInt::from(d))))
}

fn rates(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(rate(), n)
}

fn nonneg_chamber(n: usize, max: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0..=max, n).prop_map(|mut x| {
        x.sort();
        x
    })
}

fn finite_seq() -> impl Strategy<Value = LatticeSeq<Rational>> {
    (-3i64..3, prop::collection::vec(-5i64..=5, 1..6)).prop_map(|(lo, vals)| {
        LatticeSeq::new(lo, vals.into_iter().map(|k| Rational::from_integer(BigInt::from(k))).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_symmetric_and_vanishes_at_minus_one(t in 0.0f64..4.0, x in 0i64..15, y in 0i64..15) {
        prop_assert_eq!(psi(t, x, y), psi(t, y, x));
        prop_assert_eq!(psi(t, x, -1), 0.0);
    }

    #[test]
    fn sup_cdf_is_a_cdf(v in rates(3), eta in 0i64..20) {
        let rv = RateVector::new(v).unwrap();
        prop_assume!(rv.is_distinct());
        let a = sup_cdf(eta, &rv).unwrap();
        let b = sup_cdf(eta + 1, &rv).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(a <= b + 1e-15);
    }

    #[test]
    fn invariant_pmf_positive(v in rates(2), x in nonneg_chamber(2, 10)) {
        let rv = RateVector::new(v).unwrap();
        prop_assume!(rv.is_distinct());
        let p = invariant_pmf(&ChamberConfig::new(x, Chamber::NonNeg).unwrap(), &rv).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn transition_rows_are_subprobabilities(v in rates(2), t in 0.05f64..1.5, x in nonneg_chamber(2, 3)) {
        let rv = RateVector::new(v).unwrap();
        let k = TransitionKernel::new(t, &rv).unwrap();
        let mut total = 0.0;
        for a in 0..40i64 {
            for b in a..40 {
                let r = k.r(&x, &[a, b]).unwrap();
                prop_assert!(r > -1e-14);
                total += r;
            }
        }
        prop_assert!(total <= 1.0 + 1e-10);
        prop_assert!(total > 0.99);
    }

    #[test]
    fn schur_formula_matches_patterns(v in prop::collection::vec(rational_rate(), 3), z in nonneg_chamber(3, 3)) {
        prop_assume!(v[0] != v[1] && v[1] != v[2] && v[0] != v[2]);
        let a: Rational = schur_formula(&z, &v);
        let b: Rational = schur_oracle_generic(&z, &v, 100_000).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn d_undoes_i_and_shifts_j(a in rational_rate(), f in finite_seq()) {
        let fi = f.widen(0, f.hi().max(0));
        let nonneg = LatticeSeq::new(0, (0..=fi.hi()).map(|u| fi.eval(u)).collect());
        let di = apply_d(&a, &apply_i(&a, &nonneg).unwrap());
        let dj = apply_d(&a, &apply_j(&a, &f).unwrap());
        for u in -6..10 {
            if u >= 0 {
                prop_assert_eq!(di.eval(u), nonneg.eval(u));
            }
            prop_assert_eq!(dj.eval(u), -(a.clone() * f.eval(u - 1)));
        }
    }

    #[test]
    fn pushasep_stays_in_chamber(v in rates(3), seed in any::<u64>()) {
        let mut rng = RngContract::new(seed, 0).rng();
        let y = pushasep_burned_in(&v, 3.0, &mut rng);
        prop_assert!(ChamberConfig::new(y, Chamber::NonNeg).is_ok());
    }

    #[test]
    fn lpp_fields_are_valid_and_sequential_chain_agrees(v in rates(3), seed in any::<u64>()) {
        let rv = RateVector::new(v).unwrap();
        let mut rng = RngContract::new(seed, 0).rng();
        let (env, field) = sample_geometric_field(&rv, &mut rng);
        prop_assert!(field.check().is_none());
        let chain = seq_update_chain(&env);
        let n = rv.n();
        let top: Vec<i64> = (1..=n).map(|j| field.get(1, j)).collect();
        let mut sorted = top.clone();
        sorted.sort();
        prop_assert_eq!(chain, sorted);
    }

    #[test]
    fn mz_patterns_have_the_requested_bottom(v in rates(3), z in nonneg_chamber(3, 4), seed in any::<u64>()) {
        let rv = RateVector::new(v).unwrap();
        prop_assume!(rv.is_distinct());
        let mut s = MzSampler::new(&rv).unwrap();
        let mut rng = RngContract::new(seed, 0).rng();
        let p = s.sample(&z, &mut rng).unwrap();
        prop_assert!(p.check().is_none());
        prop_assert_eq!(p.bottom(), &z[..]);
    }

    #[test]
    fn kelly_and_transpose_hold_exactly(v in prop::collection::vec(rational_rate(), 3), g in prop::collection::vec(0i64..4, 6)) {
        // any last-passage field is a valid X-array state
        let x = GeomEnvironment::new(RateVector::new(vec![0.5; 3]).unwrap(), g).unwrap().lpp_field();
        prop_assert!(x.check().is_none());
        prop_assert!(kelly_residual(&x, &v).is_zero());
        prop_assert!(transpose_symmetry_residual(&x, &v).is_zero());
    }

    #[test]
    fn tv_is_a_metric_on_empirical_laws(a in prop::collection::vec(0u8..6, 1..200), b in prop::collection::vec(0u8..6, 1..200)) {
        let p = empirical(&a);
        let q = empirical(&b);
        let d = tv_distance(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - tv_distance(&q, &p)).abs() < 1e-15);
        prop_assert!(tv_distance(&p, &p) < 1e-15);
    }

    #[test]
    fn chi_square_p_value_in_unit_interval(a in prop::collection::vec(0u8..4, 50..300)) {
        let probs: BTreeMap<u8, f64> = (0..4).map(|k| (k, 0.25)).collect();
        let c = chi_square(&a, &probs, 5.0);
        prop_assert!((0.0..=1.0).contains(&c.p_value));
        prop_assert!(c.statistic >= 0.0);
    }
}

// the double-wall kernel is evaluated in exact rationals, so fewer cases
proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dw_kernel_rows_sum_to_one(v in prop::collection::vec((5u32..60).prop_map(|k| k as f64 / 100.0), 2), xp in 0i64..4) {
        let rv = RateVector::new(v.clone()).unwrap();
        let vmax = v.iter().cloned().fold(0.0, f64::max);
        let cap = ((1e-13f64).ln() / (vmax * vmax).ln()).ceil() as i64 + xp + 2;
        let mut acc = 0.0;
        for a in 0..=cap {
            for b in a..=cap {
                acc += dw_step_kernel(&[xp], &[a, b], &rv).unwrap();
            }
        }
        prop_assert!((acc - 1.0).abs() < 1e-10, "row sum {}", acc);
    }
}
