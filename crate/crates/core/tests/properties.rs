mod common;

use proptest::prelude::*;

use sinai_lab::environment::{DistributionSpec, Environment, Window};
use sinai_lab::experiments::{classify, prepare, Params};
use sinai_lab::landscape::{
    elevation_pairwise, elevation_unchecked, find_peaks, find_stable_points, neighborhood, potential,
    reversible_measure, stable_landscape, FunctionKind, SampledFunction, TimeScale, WellSide,
};
use sinai_lab::oracle::{absorption_solve, ruin_probability};
use sinai_lab::stats::Proportion;
use sinai_lab::walker::{advance, WalkState};

use common::{dense_ruin, literal_peaks, literal_stable_points, random_path, sampled, summed_potential};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn spec_strategy() -> impl Strategy<Value = DistributionSpec> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|c| DistributionSpec::two_point(c).unwrap()),
        (0.2f64..3.0).prop_map(|c| DistributionSpec::log_uniform(c).unwrap()),
    ]
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn stable_points_follow_the_definition(seed in any::<u64>(), n in 2usize..200, log_t in 1.0f64..6.0) {
        let values = random_path(seed, n);
        let f = sampled(values.clone(), 0);
        let got = find_stable_points(&f, TimeScale::from_log(log_t).unwrap());
        let (stable, undecided) = literal_stable_points(&values, log_t);
        prop_assert_eq!(&got.indices, &stable);
        let undecided: Vec<f64> = undecided.iter().map(|&i| i as f64).collect();
        prop_assert_eq!(got.undecided, undecided);
        let peaks: Vec<f64> = literal_peaks(&values, &stable).iter().map(|&i| i as f64).collect();
        prop_assert_eq!(find_peaks(&f, TimeScale::from_log(log_t).unwrap()), peaks);
    }

    #[test]
    fn deeper_time_scales_keep_fewer_points(seed in any::<u64>(), n in 2usize..200, a in 1.0f64..5.0, b in 0.0f64..4.0) {
        let f = sampled(random_path(seed, n), 0);
        let s1 = find_stable_points(&f, TimeScale::from_log(a).unwrap()).positions;
        let s2 = find_stable_points(&f, TimeScale::from_log(a + b).unwrap()).positions;
        prop_assert!(s2.iter().all(|x| s1.contains(x)));
    }

    #[test]
    fn landscape_structure(seed in any::<u64>(), log_t in 1.0f64..4.0, origin in 100i64..300) {
        let f = sampled(random_path(seed, 400), -origin);
        let t = TimeScale::from_log(log_t).unwrap();
        let Ok(ls) = stable_landscape(&f, t) else { return Ok(()) };
        let mut merged: Vec<(f64, bool)> = ls.stable_points.iter().map(|&x| (x, true)).collect();
        merged.extend(ls.peaks.iter().map(|&x| (x, false)));
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert!(merged.windows(2).all(|w| w[0].1 != w[1].1 && w[0].0 < w[1].0));
        prop_assert!(merged.first().unwrap().1 && merged.last().unwrap().1);
        for w in &ls.wells {
            prop_assert!(w.depth_value >= log_t - 1e-12);
            prop_assert!(w.interval.0 <= w.bottom && w.bottom <= w.interval.1);
        }
        let l = &ls.landmarks;
        prop_assert!(l.m_minus_minus <= l.h_minus_minus);
        prop_assert!(l.h_minus_minus <= l.m_minus && l.m_minus <= 0.0 && 0.0 <= l.m_plus && l.m_plus <= l.h_plus_plus);
        prop_assert!(l.h_plus_plus <= l.m_plus_plus);
        let value = |x: f64| f.at(x).unwrap();
        let want = if value(l.h_plus) > value(l.h_minus) {
            l.m_minus
        } else if value(l.h_plus) < value(l.h_minus) {
            l.m_plus
        } else {
            prop_assert!(ls.tie);
            l.m_minus
        };
        prop_assert_eq!(ls.m_t, want);
    }

    #[test]
    fn neighborhoods_are_nested_and_inside_the_well(seed in any::<u64>(), log_t in 1.0f64..4.0, a in 0.05f64..1.0, b in 0.0f64..1.0) {
        let f = sampled(random_path(seed, 400), -200);
        let t = TimeScale::from_log(log_t).unwrap();
        let Ok(ls) = stable_landscape(&f, t) else { return Ok(()) };
        for side in WellSide::BOTH {
            let w = ls.side_well(side);
            let (a1, a2) = ((a * w.depth_value), ((a + b).min(1.0) * w.depth_value));
            let n1 = neighborhood(&f, w.bottom, a1, w.interval).unwrap();
            let n2 = neighborhood(&f, w.bottom, a2, w.interval).unwrap();
            prop_assert!(w.interval.0 <= n2.interval.0 && n2.interval.0 <= n1.interval.0);
            prop_assert!(n1.interval.1 <= n2.interval.1 && n2.interval.1 <= w.interval.1);
            prop_assert!(n1.contains(w.bottom));
            let bottom = f.at(w.bottom).unwrap();
            for (&x, &v) in f.positions().iter().zip(f.values()) {
                if w.interval.0 <= x && x <= w.interval.1 && !n1.contains(x) {
                    prop_assert!(v - bottom >= a1);
                }
            }
        }
    }

    #[test]
    fn elevation_formulas_agree_and_grow_with_the_interval(seed in any::<u64>(), i in 0usize..60, j in 0usize..60, k in 0usize..30) {
        let f = sampled(random_path(seed, 200), 0);
        let (lo, hi) = (i.min(j) as f64 + 30.0, i.max(j) as f64 + 30.0);
        let e = elevation_unchecked(&f, (lo, hi)).unwrap();
        let p = elevation_pairwise(&f, (lo, hi)).unwrap();
        prop_assert!((e - p).abs() <= 1e-12 * (1.0 + e.abs()));
        let outer = elevation_unchecked(&f, (lo - k as f64, hi + k as f64)).unwrap();
        prop_assert!(e <= outer + 1e-12);
    }

    #[test]
    fn dyadic_rescaling_commutes_with_the_scan(seed in any::<u64>(), k in -2i32..3, log_t in 1.0f64..4.0) {
        let a = 2f64.powi(k);
        let f = sampled(random_path(seed, 200), -100);
        let t = TimeScale::from_log(log_t).unwrap();
        let g = f.rescale(a).unwrap();
        let ta = t.pow(a).unwrap();
        let want: Vec<f64> = find_stable_points(&f, t).positions.iter().map(|x| x * a * a).collect();
        prop_assert_eq!(find_stable_points(&g, ta).positions, want);
        let want: Vec<f64> = find_peaks(&f, t).iter().map(|x| x * a * a).collect();
        prop_assert_eq!(find_peaks(&g, ta), want);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn potential_and_reversible_measure(spec in spec_strategy(), seed in any::<u64>(), r in 1i64..300) {
        let env = Environment::sample(&spec, seed, Window::symmetric(r));
        let v = potential(&env);
        let theta = reversible_measure(&env);
        let w0 = env.rates(0).unwrap().plus;
        let k2 = spec.kappa * spec.kappa;
        prop_assert_eq!(v.at(0.0), Some(0.0));
        for x in -r..=r {
            let vx = v.at(x as f64).unwrap();
            prop_assert!((vx - summed_potential(&env, x)).abs() <= 1e-9 * (1.0 + vx.abs()));
            let lhs = theta.log_theta(x).unwrap() + vx;
            let rhs = (w0 / env.rates(x).unwrap().plus).ln();
            prop_assert!((lhs.exp() / rhs.exp() - 1.0).abs() <= 1e-12);
            prop_assert!(lhs.exp() >= 1.0 / k2 * (1.0 - 1e-12) && lhs.exp() <= k2 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn ruin_closed_form_matches_linear_solves(spec in spec_strategy(), seed in any::<u64>(), a in -60i64..-1, b in 2i64..60) {
        let env = Environment::sample(&spec, seed, Window::new(a, b).unwrap());
        let solved = absorption_solve(&env, a, b).unwrap();
        let dense = dense_ruin(&env, a, b);
        let v: Vec<f64> = (a..=b).map(|x| summed_potential(&env, x)).collect();
        let spread = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        let dense_tol = 1e-13 * spread.exp() * (b - a) as f64;
        for z in a + 1..b {
            let p = ruin_probability(&env, a, z, b).unwrap();
            let k = (z - a - 1) as usize;
            prop_assert!((p - solved[k]).abs() <= 1e-10 * p.max(1e-300), "{p} vs {}", solved[k]);
            prop_assert!((p - dense[k]).abs() <= dense_tol, "{p} vs dense {}", dense[k]);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn walks_are_reproducible_and_split_invariant(seed in any::<u64>(), trial in any::<u64>(), cut in 0.0f64..50.0) {
        let env = Environment::sample(&DistributionSpec::default_two_point(), seed, Window::symmetric(400));
        let run = |pieces: &[f64]| {
            let mut s = WalkState::for_trial(seed, trial, 0);
            let mut path = Vec::new();
            for &h in pieces {
                advance(&env, &mut s, h, |t, x| { path.push((t, x)); false }).unwrap();
            }
            (s.position, path)
        };
        let whole = run(&[50.0]);
        prop_assert_eq!(&whole, &run(&[50.0]));
        prop_assert_eq!(&whole, &run(&[cut, 50.0]));
        prop_assert!(whole.1.windows(2).all(|w| w[0].0 < w[1].0 && (w[0].1 - w[1].1).abs() == 1));
    }

    #[test]
    fn wilson_interval_contains_the_estimate(k in 0u64..1000, extra in 0u64..1000, z in 0.5f64..4.0) {
        let p = Proportion::new(k, k + extra + 1, z);
        prop_assert!(p.lower <= p.estimate && p.estimate <= p.upper);
        prop_assert!(0.0 <= p.lower && p.upper <= 1.0);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn gamma_sets_three_to_five_are_monotone_in_eps(seed in any::<u64>(), log_t in 3.0f64..6.0) {
        let env = Environment::sample(&DistributionSpec::default_two_point(), seed, Window::symmetric(64));
        let t = TimeScale::from_log(log_t).unwrap();
        let mut previous: Option<Vec<bool>> = None;
        for eps in [0.4, 0.2, 0.1, 0.05] {
            let params = Params { eps, ..Params::default() };
            let q = prepare(&env, t, &params).unwrap();
            let rep = classify(&q, &params).unwrap();
            let flags: Vec<bool> = rep.sets[2..7].iter().map(|s| s.member == Some(true)).collect();
            if let Some(prev) = &previous {
                for (was, is) in prev.iter().zip(&flags) {
                    prop_assert!(!was || *is);
                }
            }
            previous = Some(flags);
        }
    }
}

#[test]
fn documented_examples() {
    let f = sampled(vec![5.0, 2.0, 0.0, 3.0, 1.0, 4.0, 6.0], 0);
    let s = |log_t: f64| find_stable_points(&f, TimeScale::from_log(log_t).unwrap()).positions;
    assert_eq!(s(1.5), vec![2.0, 4.0]);
    assert_eq!(s(3.5), vec![2.0]);
    assert_eq!(find_peaks(&f, TimeScale::from_log(1.5).unwrap()), vec![3.0]);

    let g = sampled(vec![2.0, 0.0, 3.0, 1.0, 4.0], 0);
    assert_eq!(elevation_unchecked(&g, (0.0, 4.0)).unwrap(), 2.0);
    assert_eq!(elevation_pairwise(&g, (0.0, 4.0)).unwrap(), 2.0);

    let v = SampledFunction::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], FunctionKind::Generic).unwrap();
    assert_eq!(elevation_unchecked(&v, (0.0, 2.0)).unwrap(), 0.0);
}
