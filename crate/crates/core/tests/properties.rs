use proptest::prelude::*;

use comma_ea::config::{parse_experiment_config, LambdaRule, Rounding};
use comma_ea::ea::{mutate_counted, select_next, Engine, FlipCountSampler, Individual, Population};
use comma_ea::level::{counts, update_level, CurrentLevelState, LevelStatus};
use comma_ea::number_theory::{epsilon_gap, floor_mu_e};
use comma_ea::potential::{h_potential, log_g_from_histogram, PotentialParams};
use comma_ea::surrogate::{
    additive_drift_bound, negative_drift_bound, phase_process_run, DriftDirection,
    PhaseProcessConfig,
};
use comma_ea::transition::{binom_pmf_vec, delta_up_bound, FitnessState};
use comma_ea::{BitString, RngStream};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutation_keeps_length_and_fitness_cache(n in 1usize..300, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let sampler = FlipCountSampler::new(n);
        let x = Individual::random(n, &mut rng);
        let m = mutate_counted(&x, &sampler, &mut rng);
        prop_assert_eq!(m.child.len(), n);
        prop_assert_eq!(m.child.fitness(), m.child.bits().count_ones());
        let hamming = x.bits().words().iter().zip(m.child.bits().words())
            .map(|(a, b)| (a ^ b).count_ones() as usize).sum::<usize>();
        prop_assert_eq!(hamming, m.flips);
    }

    #[test]
    fn bitstring_round_trips(bits in proptest::collection::vec(any::<bool>(), 1..200)) {
        let b = BitString::from_bools(&bits);
        let again: BitString = b.to_string().parse().unwrap();
        prop_assert_eq!(&again, &b);
        prop_assert_eq!(b.count_ones(), bits.iter().filter(|&&x| x).count());
    }

    #[test]
    fn selection_keeps_the_mu_best(n in 2usize..40, mu in 1usize..20, extra in 0usize..30, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 1);
        let offspring: Vec<Individual> = (0..mu + extra).map(|_| Individual::random(n, &mut rng)).collect();
        let pop = select_next(&offspring, mu, &mut rng).unwrap();
        prop_assert_eq!(pop.mu(), mu);
        prop_assert!(pop.check_invariants());
        let mut all: Vec<u32> = offspring.iter().map(|x| x.fitness() as u32).collect();
        all.sort_unstable_by(|a, b| b.cmp(a));
        let mut kept = pop.fitness().to_vec();
        kept.sort_unstable_by(|a, b| b.cmp(a));
        prop_assert_eq!(&kept[..], &all[..mu]);
    }

    #[test]
    fn engine_steps_preserve_invariants(n in 5usize..80, mu in 1usize..12, ratio in 1usize..5, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 2);
        let mut e = Engine::random(n, mu, mu * ratio, &mut rng).unwrap();
        for g in 1..=20u64 {
            e.step_fast(&mut rng);
            prop_assert!(e.population().check_invariants());
            prop_assert_eq!(e.generation(), g);
            prop_assert_eq!(e.evaluations(), (mu + g as usize * mu * ratio) as u64);
        }
    }

    #[test]
    fn level_counts_match_histogram(n in 5usize..60, mu in 1usize..30, seed in any::<u64>(), steps in 0usize..20) {
        let mut rng = RngStream::new(seed, 3);
        let mut e = Engine::random(n, mu, 3 * mu, &mut rng).unwrap();
        let mut state = CurrentLevelState::initial(e.population());
        for _ in 0..steps {
            e.step_fast(&mut rng);
            state = update_level(&state, e.population());
            let (x, y) = counts(e.population(), state.f);
            let at_or_above = e.population().fitness().iter().filter(|&&f| f as usize >= state.f).count();
            prop_assert_eq!(x + y, at_or_above);
            if state.status == LevelStatus::Active {
                prop_assert_eq!((state.x, state.y), (x, y));
            }
        }
    }

    #[test]
    fn h_is_increasing_on_its_domain(mu in 1usize..2000) {
        let mut prev = h_potential(0, mu).unwrap();
        for x in 1..=mu {
            let v = h_potential(x, mu).unwrap();
            prop_assert!(v > prev);
            prev = v;
        }
        prop_assert!(h_potential(mu + 1, mu).is_err());
    }

    #[test]
    fn g_is_monotone_in_the_histogram(n in 10usize..200, eps in 0.05f64..0.95, f in 0usize..200) {
        let p = PotentialParams::new(eps, n).unwrap();
        let f = f % (n + 1);
        let mut hist = vec![0usize; n + 1];
        hist[f] = 1;
        let base = log_g_from_histogram(&hist, &p);
        if f < n {
            let mut up = vec![0usize; n + 1];
            up[f + 1] = 1;
            prop_assert!(log_g_from_histogram(&up, &p) >= base);
        }
        hist[f] = 2;
        prop_assert!(log_g_from_histogram(&hist, &p) >= base);
    }

    #[test]
    fn binomial_pmf_sums_to_one(m in 1usize..400, p in 0.0f64..=1.0) {
        let s: f64 = binom_pmf_vec(m, p).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn improvement_bound_decreases_in_k(n in 1usize..100, d in 0usize..100) {
        let d = d % (n + 1);
        let st = FitnessState::new(n, d).unwrap();
        for k in 2..=d {
            prop_assert!(delta_up_bound(&st, k).unwrap() <= delta_up_bound(&st, k - 1).unwrap());
        }
    }

    #[test]
    fn negative_drift_bound_is_monotone(
        l in 0.01f64..5.0, p in 1.0f64..100.0, d in 0.0f64..2.0, w in 0.0f64..10.0,
        a in 0.0f64..10.0, gap in 0.0f64..10.0, bump in 0.0f64..1.0,
    ) {
        let b = a + gap;
        let v = negative_drift_bound(l, p, d, w, a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(negative_drift_bound(l + bump, p, d, w, a, b).unwrap() <= v);
        prop_assert!(negative_drift_bound(l, p + bump, d, w, a, b).unwrap() >= v);
        prop_assert!(negative_drift_bound(l, p, d + bump, w, a, b).unwrap() >= v);
        prop_assert!(negative_drift_bound(l, p, d, w + bump, a, b).unwrap() >= v);
        prop_assert!(negative_drift_bound(l, p, d, w, a, b + bump).unwrap() <= v);
    }

    #[test]
    fn additive_bound_is_monotone(x in 0.0f64..1e6, delta in 0.001f64..100.0, bump in 0.0f64..10.0) {
        let v = additive_drift_bound(x, delta, DriftDirection::Upper).unwrap();
        prop_assert!(additive_drift_bound(x + bump, delta, DriftDirection::Upper).unwrap() >= v);
        prop_assert!(additive_drift_bound(x, delta + bump, DriftDirection::Lower).unwrap() <= v);
    }

    #[test]
    fn phase_process_partitions_the_trace(
        start in 80usize..100, moves in proptest::collection::vec(-1i64..=1, 1..400), l in 1u64..30,
    ) {
        let n = 100usize;
        let mut f = start as i64;
        let mut f_tops = vec![start];
        for m in moves {
            f = (f + m).clamp(0, n as i64);
            f_tops.push(f as usize);
        }
        let cfg = PhaseProcessConfig { n: n as u64, c: 0.25, l, s: 1, beta: 1.0, big_lambda: 1.0, a: 0.0, b: 100f64.powf(0.25) };
        let out = phase_process_run(&f_tops, &cfg);
        let mut next = 0;
        for ph in &out.phases {
            prop_assert_eq!(ph.start, next);
            prop_assert!(ph.length >= 1 && ph.length <= l);
            next += ph.length;
        }
        prop_assert_eq!(out.consumed, next);
        prop_assert!((out.consumed as usize) < f_tops.len());
        prop_assert!(out.sequence.iter().all(|&(_, z)| (0.0..=cfg.b).contains(&z)));
    }

    #[test]
    fn floor_mu_e_is_the_largest_admissible_lambda(mu in 1u64..1_000_000) {
        let f = floor_mu_e(mu);
        prop_assert!(epsilon_gap(mu, f).unwrap() > 0.0);
        prop_assert!(epsilon_gap(mu, f + 1).is_err());
    }

    #[test]
    fn ratio_rule_resolves_like_the_formula(mu in 1usize..5000, ratio in 0.4f64..3.0) {
        for r in [Rounding::Floor, Rounding::Ceil, Rounding::Nearest] {
            let rule = LambdaRule::Ratio { ratio, rounding: r };
            let want = r.apply(ratio * std::f64::consts::E * mu as f64) as usize;
            prop_assert_eq!(rule.resolve(mu), want);
        }
    }

    #[test]
    fn config_echo_reparses(n in 1usize..10_000, mu in 1usize..100, seed in any::<u32>(), reps in 1usize..50) {
        let lambda = 3 * mu;
        let src = format!("n = {n}\nmu = {mu}\nlambda = {lambda}\nseed = {seed}\nreplicates = {reps}\n");
        let cfg = parse_experiment_config(&src).unwrap();
        let mut table: toml::Table = toml::from_str(&cfg.to_toml()).unwrap();
        table.remove("lambda_resolved");
        table.remove("budget_generations");
        let again = parse_experiment_config(&toml::to_string(&table).unwrap()).unwrap();
        prop_assert_eq!(again, cfg);
    }
}

#[test]
fn population_with_levels_has_requested_histogram() {
    let mut rng = RngStream::new(1, 0);
    let pop = Population::with_levels(30, &[(29, 3), (10, 4)], &mut rng).unwrap();
    let h = pop.histogram();
    assert_eq!((h[29], h[10], pop.mu()), (3, 4, 7));
}
