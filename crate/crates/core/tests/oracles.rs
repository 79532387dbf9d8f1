mod common;

use std::collections::BTreeMap;

use comma_ea::ea::{mutate_counted, FlipCountSampler, Individual};
use comma_ea::number_theory::{best_lambda_exhaustive, epsilon_gap, floor_mu_e};
use comma_ea::stats::{chi_square_p_value, compensated_sum};
use comma_ea::surrogate::{surrogate_step, SurrogateConfig};
use comma_ea::transition::{
    binom_pmf_vec, delta_pmf_exact, offspring_fitness_pmf, BinomialSpec, FitnessState,
};
use comma_ea::RngStream;

#[test]
fn exact_law_matches_mask_enumeration() {
    for n in 1..=10 {
        for d in 0..=n {
            let exact = delta_pmf_exact(&FitnessState::new(n, d).unwrap()).unwrap();
            for (k, p) in common::brute_delta_pmf(n, d) {
                assert!((exact[&k] - p).abs() < 1e-12, "n={n} d={d} k={k}");
            }
        }
    }
}

#[test]
fn offspring_law_matches_oracle() {
    for n in [5, 9, 12] {
        for f in 0..=n {
            let lib = offspring_fitness_pmf(n, f).unwrap();
            let oracle = common::brute_offspring_pmf(n, f);
            for (a, b) in lib.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sampled_mutations_follow_the_exact_law() {
    let (n, d) = (8, 3);
    let mut rng = RngStream::new(11, 0);
    let sampler = FlipCountSampler::new(n);
    let parent = Individual::with_fitness(n, n - d, &mut rng);
    let trials = 400_000;
    let mut counts: BTreeMap<i64, f64> = BTreeMap::new();
    for _ in 0..trials {
        let child = mutate_counted(&parent, &sampler, &mut rng).child;
        *counts.entry(child.fitness() as i64 - (n - d) as i64).or_default() += 1.0;
    }
    let law = common::brute_delta_pmf(n, d);
    // Pool the rare tails so every expected count is at least 5.
    let (mut obs, mut exp) = (vec![0.0; 1], vec![0.0; 1]);
    for (k, p) in &law {
        let o = counts.get(k).copied().unwrap_or(0.0);
        if p * trials as f64 >= 5.0 {
            obs.push(o);
            exp.push(p * trials as f64);
        } else {
            obs[0] += o;
            exp[0] += p * trials as f64;
        }
    }
    assert!(chi_square_p_value(&obs, &exp) > 1e-4, "{obs:?} vs {exp:?}");
}

#[test]
fn binomial_pmf_matches_exact_rationals() {
    for (m, num, den) in [(10u64, 1u64, 3u64), (40, 7, 10), (60, 1, 100)] {
        let pmf = binom_pmf_vec(m as usize, num as f64 / den as f64);
        for x in 0..=m {
            let tail: f64 = compensated_sum(pmf[x as usize..].iter().copied());
            let exact = common::binomial_upper_tail_exact(m, num, den, x);
            assert!((tail - exact).abs() < 1e-12, "m={m} x={x}: {tail} vs {exact}");
        }
    }
    assert!(BinomialSpec::new(0, 0.5).is_err());
}

#[test]
fn plain_chain_is_a_martingale_below_the_cap() {
    // λ = eμ is not an integer; use p scaled so that λ·s/(eμ) = s exactly.
    for mu in [5usize, 12, 30] {
        for s in 1..=mu / 4 {
            let lambda = 4 * mu;
            let p = s as f64 / lambda as f64;
            let pmf = binom_pmf_vec(lambda, p);
            let mean = compensated_sum(pmf.iter().enumerate().map(|(k, q)| k as f64 * q));
            assert!((mean - s as f64).abs() < 1e-10);
        }
    }
}

#[test]
fn surrogate_mean_matches_binomial_mean() {
    let cfg = SurrogateConfig::plain(100, 272).unwrap();
    let mut rng = RngStream::new(3, 0);
    let steps = 200_000;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for t in 0..steps {
        let x = surrogate_step(50, &cfg, t, &mut rng).unwrap().next as f64;
        sum += x;
        sq += x * x;
    }
    let mean = sum / steps as f64;
    let se = ((sq / steps as f64 - mean * mean) / steps as f64).sqrt();
    let expected = 272.0 * 50.0 / (std::f64::consts::E * 100.0);
    assert!((mean - expected).abs() < 3.0 * se + 1e-9, "{mean} vs {expected}");
}

#[test]
fn worst_admissible_lambda_is_floor_mu_e() {
    for mu in 1..=300 {
        let f = floor_mu_e(mu);
        assert!(epsilon_gap(mu, f).is_ok() && epsilon_gap(mu, f + 1).is_err(), "mu={mu}");
        let best = best_lambda_exhaustive(mu);
        assert!(best == f || best == f + 1, "mu={mu}");
    }
}
