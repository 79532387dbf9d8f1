//! The (μ,λ) EA on OneMax.
//!
//! One generation picks λ parents uniformly at random from the current
//! population, applies standard-bit mutation (each bit flips independently
//! with probability 1/n) to a copy of each, and keeps the μ fittest offspring.
//! Parents are always discarded. Ties at the selection boundary are broken
//! uniformly at random.
//!
//! The hot path keeps populations as flat word buffers and samples mutation
//! as "draw the flip count k ~ Bin(n, 1/n), then k distinct uniform
//! positions", which has the same law as flipping every bit independently.
//! [`mutate_per_bit`] is the literal per-bit reference.

use crate::bits::{popcount, words_for, BitString};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::telemetry::{RunTelemetry, TelemetryRecorder};

/// A bit string with its cached OneMax value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Individual {
    bits: BitString,
    fitness: usize,
}

impl Individual {
    pub fn new(bits: BitString) -> Self {
        let fitness = bits.count_ones();
        Self { bits, fitness }
    }

    /// Uniform random string of length `n`.
    pub fn random(n: usize, rng: &mut RngStream) -> Self {
        let mut words = vec![0u64; words_for(n)];
        for w in &mut words {
            *w = rand::RngCore::next_u64(rng);
        }
        Self::new(BitString::from_words(n, &words))
    }

    /// Uniform random string of length `n` with exactly `ones` one-bits.
    pub fn with_fitness(n: usize, ones: usize, rng: &mut RngStream) -> Self {
        assert!(ones <= n, "fitness {ones} exceeds length {n}");
        let mut idx: Vec<usize> = (0..n).collect();
        let mut bits = BitString::zeros(n);
        for i in 0..ones {
            let j = i + rng.below(n - i);
            idx.swap(i, j);
            bits.set(idx[i], true);
        }
        Self {
            bits,
            fitness: ones,
        }
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn fitness(&self) -> usize {
        self.fitness
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Hamming distance to the all-ones optimum.
    pub fn distance(&self) -> usize {
        self.bits.len() - self.fitness
    }

    pub fn is_optimal(&self) -> bool {
        self.fitness == self.bits.len()
    }
}

/// Sampler for the number of flipped bits, Bin(n, 1/n), by inverse CDF.
#[derive(Clone, Debug)]
pub struct FlipCountSampler {
    cdf: Vec<f64>,
}

impl FlipCountSampler {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "string length must be positive");
        let pmf = crate::transition::binom_pmf_vec(n, 1.0 / n as f64);
        let mut cdf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for p in pmf {
            acc += p;
            cdf.push(acc);
        }
        // Guarantee termination regardless of rounding in the tail.
        *cdf.last_mut().unwrap() = f64::INFINITY;
        Self { cdf }
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let u = rng.unit();
        let mut k = 0;
        while u >= self.cdf[k] {
            k += 1;
        }
        k
    }
}

/// Flips `k` distinct uniformly chosen positions of `words` (a string of
/// length `n`) and returns the new one-count, starting from `fitness`.
#[inline]
fn flip_distinct(
    words: &mut [u64],
    n: usize,
    k: usize,
    mut fitness: usize,
    rng: &mut RngStream,
) -> usize {
    let mut chosen = [0usize; 16];
    let mut spill: Vec<usize> = Vec::new();
    for j in 0..k {
        let pos = loop {
            let p = rng.below(n);
            let dup = if j < chosen.len() {
                chosen[..j].contains(&p)
            } else {
                chosen.contains(&p) || spill.contains(&p)
            };
            if !dup {
                break p;
            }
        };
        if j < chosen.len() {
            chosen[j] = pos;
        } else {
            spill.push(pos);
        }
        let w = &mut words[pos >> 6];
        let m = 1u64 << (pos & 63);
        *w ^= m;
        if *w & m != 0 {
            fitness += 1;
        } else {
            fitness -= 1;
        }
    }
    fitness
}

/// Result of one mutation, with the number of flipped bits.
#[derive(Clone, Debug)]
pub struct Mutation {
    pub child: Individual,
    pub flips: usize,
}

/// Standard-bit mutation with rate 1/n. The parent is not modified.
pub fn mutate(x: &Individual, rng: &mut RngStream) -> Individual {
    mutate_counted(x, &FlipCountSampler::new(x.len()), rng).child
}

/// [`mutate`] with a reusable flip-count sampler, reporting the flip count.
pub fn mutate_counted(x: &Individual, sampler: &FlipCountSampler, rng: &mut RngStream) -> Mutation {
    let n = x.len();
    let k = sampler.sample(rng);
    let mut words = x.bits.words().to_vec();
    let fitness = flip_distinct(&mut words, n, k, x.fitness, rng);
    Mutation {
        child: Individual {
            bits: BitString::from_words(n, &words),
            fitness,
        },
        flips: k,
    }
}

/// Reference mutation: every bit flips independently with probability 1/n.
pub fn mutate_per_bit(x: &Individual, rng: &mut RngStream) -> Mutation {
    let n = x.len();
    let p = 1.0 / n as f64;
    let mut bits = x.bits.clone();
    let mut flips = 0;
    for i in 0..n {
        if rng.bernoulli(p) {
            bits.flip(i);
            flips += 1;
        }
    }
    Mutation {
        child: Individual::new(bits),
        flips,
    }
}

/// A multiset of μ individuals stored as one flat word buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Population {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    fitness: Vec<u32>,
    generation: u64,
}

impl Population {
    pub fn from_individuals(members: &[Individual]) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidParameter("population must not be empty".into()))?;
        let n = first.len();
        if n == 0 {
            return Err(Error::InvalidParameter("string length must be positive".into()));
        }
        let words = words_for(n);
        let mut bits = Vec::with_capacity(words * members.len());
        let mut fitness = Vec::with_capacity(members.len());
        for m in members {
            if m.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "mixed string lengths {} and {}",
                    n,
                    m.len()
                )));
            }
            bits.extend_from_slice(m.bits.words());
            fitness.push(m.fitness as u32);
        }
        Ok(Self {
            n,
            words,
            bits,
            fitness,
            generation: 0,
        })
    }

    /// μ independent uniform random strings.
    pub fn random(n: usize, mu: usize, rng: &mut RngStream) -> Result<Self> {
        if mu == 0 {
            return Err(Error::InvalidParameter("mu must be at least 1".into()));
        }
        let members: Vec<Individual> = (0..mu).map(|_| Individual::random(n, rng)).collect();
        Self::from_individuals(&members)
    }

    /// A population with `counts[i].1` random members of fitness
    /// `counts[i].0` each.
    pub fn with_levels(n: usize, counts: &[(usize, usize)], rng: &mut RngStream) -> Result<Self> {
        let mut members = Vec::new();
        for &(f, c) in counts {
            if f > n {
                return Err(Error::InvalidParameter(format!("fitness {f} exceeds n = {n}")));
            }
            members.extend((0..c).map(|_| Individual::with_fitness(n, f, rng)));
        }
        Self::from_individuals(&members)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> usize {
        self.fitness.len()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn fitness(&self) -> &[u32] {
        &self.fitness
    }

    pub fn member_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn member(&self, i: usize) -> Individual {
        Individual {
            bits: BitString::from_words(self.n, self.member_words(i)),
            fitness: self.fitness[i] as usize,
        }
    }

    pub fn members(&self) -> impl Iterator<Item = Individual> + '_ {
        (0..self.mu()).map(|i| self.member(i))
    }

    /// Number of members per fitness value, indexed `0..=n`.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.n + 1];
        for &f in &self.fitness {
            h[f as usize] += 1;
        }
        h
    }

    pub fn f_top(&self) -> usize {
        self.fitness.iter().copied().max().unwrap_or(0) as usize
    }

    /// Number of members at the top fitness.
    pub fn x_top(&self) -> usize {
        let top = self.f_top() as u32;
        self.fitness.iter().filter(|&&f| f == top).count()
    }

    pub fn contains_optimum(&self) -> bool {
        self.fitness.iter().any(|&f| f as usize == self.n)
    }

    /// Recomputes every cached fitness from the bits.
    pub fn check_invariants(&self) -> bool {
        (0..self.mu()).all(|i| popcount(self.member_words(i)) == self.fitness[i] as usize)
    }
}

/// The λ offspring of one generation before selection.
#[derive(Clone, Debug)]
pub struct OffspringPool {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    fitness: Vec<u32>,
    parent: Vec<u32>,
    parent_fitness: Vec<u32>,
    flips: Vec<u32>,
}

impl OffspringPool {
    fn new(n: usize, lambda: usize) -> Self {
        let words = words_for(n);
        Self {
            n,
            words,
            bits: vec![0; words * lambda],
            fitness: vec![0; lambda],
            parent: vec![0; lambda],
            parent_fitness: vec![0; lambda],
            flips: vec![0; lambda],
        }
    }

    pub fn len(&self) -> usize {
        self.fitness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitness.is_empty()
    }

    pub fn fitness(&self) -> &[u32] {
        &self.fitness
    }

    pub fn parent_index(&self) -> &[u32] {
        &self.parent
    }

    pub fn parent_fitness(&self) -> &[u32] {
        &self.parent_fitness
    }

    pub fn flips(&self) -> &[u32] {
        &self.flips
    }

    /// An offspring is a bitwise copy of its parent iff no bit flipped
    /// (flipped positions are distinct, so flips never cancel).
    pub fn is_copy(&self, i: usize) -> bool {
        self.flips[i] == 0
    }

    pub fn member(&self, i: usize) -> Individual {
        Individual {
            bits: BitString::from_words(self.n, &self.bits[i * self.words..(i + 1) * self.words]),
            fitness: self.fitness[i] as usize,
        }
    }
}

/// Everything an observer sees about one generation.
pub struct GenerationEvent<'a> {
    pub before: &'a Population,
    pub offspring: &'a OffspringPool,
    pub after: &'a Population,
    /// Whether an optimal offspring was created during this generation.
    pub optimum_created: bool,
}

pub trait Observer {
    fn on_generation(&mut self, event: &GenerationEvent<'_>);
}

/// When a run counts the optimum as found.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstHit {
    /// As soon as an optimal offspring is evaluated, even if selection then
    /// discards it.
    #[default]
    Creation,
    /// Only once an optimal individual survives selection.
    Survival,
}

/// Reusable selection buffers.
#[derive(Clone, Debug, Default)]
struct SelectionScratch {
    hist: Vec<u32>,
    boundary: Vec<u32>,
    chosen: Vec<u32>,
}

/// Indices of the μ survivors among offspring with the given fitness values.
/// Every offspring strictly above the cut survives; the remaining slots are
/// filled by a uniformly random subset of the boundary group.
fn select_indices(
    fitness: &[u32],
    n: usize,
    mu: usize,
    rng: &mut RngStream,
    scratch: &mut SelectionScratch,
) {
    scratch.hist.clear();
    scratch.hist.resize(n + 1, 0);
    for &f in fitness {
        scratch.hist[f as usize] += 1;
    }
    let mut above = 0usize;
    let mut cut = n;
    loop {
        let c = scratch.hist[cut] as usize;
        if above + c >= mu {
            break;
        }
        above += c;
        cut -= 1;
    }
    let need = mu - above;
    let cut = cut as u32;
    scratch.chosen.clear();
    scratch.boundary.clear();
    for (i, &f) in fitness.iter().enumerate() {
        if f > cut {
            scratch.chosen.push(i as u32);
        } else if f == cut {
            scratch.boundary.push(i as u32);
        }
    }
    // Partial Fisher-Yates: the first `need` entries are a uniform subset.
    let b = scratch.boundary.len();
    for i in 0..need {
        let j = i + rng.below(b - i);
        scratch.boundary.swap(i, j);
    }
    scratch.chosen.extend_from_slice(&scratch.boundary[..need]);
}

/// Keeps the μ fittest of `offspring`, breaking boundary ties uniformly.
pub fn select_next(offspring: &[Individual], mu: usize, rng: &mut RngStream) -> Result<Population> {
    if offspring.len() < mu {
        return Err(Error::LambdaBelowMu {
            mu,
            lambda: offspring.len(),
        });
    }
    if mu == 0 {
        return Err(Error::InvalidParameter("mu must be at least 1".into()));
    }
    let n = offspring[0].len();
    let fitness: Vec<u32> = offspring.iter().map(|x| x.fitness as u32).collect();
    let mut scratch = SelectionScratch::default();
    select_indices(&fitness, n, mu, rng, &mut scratch);
    let survivors: Vec<Individual> = scratch
        .chosen
        .iter()
        .map(|&i| offspring[i as usize].clone())
        .collect();
    Population::from_individuals(&survivors)
}

/// The EA state machine: a population, its offspring buffer and counters.
#[derive(Clone, Debug)]
pub struct Engine {
    n: usize,
    mu: usize,
    lambda: usize,
    sampler: FlipCountSampler,
    pop: Population,
    next: Population,
    offspring: OffspringPool,
    scratch: SelectionScratch,
    evaluations: u64,
}

/// What happened in one call to [`Engine::step`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub optimum_created: bool,
    pub optimum_survived: bool,
}

impl Engine {
    /// Starts from `pop` (generation counter preserved) with λ offspring per
    /// generation.
    pub fn with_population(pop: Population, lambda: usize) -> Result<Self> {
        let mu = pop.mu();
        if lambda < mu {
            return Err(Error::LambdaBelowMu { mu, lambda });
        }
        let n = pop.n();
        Ok(Self {
            n,
            mu,
            lambda,
            sampler: FlipCountSampler::new(n),
            next: pop.clone(),
            offspring: OffspringPool::new(n, lambda),
            scratch: SelectionScratch::default(),
            evaluations: mu as u64,
            pop,
        })
    }

    /// Starts from μ uniform random strings.
    pub fn random(n: usize, mu: usize, lambda: usize, rng: &mut RngStream) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if lambda < mu {
            return Err(Error::LambdaBelowMu { mu, lambda });
        }
        Self::with_population(Population::random(n, mu, rng)?, lambda)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn offspring(&self) -> &OffspringPool {
        &self.offspring
    }

    pub fn generation(&self) -> u64 {
        self.pop.generation
    }

    /// μ + t·λ after t generations (counted from this engine's start).
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Creates the λ offspring without selecting. Returns whether any of them
    /// is optimal.
    fn breed(&mut self, rng: &mut RngStream) -> bool {
        let w = self.pop.words;
        let n = self.n;
        let off = &mut self.offspring;
        let mut hit = false;
        for i in 0..self.lambda {
            let p = rng.below(self.mu);
            let pf = self.pop.fitness[p] as usize;
            let dst = &mut off.bits[i * w..(i + 1) * w];
            dst.copy_from_slice(&self.pop.bits[p * w..(p + 1) * w]);
            let k = self.sampler.sample(rng);
            let f = if k == 0 { pf } else { flip_distinct(dst, n, k, pf, rng) };
            off.fitness[i] = f as u32;
            off.parent[i] = p as u32;
            off.parent_fitness[i] = pf as u32;
            off.flips[i] = k as u32;
            hit |= f == n;
        }
        self.evaluations += self.lambda as u64;
        hit
    }

    fn select(&mut self, rng: &mut RngStream) {
        select_indices(&self.offspring.fitness, self.n, self.mu, rng, &mut self.scratch);
        let w = self.pop.words;
        for (slot, &i) in self.scratch.chosen.iter().enumerate() {
            let i = i as usize;
            self.next.bits[slot * w..(slot + 1) * w]
                .copy_from_slice(&self.offspring.bits[i * w..(i + 1) * w]);
            self.next.fitness[slot] = self.offspring.fitness[i];
        }
        self.next.generation = self.pop.generation + 1;
        std::mem::swap(&mut self.pop, &mut self.next);
        debug_assert_eq!(self.pop.mu(), self.mu);
    }

    /// One generation, notifying `observers` afterwards.
    pub fn step(&mut self, rng: &mut RngStream, observers: &mut [&mut dyn Observer]) -> StepOutcome {
        let optimum_created = self.breed(rng);
        self.select(rng);
        let optimum_survived = self.pop.contains_optimum();
        if !observers.is_empty() {
            let event = GenerationEvent {
                before: &self.next,
                offspring: &self.offspring,
                after: &self.pop,
                optimum_created,
            };
            for o in observers.iter_mut() {
                o.on_generation(&event);
            }
        }
        StepOutcome {
            optimum_created,
            optimum_survived,
        }
    }

    /// One generation without observers.
    #[inline]
    pub fn step_fast(&mut self, rng: &mut RngStream) -> StepOutcome {
        self.step(rng, &mut [])
    }
}

/// One generation starting from `pop`; returns the next population.
pub fn run_generation(pop: &Population, lambda: usize, rng: &mut RngStream) -> Result<Population> {
    let mut engine = Engine::with_population(pop.clone(), lambda)?;
    engine.step_fast(rng);
    Ok(engine.pop)
}

/// Outcome of [`run_until`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RunResult {
    pub generations: u64,
    /// μ initial evaluations plus λ per generation.
    pub evaluations: u64,
    pub success: bool,
    #[serde(skip)]
    pub telemetry: Option<RunTelemetry>,
}

/// Runs the EA from a uniform random population until the optimum is found
/// (per `config.first_hit`) or the generation budget is spent.
pub fn run_until(config: &ExperimentConfig, rng: &mut RngStream) -> Result<RunResult> {
    let lambda = config.lambda();
    let pop = Population::random(config.n, config.mu, rng)?;
    run_from(pop, lambda, config, rng)
}

/// [`run_until`] from a given starting population.
pub fn run_from(
    pop: Population,
    lambda: usize,
    config: &ExperimentConfig,
    rng: &mut RngStream,
) -> Result<RunResult> {
    let budget = config.budget_generations();
    let mut engine = Engine::with_population(pop, lambda)?;
    let mut recorder = if config.trackers.is_empty() {
        None
    } else {
        Some(TelemetryRecorder::new(config, engine.population())?)
    };
    let mut success = engine.population().contains_optimum();
    while !success && engine.generation() < budget {
        let out = match recorder.as_mut() {
            Some(r) => engine.step(rng, &mut [r as &mut dyn Observer]),
            None => engine.step_fast(rng),
        };
        success = match config.first_hit {
            FirstHit::Creation => out.optimum_created,
            FirstHit::Survival => out.optimum_survived,
        };
    }
    Ok(RunResult {
        generations: engine.generation(),
        evaluations: engine.evaluations(),
        success,
        telemetry: recorder.map(TelemetryRecorder::finish),
    })
}
