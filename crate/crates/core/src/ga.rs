//! Binary genetic algorithm for wrapper feature selection: Boltzmann parent
//! selection with the pressure parameter calibrated so the best half of the
//! population holds a fixed probability mass, roulette-wheel sampling,
//! single/double/uniform crossover picked per pair, an independent mutant
//! stream, and merge-sort-truncate survivor selection.
//!
//! All randomness is drawn from streams derived from (run seed, generation,
//! slot), so parallel and serial evaluation schedules produce identical
//! results and a run can resume from a checkpoint without saved RNG state.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SelectionMask};
use crate::error::{Error, Result};
use crate::neuro::{evaluate_cost, CostConfig, CostValue};
use crate::rng;

/// A chromosome with its evaluated cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Individual {
    pub position: SelectionMask,
    pub cost: CostValue,
}

/// Population ordered ascending by cost.
pub type Population = Vec<Individual>;

/// Crossover operator choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossoverMethod {
    SinglePoint,
    DoublePoint,
    Uniform,
}

/// Which cost form feeds the Boltzmann exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoltzmannForm {
    /// exp(-beta * J / LargestCost): scale-free, the form used by the solver.
    NormalizedByLargest,
    /// exp(-beta * J): raw costs.
    Raw,
}

/// GA settings. Defaults follow the best-performing parameter study row
/// (crossover 0.8, mutation 0.3, population 700).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_iterations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Per-gene flip probability; `None` uses max(1/m, 0.01).
    pub per_gene_flip_prob: Option<f64>,
    /// (single, double, uniform), summing to 1.
    pub crossover_method_probs: (f64, f64, f64),
    pub target_top_half_mass: f64,
    pub boltzmann_form: BoltzmannForm,
    /// Optional cap on cost-function evaluations.
    pub nfe_budget: Option<usize>,
    /// Memoize costs by mask bits instead of re-evaluating duplicates.
    pub cache_costs: bool,
    /// Bernoulli density of initial chromosomes.
    pub init_density: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 700,
            max_iterations: 100,
            crossover_rate: 0.8,
            mutation_rate: 0.3,
            per_gene_flip_prob: None,
            crossover_method_probs: (0.4, 0.3, 0.3),
            target_top_half_mass: 0.7,
            boltzmann_form: BoltzmannForm::NormalizedByLargest,
            nfe_budget: None,
            cache_costs: false,
            init_density: 0.5,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 || self.population_size % 2 != 0 {
            return Err(Error::InvalidConfig(
                "population_size must be even and >= 4".into(),
            ));
        }
        if !(0.0 < self.crossover_rate && self.crossover_rate < 1.0) {
            return Err(Error::InvalidConfig("crossover_rate must be in (0,1)".into()));
        }
        if !(0.0 < self.mutation_rate && self.mutation_rate < 1.0) {
            return Err(Error::InvalidConfig("mutation_rate must be in (0,1)".into()));
        }
        let (a, b, c) = self.crossover_method_probs;
        if a < 0.0 || b < 0.0 || c < 0.0 || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(
                "crossover_method_probs must be non-negative and sum to 1".into(),
            ));
        }
        if !(0.5 < self.target_top_half_mass && self.target_top_half_mass < 1.0) {
            return Err(Error::InvalidConfig(
                "target_top_half_mass must be in (0.5, 1)".into(),
            ));
        }
        if let Some(p) = self.per_gene_flip_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig("per_gene_flip_prob out of range".into()));
            }
        }
        if !(0.0 < self.init_density && self.init_density < 1.0) {
            return Err(Error::InvalidConfig("init_density must be in (0,1)".into()));
        }
        Ok(())
    }

    pub fn flip_prob(&self, m: usize) -> f64 {
        self.per_gene_flip_prob
            .unwrap_or_else(|| (1.0 / m as f64).max(0.01))
    }

    /// Number of parent pairs crossed per generation.
    pub fn n_crossover_pairs(&self) -> usize {
        (self.crossover_rate * self.population_size as f64 / 2.0).round() as usize
    }

    /// Number of mutants spawned per generation.
    pub fn n_mutants(&self) -> usize {
        (self.mutation_rate * self.population_size as f64).round() as usize
    }
}

/// Boltzmann selection state for one generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionState {
    pub beta: f64,
    pub probabilities: Vec<f64>,
    pub largest_cost: f64,
    /// Set when every cost is equal and the target mass is unreachable.
    pub degenerate: bool,
}

/// Result of a GA run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaResult {
    pub best_mask: SelectionMask,
    pub best_cost: CostValue,
    pub best_cost_trajectory: Vec<f64>,
    pub nfe_used: usize,
    pub seed: u64,
}

/// Selection probabilities p_i proportional to exp(-beta * J_i / largest).
/// All-zero costs yield the uniform vector.
pub fn boltzmann_probabilities(
    costs: &[f64],
    beta: f64,
    largest_cost: f64,
    form: BoltzmannForm,
) -> Result<Vec<f64>> {
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("non-finite cost in population".into()));
    }
    let n = costs.len();
    let scale = match form {
        BoltzmannForm::NormalizedByLargest => {
            if largest_cost <= 0.0 {
                return Ok(vec![1.0 / n as f64; n]);
            }
            largest_cost
        }
        BoltzmannForm::Raw => 1.0,
    };
    // Shift exponents by their maximum before exponentiating; the
    // normalization cancels the shift and large beta stays finite.
    let exponents: Vec<f64> = costs.iter().map(|&j| -beta * j / scale).collect();
    let shift = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|&e| (e - shift).exp()).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::InvalidInput(
            "Boltzmann weights degenerate; beta too large for cost scale".into(),
        ));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Calibrates the selection pressure so the best half of a cost-sorted
/// population holds `target_mass` of the selection probability. Bisection on
/// [0, 1e6]; the mass is monotone non-decreasing in beta.
pub fn calibrate_beta(sorted_costs: &[f64], target_mass: f64, form: BoltzmannForm) -> Result<(f64, bool)> {
    if sorted_costs.len() < 2 {
        return Err(Error::InvalidInput("calibrate_beta needs >= 2 costs".into()));
    }
    if !(0.5 < target_mass && target_mass < 1.0) {
        return Err(Error::InvalidConfig("target_mass must be in (0.5, 1)".into()));
    }
    if sorted_costs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("costs must be sorted ascending".into()));
    }
    let largest = *sorted_costs.last().unwrap();
    let half = sorted_costs.len() / 2;
    let mass_at = |beta: f64| -> Result<f64> {
        let p = boltzmann_probabilities(sorted_costs, beta, largest, form)?;
        Ok(p[..half].iter().sum())
    };

    if (mass_at(0.0)? - target_mass).abs() < 1e-9 {
        return Ok((0.0, false));
    }
    let mut lo = 0.0;
    let mut hi = 1e6;
    let reachable = mass_at(hi)? >= target_mass - 1e-9;
    if !reachable {
        // All costs equal (or tied at the half boundary): mass is stuck below
        // the target for every beta.
        let degenerate = sorted_costs
            .windows(2)
            .all(|w| (w[0] - w[1]).abs() < f64::EPSILON);
        return Ok(if degenerate { (0.0, true) } else { (hi, true) });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_at(mid)? < target_mass {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * (1.0 + hi) {
            break;
        }
    }
    let beta = 0.5 * (lo + hi);
    Ok((beta, false))
}

/// Builds the per-generation selection state from a cost-sorted population.
pub fn selection_state(
    sorted_costs: &[f64],
    target_mass: f64,
    form: BoltzmannForm,
) -> Result<SelectionState> {
    let (beta, degenerate) = calibrate_beta(sorted_costs, target_mass, form)?;
    let largest = *sorted_costs.last().unwrap();
    let probabilities = boltzmann_probabilities(sorted_costs, beta, largest, form)?;
    Ok(SelectionState {
        beta,
        probabilities,
        largest_cost: largest,
        degenerate,
    })
}

/// Roulette-wheel draw: inverts one uniform sample against the cumulative
/// distribution, returning the first index whose cumulative sum reaches u.
pub fn roulette_select(probabilities: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        cumulative += p;
        if cumulative >= u {
            return i;
        }
    }
    probabilities.len() - 1
}

/// Categorical draw over the three crossover methods.
pub fn pick_crossover_method(
    method_probs: (f64, f64, f64),
    rng: &mut impl Rng,
) -> CrossoverMethod {
    let u: f64 = rng.gen();
    if u < method_probs.0 {
        CrossoverMethod::SinglePoint
    } else if u < method_probs.0 + method_probs.1 {
        CrossoverMethod::DoublePoint
    } else {
        CrossoverMethod::Uniform
    }
}

/// Crossover preserving the per-locus gene multiset.
pub fn crossover(
    p1: &SelectionMask,
    p2: &SelectionMask,
    method: CrossoverMethod,
    rng: &mut impl Rng,
) -> Result<(SelectionMask, SelectionMask)> {
    let m = p1.len();
    if p2.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: p2.len(),
        });
    }
    if m < 2 {
        return Err(Error::InvalidInput("crossover needs m >= 2".into()));
    }
    let mut o1 = p1.0.clone();
    let mut o2 = p2.0.clone();
    match method {
        CrossoverMethod::SinglePoint => {
            let cut = rng.gen_range(1..m);
            for i in cut..m {
                std::mem::swap(&mut o1[i], &mut o2[i]);
            }
        }
        CrossoverMethod::DoublePoint => {
            if m == 2 {
                // Only one interior cut exists; degenerate to it.
                std::mem::swap(&mut o1[1], &mut o2[1]);
            } else {
                let a = rng.gen_range(1..m);
                let mut b = rng.gen_range(1..m - 1);
                if b >= a {
                    b += 1;
                }
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                for i in lo..hi {
                    std::mem::swap(&mut o1[i], &mut o2[i]);
                }
            }
        }
        CrossoverMethod::Uniform => {
            for i in 0..m {
                if rng.gen::<bool>() {
                    std::mem::swap(&mut o1[i], &mut o2[i]);
                }
            }
        }
    }
    Ok((SelectionMask(o1), SelectionMask(o2)))
}

/// Flips each gene independently; an all-zero result has one random gene
/// switched back on.
pub fn mutate(position: &SelectionMask, per_gene_flip_prob: f64, rng: &mut impl Rng) -> SelectionMask {
    let mut genes: Vec<bool> = position
        .0
        .iter()
        .map(|&g| {
            if rng.gen::<f64>() < per_gene_flip_prob {
                !g
            } else {
                g
            }
        })
        .collect();
    if genes.iter().all(|&g| !g) {
        let idx = rng.gen_range(0..genes.len());
        genes[idx] = true;
    }
    SelectionMask(genes)
}

fn random_mask(m: usize, density: f64, rng: &mut impl Rng) -> SelectionMask {
    loop {
        let genes: Vec<bool> = (0..m).map(|_| rng.gen::<f64>() < density).collect();
        if genes.iter().any(|&g| g) {
            return SelectionMask(genes);
        }
    }
}

/// Ascending cost order; ties broken by fewer selected features, then by
/// prior order (stable sort).
fn sort_population(pop: &mut Population) {
    pop.sort_by(|a, b| {
        a.cost
            .j
            .partial_cmp(&b.cost.j)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cost.n_selected.cmp(&b.cost.n_selected))
    });
}

/// Cost evaluator abstraction: the production evaluator wraps the MLP cost,
/// tests substitute deterministic stubs.
pub trait CostFn: Sync {
    fn evaluate(&self, mask: &SelectionMask, eval_seed: u64) -> Result<CostValue>;
}

/// MLP wrapper cost over a fixed dataset.
pub struct MlpCostFn<'a> {
    pub dataset: &'a Dataset,
    pub config: CostConfig,
}

impl CostFn for MlpCostFn<'_> {
    fn evaluate(&self, mask: &SelectionMask, eval_seed: u64) -> Result<CostValue> {
        evaluate_cost(self.dataset, mask, &self.config, eval_seed)
    }
}

/// Deterministic cost from a plain function (used by tests and sweeps).
pub struct FnCost<F: Fn(&SelectionMask) -> f64 + Sync>(pub F, pub f64);

impl<F: Fn(&SelectionMask) -> f64 + Sync> CostFn for FnCost<F> {
    fn evaluate(&self, mask: &SelectionMask, _eval_seed: u64) -> Result<CostValue> {
        Ok(CostValue::from_epsilon(
            (self.0)(mask),
            self.1,
            mask.count_selected(),
        ))
    }
}

/// Incremental GA driver. Owns the population and evaluation bookkeeping;
/// callers step it generation by generation (the CLI checkpoints between
/// steps) or drain it via [`run_ga`].
pub struct GaRunner<'a, C: CostFn> {
    config: GaConfig,
    cost_fn: &'a C,
    m: usize,
    population: Population,
    generation: usize,
    nfe_used: usize,
    trajectory: Vec<f64>,
    cache: Option<std::collections::HashMap<Vec<bool>, CostValue>>,
}

/// Serialized GA state sufficient for exact resumption.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaCheckpoint {
    pub config: GaConfig,
    pub generation: usize,
    pub nfe_used: usize,
    pub trajectory: Vec<f64>,
    pub population: Population,
}

impl<'a, C: CostFn> GaRunner<'a, C> {
    /// Builds and evaluates the initial population (sorted ascending).
    pub fn new(m: usize, config: GaConfig, cost_fn: &'a C) -> Result<Self> {
        config.validate()?;
        if m < 2 {
            return Err(Error::InvalidInput("need at least 2 features".into()));
        }
        let mut init_rng = rng::stream(config.seed, &[rng::label::INIT_POP]);
        let masks: Vec<SelectionMask> = (0..config.population_size)
            .map(|_| random_mask(m, config.init_density, &mut init_rng))
            .collect();
        let mut runner = GaRunner {
            cache: config.cache_costs.then(std::collections::HashMap::new),
            config,
            cost_fn,
            m,
            population: Vec::new(),
            generation: 0,
            nfe_used: 0,
            trajectory: Vec::new(),
        };
        let costs = runner.evaluate_all(&masks, 0)?;
        runner.population = masks
            .into_iter()
            .zip(costs)
            .map(|(position, cost)| Individual { position, cost })
            .collect();
        sort_population(&mut runner.population);
        runner
            .trajectory
            .push(runner.population[0].cost.j);
        Ok(runner)
    }

    /// Restores a runner from a checkpoint.
    pub fn resume(checkpoint: GaCheckpoint, cost_fn: &'a C) -> Result<Self> {
        checkpoint.config.validate()?;
        if checkpoint.population.is_empty() {
            return Err(Error::InvalidInput("checkpoint population empty".into()));
        }
        let m = checkpoint.population[0].position.len();
        Ok(GaRunner {
            cache: checkpoint.config.cache_costs.then(std::collections::HashMap::new),
            config: checkpoint.config,
            cost_fn,
            m,
            population: checkpoint.population,
            generation: checkpoint.generation,
            nfe_used: checkpoint.nfe_used,
            trajectory: checkpoint.trajectory,
        })
    }

    pub fn checkpoint(&self) -> GaCheckpoint {
        GaCheckpoint {
            config: self.config.clone(),
            generation: self.generation,
            nfe_used: self.nfe_used,
            trajectory: self.trajectory.clone(),
            population: self.population.clone(),
        }
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn nfe_used(&self) -> usize {
        self.nfe_used
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn trajectory(&self) -> &[f64] {
        &self.trajectory
    }

    pub fn best(&self) -> &Individual {
        &self.population[0]
    }

    /// Evaluations one more generation would cost.
    pub fn next_generation_evals(&self) -> usize {
        2 * self.config.n_crossover_pairs() + self.config.n_mutants()
    }

    /// True when the iteration or NFE budget is exhausted.
    pub fn finished(&self) -> bool {
        if self.generation >= self.config.max_iterations {
            return true;
        }
        if let Some(budget) = self.config.nfe_budget {
            if self.nfe_used + self.next_generation_evals() > budget {
                return true;
            }
        }
        false
    }

    fn evaluate_all(&mut self, masks: &[SelectionMask], generation: usize) -> Result<Vec<CostValue>> {
        let seed = self.config.seed;
        let uncached: Vec<usize> = match &self.cache {
            Some(cache) => masks
                .iter()
                .enumerate()
                .filter(|(_, m)| !cache.contains_key(&m.0))
                .map(|(i, _)| i)
                .collect(),
            None => (0..masks.len()).collect(),
        };
        let cost_fn = self.cost_fn;
        let fresh: Vec<(usize, Result<CostValue>)> = uncached
            .par_iter()
            .map(|&slot| {
                let eval_seed = rng::derive_seed(seed, &[rng::label::EVAL, generation as u64, slot as u64]);
                (slot, cost_fn.evaluate(&masks[slot], eval_seed))
            })
            .collect();

        let mut results: Vec<Option<CostValue>> = vec![None; masks.len()];
        for (slot, outcome) in fresh {
            let cost = outcome.map_err(|e| {
                e.with_context(format!("cost evaluation failed at generation {generation}"))
            })?;
            if let Some(cache) = &mut self.cache {
                cache.insert(masks[slot].0.clone(), cost);
            }
            results[slot] = Some(cost);
        }
        if let Some(cache) = &self.cache {
            for (i, slot) in results.iter_mut().enumerate() {
                if slot.is_none() {
                    *slot = cache.get(&masks[i].0).copied();
                }
            }
        }
        self.nfe_used += uncached.len();
        Ok(results.into_iter().map(|c| c.unwrap()).collect())
    }

    /// Runs one generation: selection, crossover, mutation, evaluation and
    /// merge-sort-truncate survival. Returns the best cost after the step.
    pub fn step(&mut self) -> Result<f64> {
        self.generation += 1;
        let gen = self.generation;
        let costs: Vec<f64> = self.population.iter().map(|i| i.cost.j).collect();
        let state = selection_state(
            &costs,
            self.config.target_top_half_mass,
            self.config.boltzmann_form,
        )?;

        let mut gen_rng: ChaCha8Rng = rng::stream(self.config.seed, &[rng::label::GA_GEN, gen as u64]);
        let n_pairs = self.config.n_crossover_pairs();
        let n_mutants = self.config.n_mutants();
        let flip = self.config.flip_prob(self.m);

        let mut offspring: Vec<SelectionMask> = Vec::with_capacity(2 * n_pairs + n_mutants);
        for _ in 0..n_pairs {
            let a = roulette_select(&state.probabilities, &mut gen_rng);
            let b = roulette_select(&state.probabilities, &mut gen_rng);
            let method = pick_crossover_method(self.config.crossover_method_probs, &mut gen_rng);
            let (o1, o2) = crossover(
                &self.population[a].position,
                &self.population[b].position,
                method,
                &mut gen_rng,
            )?;
            offspring.push(o1);
            offspring.push(o2);
        }
        for _ in 0..n_mutants {
            let p = roulette_select(&state.probabilities, &mut gen_rng);
            offspring.push(mutate(&self.population[p].position, flip, &mut gen_rng));
        }

        let new_costs = self.evaluate_all(&offspring, gen)?;
        self.population.extend(
            offspring
                .into_iter()
                .zip(new_costs)
                .map(|(position, cost)| Individual { position, cost }),
        );
        sort_population(&mut self.population);
        self.population.truncate(self.config.population_size);
        let best = self.population[0].cost.j;
        self.trajectory.push(best);
        Ok(best)
    }

    /// Runs to completion and returns the result summary.
    pub fn run(mut self) -> Result<GaResult> {
        while !self.finished() {
            self.step()?;
        }
        Ok(self.into_result())
    }

    pub fn into_result(self) -> GaResult {
        let best = self.population[0].clone();
        GaResult {
            best_mask: best.position,
            best_cost: best.cost,
            best_cost_trajectory: self.trajectory,
            nfe_used: self.nfe_used,
            seed: self.config.seed,
        }
    }
}

/// End-to-end GA feature selection with the MLP wrapper cost.
pub fn run_ga(dataset: &Dataset, ga_config: &GaConfig, cost_config: &CostConfig) -> Result<GaResult> {
    let cost_fn = MlpCostFn {
        dataset,
        config: cost_config.clone(),
    };
    GaRunner::new(dataset.n_features(), ga_config.clone(), &cost_fn)?.run()
}
