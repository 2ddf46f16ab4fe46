//! Real-coded genetic algorithm used as the global search layer.
//!
//! Every generation keeps the elite genomes unchanged, fills a fixed
//! fraction of the remaining slots by blend crossover of rank-selected
//! parents and the rest by Gaussian mutation. Each genome draws from its own
//! random stream derived from `(seed, generation, index)`, and fitness values
//! are reduced in index order, so the search is reproducible regardless of
//! how many threads evaluate the population.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    /// Run the genetic search; when disabled the local refinement starts
    /// from the initial guess directly.
    pub enabled: bool,
    pub population: usize,
    /// Generation 0 is drawn uniformly from `[-initial_range, initial_range]`.
    pub initial_range: f64,
    pub elite_count: usize,
    /// Fraction of non-elite children produced by crossover.
    pub crossover_fraction: f64,
    /// Fraction of individuals exchanged between subpopulations. The search
    /// runs a single population, so migration never takes place; the value is
    /// validated and kept for configuration compatibility.
    pub migration_fraction: f64,
    /// Stop after this many generations without improvement.
    pub stall_generations: usize,
    /// Relative improvement below which a generation counts as stalled.
    pub stall_tolerance: f64,
    /// Cap on objective evaluations.
    pub max_evaluations: usize,
    /// Blend-crossover extension factor.
    pub blend_alpha: f64,
    /// Initial mutation standard deviation as a fraction of the initial
    /// range width.
    pub mutation_scale: f64,
    /// Fraction by which the mutation width shrinks over the budget.
    pub mutation_shrink: f64,
    /// Mutated genes are clipped to `[-mutation_clip, mutation_clip]`.
    pub mutation_clip: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            population: 300,
            initial_range: 12.0,
            elite_count: 15,
            crossover_fraction: 0.8,
            migration_fraction: 0.2,
            stall_generations: 50,
            stall_tolerance: 1e-6,
            max_evaluations: 10401,
            blend_alpha: 0.2,
            mutation_scale: 0.1,
            mutation_shrink: 0.9,
            mutation_clip: 100.0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.population <= self.elite_count {
            return Err(GaitError::invalid("ga.population must exceed ga.elite_count"));
        }
        for (name, v) in [
            ("ga.crossover_fraction", self.crossover_fraction),
            ("ga.migration_fraction", self.migration_fraction),
            ("ga.mutation_shrink", self.mutation_shrink),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(GaitError::invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.max_evaluations <= self.population {
            return Err(GaitError::invalid("ga.max_evaluations must exceed ga.population"));
        }
        if self.stall_generations == 0 {
            return Err(GaitError::invalid("ga.stall_generations must be at least 1"));
        }
        for (name, v) in [
            ("ga.initial_range", self.initial_range),
            ("ga.mutation_scale", self.mutation_scale),
            ("ga.mutation_clip", self.mutation_clip),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GaitError::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("ga.blend_alpha", self.blend_alpha), ("ga.stall_tolerance", self.stall_tolerance)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(GaitError::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// New genomes created per generation after the first.
    pub fn offspring_per_generation(&self) -> usize {
        self.population - self.elite_count
    }

    /// Number of generations after the initial one that fit in the budget.
    pub fn max_generations(&self) -> usize {
        (self.max_evaluations - self.population) / self.offspring_per_generation()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaStop {
    /// No improvement for the configured number of generations.
    Stalled,
    /// Another generation would exceed the evaluation budget.
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Best objective value after each generation, generation 0 first.
    pub history: Vec<f64>,
    /// Genomes evaluated, including generation 0.
    pub evaluations: usize,
    /// Offspring created in each generation after the first.
    pub offspring_counts: Vec<usize>,
    pub stop: GaStop,
}

#[derive(Debug, Clone)]
struct Individual {
    genes: Vec<f64>,
    value: f64,
}

fn genome_rng(seed: u64, generation: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | index as u64);
    rng
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::MAX
    } else {
        v
    }
}

/// Indices sorted by ascending value; ties keep index order.
fn ranking(pop: &[Individual]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| pop[a].value.total_cmp(&pop[b].value).then(a.cmp(&b)));
    order
}

fn evaluate_all<F>(f: &F, genomes: Vec<Vec<f64>>) -> Vec<Individual>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = genomes.par_iter().map(|g| sanitize(f(g))).collect();
    genomes.into_iter().zip(values).map(|(genes, value)| Individual { genes, value }).collect()
}

/// Minimize `f` over `dim` variables. `seeds` are injected verbatim into
/// generation 0 ahead of the random genomes.
pub fn ga_search<F>(f: &F, dim: usize, cfg: &GaConfig, seed: u64, seeds: &[Vec<f64>]) -> Result<GaOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if let Some(bad) = seeds.iter().find(|s| s.len() != dim) {
        return Err(GaitError::invalid(format!(
            "initial genome has {} entries, expected {dim}",
            bad.len()
        )));
    }

    let initial: Vec<Vec<f64>> = (0..cfg.population)
        .map(|i| match seeds.get(i) {
            Some(s) => s.clone(),
            None => {
                let mut rng = genome_rng(seed, 0, i);
                (0..dim).map(|_| rng.gen_range(-cfg.initial_range..=cfg.initial_range)).collect()
            }
        })
        .collect();
    let mut population = evaluate_all(f, initial);
    let mut evaluations = cfg.population;
    let mut order = ranking(&population);
    let mut best = population[order[0]].clone();
    let mut history = vec![best.value];
    let mut offspring_counts = Vec::new();
    let mut stall = 0usize;

    let offspring = cfg.offspring_per_generation();
    let crossovers = (cfg.crossover_fraction * offspring as f64).round() as usize;
    let max_generations = cfg.max_generations().max(1);
    // Rank scaling: selection weight proportional to 1/√rank.
    let selector = WeightedIndex::new((1..=cfg.population).map(|r| 1.0 / (r as f64).sqrt()))
        .expect("positive rank weights");
    let width = 2.0 * cfg.initial_range;

    let stop = loop {
        if stall >= cfg.stall_generations {
            break GaStop::Stalled;
        }
        if evaluations + offspring > cfg.max_evaluations {
            break GaStop::Budget;
        }
        let generation = history.len();
        let progress = ((generation - 1) as f64 / max_generations as f64).min(1.0);
        let sigma = cfg.mutation_scale * width * (1.0 - cfg.mutation_shrink * progress);
        // Per-gene mutation width: the scheduled width, capped by the spread
        // of the better half of the population so late mutations stay local.
        let top = &order[..cfg.population / 2];
        let normals: Vec<Normal<f64>> = (0..dim)
            .map(|j| {
                let mean = top.iter().map(|&k| population[k].genes[j]).sum::<f64>() / top.len() as f64;
                let var = top.iter().map(|&k| (population[k].genes[j] - mean).powi(2)).sum::<f64>()
                    / top.len() as f64;
                let s = sigma.min(var.sqrt());
                Normal::new(0.0, if s.is_finite() { s } else { 0.0 }).expect("finite mutation width")
            })
            .collect();

        let children: Vec<Vec<f64>> = (0..offspring)
            .map(|i| {
                let mut rng = genome_rng(seed, generation, i);
                let pa = &population[order[selector.sample(&mut rng)]].genes;
                if i < crossovers {
                    let pb = &population[order[selector.sample(&mut rng)]].genes;
                    pa.iter()
                        .zip(pb)
                        .map(|(&a, &b)| {
                            let (lo, hi) = (a.min(b), a.max(b));
                            let ext = cfg.blend_alpha * (hi - lo);
                            if hi - lo + 2.0 * ext > 0.0 {
                                rng.gen_range(lo - ext..=hi + ext)
                            } else {
                                lo
                            }
                        })
                        .collect()
                } else {
                    pa.iter()
                        .zip(&normals)
                        .map(|(&a, n)| (a + n.sample(&mut rng)).clamp(-cfg.mutation_clip, cfg.mutation_clip))
                        .collect()
                }
            })
            .collect();

        let mut next: Vec<Individual> = order[..cfg.elite_count].iter().map(|&k| population[k].clone()).collect();
        next.extend(evaluate_all(f, children));
        evaluations += offspring;
        offspring_counts.push(offspring);
        population = next;
        order = ranking(&population);

        let candidate = &population[order[0]];
        let improved = candidate.value < best.value - cfg.stall_tolerance * best.value.abs().max(1.0);
        if candidate.value < best.value {
            best = candidate.clone();
        }
        stall = if improved { 0 } else { stall + 1 };
        history.push(best.value);
        log::debug!("generation {generation}: best {:.6e}", best.value);
    };

    Ok(GaOutcome {
        best: best.genes,
        best_value: best.value,
        history,
        evaluations,
        offspring_counts,
        stop,
    })
}
