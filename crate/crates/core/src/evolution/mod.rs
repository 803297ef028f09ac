//! NSGA-II over latent vectors: non-dominated sorting, crowding distance,
//! binary tournaments, SBX crossover, polynomial mutation, and the
//! generational loop.

mod hypervolume;
mod nsga2;
mod operators;
mod sort;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hypervolume::{hypervolume_2d, nondominated};
pub use nsga2::{run_nsga2, Archive, Evaluator, Infeasible};
pub use operators::{polynomial_mutation, polynomial_step, sbx_crossover, sbx_pair, tournament_select};
pub use sort::{crowding_distance, dominates, fast_nondominated_sort, rank_population};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("objective vectors differ in length: expected {expected}, got {actual}")]
    ObjectiveCount { expected: usize, actual: usize },
    #[error("genome has {actual} genes, search space has {expected}")]
    GenomeLength { expected: usize, actual: usize },
    #[error("individual {0} has no finite objective values")]
    Unevaluated(usize),
    #[error("invalid GA configuration: {0}")]
    Config(String),
    #[error("every individual of the initial population is infeasible: {0}")]
    AllInfeasible(String),
}

/// A genome with its evaluation and selection state.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Vec<f64>,
    /// Minimized objective values; empty when infeasible.
    pub objectives: Vec<f64>,
    pub rank: usize,
    pub crowding: f64,
    pub feasible: bool,
}

impl Individual {
    pub fn evaluated(genome: Vec<f64>, objectives: Vec<f64>) -> Self {
        Self {
            genome,
            objectives,
            rank: 0,
            crowding: 0.0,
            feasible: true,
        }
    }

    pub fn infeasible(genome: Vec<f64>) -> Self {
        Self {
            genome,
            objectives: Vec::new(),
            rank: 0,
            crowding: 0.0,
            feasible: false,
        }
    }

    pub(crate) fn csv_row(&self, generation: usize, index: usize, objectives: usize) -> Vec<String> {
        let mut row = vec![generation.to_string(), index.to_string()];
        row.extend(self.genome.iter().map(|v| v.to_string()));
        if self.feasible {
            row.extend(self.objectives.iter().map(|v| v.to_string()));
        } else {
            row.extend(std::iter::repeat_n(String::new(), objectives));
        }
        row.push(self.rank.to_string());
        row.push(self.crowding.to_string());
        row.push(self.feasible.to_string());
        row
    }
}

/// Optional early stop once the first-front hypervolume has not grown by
/// more than `tolerance` for `window` generations. Two objectives only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagnationRule {
    pub reference: [f64; 2],
    pub window: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population_size: usize,
    /// Number of populations in the run, the initial one included.
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; `1 / genome length` when unset.
    pub mutation_prob: Option<f64>,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
    pub seed: u64,
    pub stagnation: Option<StagnationRule>,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            generations: 20,
            crossover_prob: 0.9,
            mutation_prob: None,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
            seed: 0,
            stagnation: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: String| Err(EvolutionError::Config(m));
        if self.population_size < 4 || self.population_size % 2 != 0 {
            return bad(format!("population size {} must be even and at least 4", self.population_size));
        }
        if self.generations == 0 {
            return bad("generations must be at least 1".into());
        }
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.crossover_prob) || self.mutation_prob.is_some_and(|p| !prob(p)) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if !(self.eta_crossover > 0.0 && self.eta_mutation > 0.0) {
            return bad("distribution indices must be positive".into());
        }
        if let Some(rule) = &self.stagnation {
            if rule.window == 0 || !(rule.tolerance >= 0.0) {
                return bad("stagnation window must be positive and tolerance non-negative".into());
            }
        }
        Ok(())
    }
}

/// The ZDT1 benchmark on `[0, 1]^n`; its optimal front is `f2 = 1 - sqrt(f1)`.
#[derive(Debug, Clone, Copy)]
pub struct Zdt1 {
    pub n: usize,
}

impl Evaluator for Zdt1 {
    fn objective_count(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, Infeasible> {
        let f1 = x[0];
        let g = 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (self.n - 1) as f64;
        Ok(vec![f1, g * (1.0 - (f1 / g).sqrt())])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        for bad in [
            GaConfig { population_size: 5, ..GaConfig::default() },
            GaConfig { population_size: 2, ..GaConfig::default() },
            GaConfig { generations: 0, ..GaConfig::default() },
            GaConfig { crossover_prob: 1.5, ..GaConfig::default() },
            GaConfig { eta_mutation: 0.0, ..GaConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn zdt1_on_the_optimal_front() {
        let f = Zdt1 { n: 5 }.evaluate(&[0.25, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f, vec![0.25, 0.5]);
    }
}
