use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hypervolume::{hypervolume_2d, nondominated};
use super::operators::{polynomial_mutation, sbx_crossover, tournament_select};
use super::sort::{crowding_distance, rank_population};
use super::{EvolutionError, GaConfig, Individual};
use crate::latent::SearchBounds;

/// Matings per offspring slot before duplicates of existing genomes are
/// accepted.
const DUPLICATE_RETRIES: usize = 10;

/// Reason an individual could not be evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Infeasible(pub String);

/// Maps a genome to objective values, all minimized.
pub trait Evaluator {
    fn objective_count(&self) -> usize;
    fn evaluate(&self, genome: &[f64]) -> Result<Vec<f64>, Infeasible>;
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn objective_count(&self) -> usize {
        (**self).objective_count()
    }

    fn evaluate(&self, genome: &[f64]) -> Result<Vec<f64>, Infeasible> {
        (**self).evaluate(genome)
    }
}

/// Every population of a run, generation 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub generations: Vec<Vec<Individual>>,
    /// Distinct genomes handed to the evaluator.
    pub evaluations: usize,
    /// Generation after which the stagnation rule stopped the run, if any.
    pub stopped_after: Option<usize>,
}

impl Archive {
    pub fn last(&self) -> &[Individual] {
        self.generations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Feasible first-front members of the last generation, duplicates of
    /// an earlier genome dropped.
    pub fn final_front(&self) -> Vec<&Individual> {
        let mut out: Vec<&Individual> = Vec::new();
        for ind in self.last() {
            if ind.feasible && ind.rank == 0 && !out.iter().any(|o| o.genome == ind.genome) {
                out.push(ind);
            }
        }
        out
    }

    /// Feasible genomes of the whole run that no other evaluated genome
    /// dominates, ordered by objective values. Unlike [`Archive::final_front`]
    /// this keeps designs that crowding truncation pushed out of the
    /// population.
    pub fn pareto_front(&self) -> Vec<&Individual> {
        let mut seen: Vec<&Individual> = Vec::new();
        for ind in self.generations.iter().flatten() {
            if ind.feasible && !seen.iter().any(|o| o.genome == ind.genome) {
                seen.push(ind);
            }
        }
        let objs: Vec<Vec<f64>> = seen.iter().map(|i| i.objectives.clone()).collect();
        let mut front: Vec<&Individual> = nondominated(&objs).into_iter().map(|i| seen[i]).collect();
        front.sort_by(|a, b| {
            let by_objectives = a.objectives.iter().zip(&b.objectives).map(|(x, y)| x.total_cmp(y));
            let by_genome = a.genome.iter().zip(&b.genome).map(|(x, y)| x.total_cmp(y));
            by_objectives
                .chain(by_genome)
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        front
    }

    /// Hypervolume of the feasible first front of each generation.
    pub fn hypervolume_trace(&self, reference: [f64; 2]) -> Vec<f64> {
        self.generations.iter().map(|g| front_hypervolume(g, reference)).collect()
    }

    /// One row per individual per generation. `objective_names` label the
    /// objective columns; `f0, f1, ...` are used when it is empty.
    pub fn write_csv(&self, out: impl Write, objective_names: &[String]) -> Result<(), csv::Error> {
        let dim = self.generations.first().and_then(|g| g.first()).map_or(0, |i| i.genome.len());
        let m = self
            .generations
            .iter()
            .flatten()
            .find(|i| i.feasible)
            .map_or(objective_names.len(), |i| i.objectives.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["generation".to_string(), "individual".to_string()];
        header.extend((0..dim).map(|j| format!("g{j}")));
        header.extend((0..m).map(|j| objective_names.get(j).cloned().unwrap_or_else(|| format!("f{j}"))));
        header.extend(["rank", "crowding", "feasible"].map(String::from));
        w.write_record(&header)?;
        for (g, pop) in self.generations.iter().enumerate() {
            for (i, ind) in pop.iter().enumerate() {
                w.write_record(ind.csv_row(g, i, m))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn front_hypervolume(pop: &[Individual], reference: [f64; 2]) -> f64 {
    let pts: Vec<[f64; 2]> = pop
        .iter()
        .filter(|i| i.feasible && i.rank == 0 && i.objectives.len() == 2)
        .map(|i| [i.objectives[0], i.objectives[1]])
        .collect();
    hypervolume_2d(&pts, reference)
}

struct CachedEvaluator<E> {
    inner: E,
    cache: HashMap<Vec<u64>, Result<Vec<f64>, Infeasible>>,
}

impl<E: Evaluator> CachedEvaluator<E> {
    fn individual(&mut self, genome: Vec<f64>) -> Result<Individual, EvolutionError> {
        let key: Vec<u64> = genome.iter().map(|v| v.to_bits()).collect();
        let result = match self.cache.get(&key) {
            Some(r) => r.clone(),
            None => {
                let r = self.inner.evaluate(&genome);
                self.cache.insert(key, r.clone());
                r
            }
        };
        match result {
            Ok(objectives) => {
                let m = self.inner.objective_count();
                if objectives.len() != m {
                    return Err(EvolutionError::ObjectiveCount {
                        expected: m,
                        actual: objectives.len(),
                    });
                }
                if objectives.iter().any(|v| !v.is_finite()) {
                    return Ok(Individual::infeasible(genome));
                }
                Ok(Individual::evaluated(genome, objectives))
            }
            Err(_) => Ok(Individual::infeasible(genome)),
        }
    }
}

/// Elitist multi-objective search over `bounds`. `seeds` are placed first in
/// the initial population (clamped into the box); the remainder is uniform.
/// Offspring that copy a genome already in the population are redrawn.
pub fn run_nsga2<E: Evaluator>(
    evaluator: E,
    bounds: &SearchBounds,
    seeds: &[Vec<f64>],
    cfg: &GaConfig,
) -> Result<Archive, EvolutionError> {
    cfg.validate()?;
    if evaluator.objective_count() == 0 {
        return Err(EvolutionError::Config("at least one objective is required".into()));
    }
    let dim = bounds.dim();
    if let Some(s) = seeds.iter().find(|s| s.len() != dim) {
        return Err(EvolutionError::GenomeLength {
            expected: dim,
            actual: s.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut eval = CachedEvaluator {
        inner: evaluator,
        cache: HashMap::new(),
    };
    let n = cfg.population_size;
    let p_m = cfg.mutation_prob.unwrap_or(1.0 / dim as f64);

    let mut pop = Vec::with_capacity(n);
    for s in seeds.iter().take(n) {
        let mut g = s.clone();
        bounds.clamp(&mut g);
        pop.push(eval.individual(g)?);
    }
    while pop.len() < n {
        let g = (0..dim).map(|j| rng.random_range(bounds.lower()[j]..=bounds.upper()[j])).collect();
        pop.push(eval.individual(g)?);
    }
    if pop.iter().all(|i| !i.feasible) {
        let reasons: Vec<String> = pop
            .iter()
            .filter_map(|i| match eval.cache.get(&i.genome.iter().map(|v| v.to_bits()).collect::<Vec<_>>()) {
                Some(Err(Infeasible(r))) => Some(r.clone()),
                _ => None,
            })
            .collect();
        return Err(EvolutionError::AllInfeasible(reasons.join("; ")));
    }
    rank_population(&mut pop)?;

    let mut archive = Archive {
        generations: vec![pop.clone()],
        evaluations: 0,
        stopped_after: None,
    };
    let mut best_hv = cfg.stagnation.as_ref().map_or(0.0, |r| front_hypervolume(&pop, r.reference));
    let mut stale = 0;
    for g in 1..cfg.generations {
        let mut offspring: Vec<Individual> = Vec::with_capacity(n);
        let mut attempts = 0;
        while offspring.len() < n {
            let a = tournament_select(&pop, &mut rng);
            let b = tournament_select(&pop, &mut rng);
            let (mut c1, mut c2) =
                sbx_crossover(&pop[a].genome, &pop[b].genome, bounds, cfg.eta_crossover, cfg.crossover_prob, &mut rng);
            polynomial_mutation(&mut c1, bounds, cfg.eta_mutation, p_m, &mut rng);
            polynomial_mutation(&mut c2, bounds, cfg.eta_mutation, p_m, &mut rng);
            attempts += 1;
            for c in [c1, c2] {
                // a copy of a present genome adds no information; give up
                // filtering once the population has collapsed to few points
                let copy = pop.iter().chain(&offspring).any(|i| i.genome == c);
                if offspring.len() < n && (!copy || attempts > DUPLICATE_RETRIES * n) {
                    offspring.push(eval.individual(c)?);
                }
            }
        }
        let mut combined = pop;
        combined.extend(offspring);
        pop = environmental_selection(combined, n)?;
        archive.generations.push(pop.clone());

        if let Some(rule) = &cfg.stagnation {
            let hv = front_hypervolume(&pop, rule.reference);
            if hv > best_hv + rule.tolerance {
                best_hv = hv;
                stale = 0;
            } else {
                stale += 1;
                if stale >= rule.window {
                    archive.stopped_after = Some(g);
                    break;
                }
            }
        }
    }
    archive.evaluations = eval.cache.len();
    Ok(archive)
}

/// (mu + lambda) truncation: whole fronts while they fit, then the most
/// isolated members of the first front that does not.
fn environmental_selection(mut combined: Vec<Individual>, n: usize) -> Result<Vec<Individual>, EvolutionError> {
    let fronts = rank_population(&mut combined)?;
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for front in fronts {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
            continue;
        }
        let objs: Vec<Vec<f64>> = front.iter().map(|&i| combined[i].objectives.clone()).collect();
        let crowd = if combined[front[0]].feasible {
            crowding_distance(&objs)
        } else {
            vec![0.0; front.len()]
        };
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
        chosen.extend(order.into_iter().take(n - chosen.len()).map(|k| front[k]));
        break;
    }
    let mut pop: Vec<Individual> = chosen.into_iter().map(|i| combined[i].clone()).collect();
    rank_population(&mut pop)?;
    Ok(pop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{dominates, Zdt1};

    struct Failing;

    impl Evaluator for Failing {
        fn objective_count(&self) -> usize {
            2
        }
        fn evaluate(&self, _: &[f64]) -> Result<Vec<f64>, Infeasible> {
            Err(Infeasible("no surface".into()))
        }
    }

    fn cfg(seed: u64) -> GaConfig {
        GaConfig {
            population_size: 10,
            generations: 20,
            seed,
            ..GaConfig::default()
        }
    }

    #[test]
    fn zdt1_improves_and_never_regresses() {
        let bounds = SearchBounds::unit(5);
        let archive = run_nsga2(Zdt1 { n: 5 }, &bounds, &[], &cfg(7)).unwrap();
        assert_eq!(archive.generations.len(), 20);
        let hv = archive.hypervolume_trace([1.1, 1.1]);
        assert!(hv[19] >= hv[0]);
        for w in archive.generations.windows(2) {
            let front = |p: &[Individual]| -> Vec<Vec<f64>> {
                p.iter().filter(|i| i.rank == 0).map(|i| i.objectives.clone()).collect()
            };
            for a in front(&w[0]) {
                for b in front(&w[1]) {
                    assert!(!dominates(&a, &b).unwrap());
                }
            }
            assert!(w[1].iter().all(|i| bounds.contains(&i.genome)));
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let bounds = SearchBounds::unit(5);
        let a = run_nsga2(Zdt1 { n: 5 }, &bounds, &[], &cfg(3)).unwrap();
        let b = run_nsga2(Zdt1 { n: 5 }, &bounds, &[], &cfg(3)).unwrap();
        assert_eq!(a, b);
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        a.write_csv(&mut ca, &[]).unwrap();
        b.write_csv(&mut cb, &[]).unwrap();
        assert_eq!(ca, cb);
        let text = String::from_utf8(ca).unwrap();
        assert!(text.starts_with("generation,individual,g0,g1,g2,g3,g4,f0,f1,rank,crowding,feasible\n"));
        assert_eq!(text.lines().count(), 1 + 20 * 10);
    }

    #[test]
    fn pareto_front_covers_every_evaluated_design() {
        let archive = run_nsga2(Zdt1 { n: 5 }, &SearchBounds::unit(5), &[], &cfg(4)).unwrap();
        let front = archive.pareto_front();
        let evaluated: Vec<&Individual> = archive.generations.iter().flatten().collect();
        for ind in &evaluated {
            assert!(front.iter().any(|f| f.objectives.iter().zip(&ind.objectives).all(|(a, b)| a <= b)));
        }
        for (i, a) in front.iter().enumerate() {
            assert!(evaluated.iter().all(|b| !dominates(&b.objectives, &a.objectives).unwrap()));
            assert!(front[i + 1..].iter().all(|b| b.genome != a.genome));
        }
        assert!(front.windows(2).all(|w| w[0].objectives[0] <= w[1].objectives[0]));
        // the last population's front is a subset
        for f in archive.final_front() {
            assert!(front.iter().any(|p| p.genome == f.genome));
        }
    }

    #[test]
    fn seeds_come_first() {
        let bounds = SearchBounds::unit(5);
        let seeds = vec![vec![0.5; 5], vec![2.0; 5]];
        let a = run_nsga2(Zdt1 { n: 5 }, &bounds, &seeds, &cfg(1)).unwrap();
        assert_eq!(a.generations[0][0].genome, vec![0.5; 5]);
        assert_eq!(a.generations[0][1].genome, vec![1.0; 5]);
    }

    #[test]
    fn all_infeasible_aborts() {
        let r = run_nsga2(Failing, &SearchBounds::unit(2), &[], &cfg(0));
        assert!(matches!(r, Err(EvolutionError::AllInfeasible(msg)) if msg.contains("no surface")));
    }

    #[test]
    fn stagnation_rule_stops_early() {
        let mut c = cfg(0);
        c.generations = 200;
        c.stagnation = Some(crate::evolution::StagnationRule {
            reference: [1.1, 1.1],
            window: 3,
            tolerance: 1e9,
        });
        let a = run_nsga2(Zdt1 { n: 5 }, &SearchBounds::unit(5), &[], &c).unwrap();
        assert_eq!(a.stopped_after, Some(3));
        assert_eq!(a.generations.len(), 4);
    }
}
