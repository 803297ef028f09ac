use rand::Rng;

use super::Individual;
use crate::latent::SearchBounds;

/// Binary tournament: lower rank wins, then larger crowding, then a coin flip.
pub fn tournament_select(pop: &[Individual], rng: &mut impl Rng) -> usize {
    assert!(!pop.is_empty(), "tournament on an empty population");
    if pop.len() == 1 {
        return 0;
    }
    let a = rng.random_range(0..pop.len());
    let mut b = rng.random_range(0..pop.len() - 1);
    if b >= a {
        b += 1;
    }
    let (x, y) = (&pop[a], &pop[b]);
    if x.rank != y.rank {
        return if x.rank < y.rank { a } else { b };
    }
    if x.crowding != y.crowding {
        return if x.crowding > y.crowding { a } else { b };
    }
    if rng.random_bool(0.5) {
        a
    } else {
        b
    }
}

/// SBX offspring of one gene pair for uniform draw `u`, without clamping.
pub fn sbx_pair(x1: f64, x2: f64, u: f64, eta: f64) -> (f64, f64) {
    let beta = if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    };
    let c1 = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2);
    let c2 = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2);
    (c1, c2)
}

/// Simulated binary crossover. With probability `p_c` the pair is crossed:
/// each gene then takes the SBX spread with probability 1/2 and the two
/// children receive its values in random order. Otherwise the children are
/// copies of the parents. Children are clamped to `bounds`.
pub fn sbx_crossover(
    p1: &[f64],
    p2: &[f64],
    bounds: &SearchBounds,
    eta: f64,
    p_c: f64,
    rng: &mut impl Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.random::<f64>() < p_c {
        for j in 0..p1.len() {
            if !rng.random_bool(0.5) {
                continue;
            }
            let (a, b) = sbx_pair(p1[j], p2[j], rng.random(), eta);
            if rng.random_bool(0.5) {
                (c1[j], c2[j]) = (b, a);
            } else {
                (c1[j], c2[j]) = (a, b);
            }
        }
    }
    bounds.clamp(&mut c1);
    bounds.clamp(&mut c2);
    (c1, c2)
}

/// Bounded polynomial mutation of one gene for uniform draw `u`.
pub fn polynomial_step(x: f64, lower: f64, upper: f64, u: f64, eta: f64) -> f64 {
    let range = upper - lower;
    let d1 = (x - lower) / range;
    let d2 = (upper - x) / range;
    let power = 1.0 / (eta + 1.0);
    let dq = if u <= 0.5 {
        let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
        v.powf(power) - 1.0
    } else {
        let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
        1.0 - v.powf(power)
    };
    (x + dq * range).clamp(lower, upper)
}

/// Mutates each gene independently with probability `p_m`.
pub fn polynomial_mutation(genome: &mut [f64], bounds: &SearchBounds, eta: f64, p_m: f64, rng: &mut impl Rng) {
    for (j, x) in genome.iter_mut().enumerate() {
        if rng.random::<f64>() < p_m {
            let u: f64 = rng.random();
            *x = polynomial_step(*x, bounds.lower()[j], bounds.upper()[j], u, eta);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ind(rank: usize, crowding: f64) -> Individual {
        let mut i = Individual::evaluated(vec![0.0], vec![0.0]);
        i.rank = rank;
        i.crowding = crowding;
        i
    }

    #[test]
    fn tournament_prefers_rank_then_crowding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert_eq!(tournament_select(&[ind(1, 9.0), ind(0, 0.0)], &mut rng), 1);
            assert_eq!(tournament_select(&[ind(0, 1.0), ind(0, f64::INFINITY)], &mut rng), 1);
        }
    }

    #[test]
    fn tournament_ties_are_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pop = [ind(0, 1.0), ind(0, 1.0)];
        let n = 10_000;
        let first = (0..n).filter(|_| tournament_select(&pop, &mut rng) == 0).count() as f64;
        let e = n as f64 / 2.0;
        let chi2 = (first - e).powi(2) / e + (n as f64 - first - e).powi(2) / e;
        // chi-square, one degree of freedom, p = 0.01
        assert!(chi2 < 6.635, "chi2 = {chi2}");
    }

    #[test]
    fn sbx_midpoint_draw_copies_parents() {
        assert_eq!(sbx_pair(0.2, 0.7, 0.5, 15.0), (0.2, 0.7));
    }

    #[test]
    fn crossover_probability_zero_copies() {
        let b = SearchBounds::unit(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (c1, c2) = sbx_crossover(&[0.1, 0.2, 0.3], &[0.9, 0.8, 0.7], &b, 15.0, 0.0, &mut rng);
        assert_eq!(c1, [0.1, 0.2, 0.3]);
        assert_eq!(c2, [0.9, 0.8, 0.7]);
    }

    #[test]
    fn mutation_limits() {
        let b = SearchBounds::unit(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = [0.1, 0.5, 0.0, 1.0];
        polynomial_mutation(&mut g, &b, 20.0, 0.0, &mut rng);
        assert_eq!(g, [0.1, 0.5, 0.0, 1.0]);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let mut h = [0.3, 0.5, 0.0, 1.0];
            polynomial_mutation(&mut h, &b, 1e6, 1.0, &mut rng);
            for (a, c) in h.iter().zip([0.3, 0.5, 0.0, 1.0]) {
                worst = worst.max((a - c).abs());
            }
        }
        assert!(worst < 1e-3, "{worst}");
    }

    proptest! {
        #[test]
        fn sbx_preserves_the_mean(x1 in -5.0f64..5.0, x2 in -5.0f64..5.0, u in 0.0f64..1.0, eta in 5.0f64..50.0) {
            let (c1, c2) = sbx_pair(x1, x2, u, eta);
            prop_assert!((c1 + c2 - (x1 + x2)).abs() <= 1e-12);
        }

        #[test]
        fn variation_stays_in_bounds(seed in any::<u64>(), eta in 1.0f64..40.0) {
            let b = SearchBounds::new(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 2.1]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut c1, mut c2) = sbx_crossover(&[-1.0, 0.5, 2.05], &[1.0, 0.0, 2.0], &b, eta, 1.0, &mut rng);
            polynomial_mutation(&mut c1, &b, eta, 1.0, &mut rng);
            polynomial_mutation(&mut c2, &b, eta, 1.0, &mut rng);
            prop_assert!(b.contains(&c1) && b.contains(&c2));
        }

        #[test]
        fn mutation_at_lower_bound_stays_above(u in 0.0f64..1.0, eta in 0.1f64..100.0) {
            prop_assert!(polynomial_step(-2.0, -2.0, 3.0, u, eta) >= -2.0);
        }
    }
}
