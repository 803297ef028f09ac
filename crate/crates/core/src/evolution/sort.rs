use super::{EvolutionError, Individual};

/// Pareto dominance for minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool, EvolutionError> {
    if a.len() != b.len() {
        return Err(EvolutionError::ObjectiveCount {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strictly |= x < y;
    }
    strictly
}

/// Fronts of index lists, best first, each sorted ascending.
pub fn fast_nondominated_sort(objectives: &[Vec<f64>]) -> Result<Vec<Vec<usize>>, EvolutionError> {
    let n = objectives.len();
    if let Some(first) = objectives.first() {
        for (i, o) in objectives.iter().enumerate() {
            if o.len() != first.len() {
                return Err(EvolutionError::ObjectiveCount {
                    expected: first.len(),
                    actual: o.len(),
                });
            }
            if o.is_empty() || o.iter().any(|v| !v.is_finite()) {
                return Err(EvolutionError::Unevaluated(i));
            }
        }
    }
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            if dominates_unchecked(&objectives[p], &objectives[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates_unchecked(&objectives[q], &objectives[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    Ok(fronts)
}

/// Density estimate of each member of one front. Extremes of every
/// objective get `f64::INFINITY`.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut distance = vec![0.0; n];
    let m = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]).then(a.cmp(&b)));
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let i = order[w];
            if distance[i].is_finite() {
                distance[i] += (front[order[w + 1]][k] - front[order[w - 1]][k]) / range;
            }
        }
    }
    distance
}

/// Writes rank and crowding into `pop` and returns its fronts. Infeasible
/// individuals share one front behind every feasible front.
pub fn rank_population(pop: &mut [Individual]) -> Result<Vec<Vec<usize>>, EvolutionError> {
    let feasible: Vec<usize> = (0..pop.len()).filter(|&i| pop[i].feasible).collect();
    let infeasible: Vec<usize> = (0..pop.len()).filter(|&i| !pop[i].feasible).collect();
    let objectives: Vec<Vec<f64>> = feasible.iter().map(|&i| pop[i].objectives.clone()).collect();
    let mut fronts: Vec<Vec<usize>> = fast_nondominated_sort(&objectives)?
        .into_iter()
        .map(|f| f.into_iter().map(|j| feasible[j]).collect())
        .collect();
    for (rank, front) in fronts.iter().enumerate() {
        let objs: Vec<Vec<f64>> = front.iter().map(|&i| pop[i].objectives.clone()).collect();
        for (&i, c) in front.iter().zip(crowding_distance(&objs)) {
            pop[i].rank = rank;
            pop[i].crowding = c;
        }
    }
    if !infeasible.is_empty() {
        for &i in &infeasible {
            pop[i].rank = fronts.len();
            pop[i].crowding = 0.0;
        }
        fronts.push(infeasible);
    }
    Ok(fronts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_cases() {
        assert!(dominates(&[1.0, 2.0], &[2.0, 3.0]).unwrap());
        assert!(!dominates(&[1.0, 3.0], &[2.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(dominates(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn hand_fronts() {
        assert_eq!(fast_nondominated_sort(&[vec![1.0, 1.0]]).unwrap(), vec![vec![0]]);
        let f = fast_nondominated_sort(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(f, vec![vec![0, 1], vec![2]]);
        assert!(fast_nondominated_sort(&[vec![1.0], vec![f64::NAN]]).is_err());
    }

    #[test]
    fn crowding_hand_cases() {
        assert_eq!(crowding_distance(&[vec![0.0, 1.0], vec![1.0, 0.0]]), vec![f64::INFINITY; 2]);
        let d = crowding_distance(&[vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0]]);
        assert_eq!(d[1], 2.0);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        let same = crowding_distance(&vec![vec![1.0, 1.0]; 4]);
        assert_eq!(same.iter().filter(|d| **d == 0.0).count(), 2);
    }

    #[test]
    fn infeasible_individuals_rank_last() {
        let mut pop = vec![
            Individual::infeasible(vec![0.0]),
            Individual::evaluated(vec![0.1], vec![2.0, 2.0]),
            Individual::evaluated(vec![0.2], vec![1.0, 1.0]),
        ];
        let fronts = rank_population(&mut pop).unwrap();
        assert_eq!(fronts, vec![vec![2], vec![1], vec![0]]);
        assert_eq!(pop[0].rank, 2);
        assert_eq!(pop[0].crowding, 0.0);
    }
}
