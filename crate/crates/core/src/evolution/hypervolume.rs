use super::sort::dominates_unchecked;

/// Area dominated by `points` and bounded by `reference` (both objectives
/// minimized). Points not strictly better than the reference in both
/// objectives contribute nothing.
pub fn hypervolume_2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut inside: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    inside.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in inside {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Members of `points` not dominated by any other member.
pub fn nondominated(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates_unchecked(q, &points[i])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn staircase() {
        assert_eq!(hypervolume_2d(&[], [1.0, 1.0]), 0.0);
        assert_eq!(hypervolume_2d(&[[0.0, 0.0]], [1.0, 1.0]), 1.0);
        assert!((hypervolume_2d(&[[0.0, 0.5], [0.5, 0.0]], [1.0, 1.0]) - 0.75).abs() < 1e-15);
        assert_eq!(hypervolume_2d(&[[1.2, 0.0]], [1.1, 1.1]), 0.0);
    }

    proptest! {
        // Monte Carlo free oracle: union of boxes on the grid of coordinates.
        #[test]
        fn matches_union_of_boxes(pts in prop::collection::vec((0.0f64..1.2, 0.0f64..1.2), 1..12)) {
            let points: Vec<[f64; 2]> = pts.iter().map(|&(a, b)| [a, b]).collect();
            let r = [1.1, 1.1];
            let mut xs: Vec<f64> = points.iter().map(|p| p[0]).chain([r[0]]).collect();
            let mut ys: Vec<f64> = points.iter().map(|p| p[1]).chain([r[1]]).collect();
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            let mut area = 0.0;
            for i in 0..xs.len() - 1 {
                for j in 0..ys.len() - 1 {
                    let cx = 0.5 * (xs[i] + xs[i + 1]);
                    let cy = 0.5 * (ys[j] + ys[j + 1]);
                    if cx < r[0] && cy < r[1] && points.iter().any(|p| p[0] <= cx && p[1] <= cy) {
                        area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
                    }
                }
            }
            prop_assert!((hypervolume_2d(&points, r) - area).abs() < 1e-12);
        }
    }
}
