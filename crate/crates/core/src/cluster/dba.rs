use super::dtw::{dtw_distance, dtw_path};

/// Sum of squared DTW distances from `members` to `center`.
pub fn sq_cost<const D: usize>(members: &[&[[f64; D]]], center: &[[f64; D]]) -> f64 {
    members
        .iter()
        .map(|m| {
            let d = dtw_distance(m, center);
            d * d
        })
        .sum()
}

/// DTW barycenter averaging.
///
/// Each round aligns every member to the current center and moves every
/// center sample to the mean of the member samples aligned to it. A round
/// that does not lower the summed squared distance is discarded and ends
/// the iteration, so the returned center never costs more than `init`.
pub fn dba_center<const D: usize>(members: &[&[[f64; D]]], init: &[[f64; D]], iters: usize) -> Vec<[f64; D]> {
    let mut center = init.to_vec();
    if members.is_empty() || center.is_empty() {
        return center;
    }
    // the barycenter of one sequence is the sequence
    if members.len() == 1 && members[0].len() == center.len() {
        return members[0].to_vec();
    }
    let mut cost = sq_cost(members, &center);
    for _ in 0..iters {
        let mut sums = vec![[0.0; D]; center.len()];
        let mut counts = vec![0usize; center.len()];
        for m in members {
            let (_, path) = dtw_path(m, &center);
            for (i, j) in path {
                for d in 0..D {
                    sums[j][d] += m[i][d];
                }
                counts[j] += 1;
            }
        }
        let next: Vec<[f64; D]> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| std::array::from_fn(|d| s[d] / c as f64))
            .collect();
        let next_cost = sq_cost(members, &next);
        if next_cost < cost {
            center = next;
            cost = next_cost;
        } else {
            if next_cost > cost {
                log::debug!("DBA round raised cost {cost} -> {next_cost}; kept prior center");
            }
            break;
        }
    }
    center
}
