/// Euclidean distance between two time samples.
#[inline]
pub fn local_cost<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for d in 0..D {
        let v = a[d] - b[d];
        s += v * v;
    }
    s.sqrt()
}

fn accumulate<const D: usize>(a: &[[f64; D]], b: &[[f64; D]]) -> Vec<f64> {
    let (n, m) = (a.len(), b.len());
    let mut acc = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            let c = local_cost(&a[i], &b[j]);
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut p = f64::INFINITY;
                if i > 0 && j > 0 {
                    p = acc[(i - 1) * m + j - 1];
                }
                if i > 0 {
                    p = p.min(acc[(i - 1) * m + j]);
                }
                if j > 0 {
                    p = p.min(acc[i * m + j - 1]);
                }
                p
            };
            acc[i * m + j] = c + prev;
        }
    }
    acc
}

/// Accumulated cost of the optimal full-band alignment with steps
/// down, right and diagonal. Not normalized by path length.
///
/// Empty inputs give infinity.
pub fn dtw_distance<const D: usize>(a: &[[f64; D]], b: &[[f64; D]]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    // two-row rolling buffer
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for (i, ai) in a.iter().enumerate() {
        for j in 0..m {
            let c = local_cost(ai, &b[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut p = f64::INFINITY;
                if i > 0 && j > 0 {
                    p = prev[j - 1];
                }
                if i > 0 {
                    p = p.min(prev[j]);
                }
                if j > 0 {
                    p = p.min(cur[j - 1]);
                }
                p
            };
            cur[j] = c + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Optimal alignment as `(i, j)` pairs from `(0, 0)` to the last cell,
/// with its cost. Backtracking prefers the diagonal, then the step in `a`.
pub fn dtw_path<const D: usize>(a: &[[f64; D]], b: &[[f64; D]]) -> (f64, Vec<(usize, usize)>) {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return (f64::INFINITY, Vec::new());
    }
    let acc = accumulate(a, b);
    let (mut i, mut j) = (n - 1, m - 1);
    let mut path = vec![(i, j)];
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = acc[(i - 1) * m + j - 1];
            let up = acc[(i - 1) * m + j];
            let left = acc[i * m + j - 1];
            if diag <= up && diag <= left {
                i -= 1;
                j -= 1;
            } else if up <= left {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        path.push((i, j));
    }
    path.reverse();
    (acc[n * m - 1], path)
}
