use serde::{Deserialize, Serialize};

/// Maximal run of one decoded state, as inclusive 0-based frame offsets
/// into its scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub state: usize,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// All maximal constant-state runs of `states`.
pub fn runs(states: &[usize]) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = 0;
    for t in 1..=states.len() {
        if t == states.len() || states[t] != states[start] {
            out.push(Segment {
                state: states[start],
                start,
                end: t - 1,
            });
            start = t;
        }
    }
    out
}

/// Runs of at least `min_frames` frames. Shorter runs are dropped, not
/// merged into their neighbors.
pub fn segment(states: &[usize], min_frames: usize) -> Vec<Segment> {
    runs(states)
        .into_iter()
        .filter(|s| s.len() >= min_frames)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_sequence() {
        assert_eq!(
            segment(&[2; 30], 10),
            vec![Segment {
                state: 2,
                start: 0,
                end: 29
            }]
        );
    }

    #[test]
    fn short_run_is_dropped() {
        let q: Vec<usize> = [vec![0; 15], vec![1; 5], vec![0; 20]].concat();
        let s = segment(&q, 10);
        assert_eq!(
            s,
            vec![
                Segment {
                    state: 0,
                    start: 0,
                    end: 14
                },
                Segment {
                    state: 0,
                    start: 20,
                    end: 39
                }
            ]
        );
    }

    #[test]
    fn alternating_gives_nothing() {
        let q: Vec<usize> = (0..40).map(|t| t % 2).collect();
        assert!(segment(&q, 10).is_empty());
        assert!(runs(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn runs_partition_the_sequence(q in prop::collection::vec(0usize..3, 1..120), min in 1usize..15) {
            let all = runs(&q);
            prop_assert_eq!(all[0].start, 0);
            prop_assert_eq!(all.last().unwrap().end, q.len() - 1);
            for w in all.windows(2) {
                prop_assert_eq!(w[0].end + 1, w[1].start);
                prop_assert_ne!(w[0].state, w[1].state);
            }
            let kept = segment(&q, min);
            for w in kept.windows(2) {
                prop_assert!(w[0].end < w[1].start);
            }
            for s in &kept {
                prop_assert!(s.len() >= min && s.end < q.len());
                prop_assert!(q[s.start..=s.end].iter().all(|&v| v == s.state));
            }
        }
    }
}
