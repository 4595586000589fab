//! Open-ended dynamic time warping of a drawn trace onto its template,
//! and the task-performance score derived from the alignment.
//!
//! The whole trace must be aligned, but the alignment may stop anywhere
//! along the template, so an unfinished drawing only matches a template
//! prefix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Point, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwAlignment {
    /// (trace index, template index) pairs from (0, 0) to (n_trace - 1, n_c - 1).
    pub path: Vec<(usize, usize)>,
    pub total_cost: f64,
    /// Number of template points up to and including the last matched one.
    pub n_c: usize,
    /// Mean local distance over the path steps of each trace sample.
    pub per_trace_distance: Vec<f64>,
}

fn distance(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn align(trace: &[Point], template: &[Point]) -> Result<DtwAlignment> {
    for len in [trace.len(), template.len()] {
        if len < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: len });
        }
    }
    if trace.iter().chain(template).flatten().any(|v| !v.is_finite()) {
        return Err(Error::invariant("finite coordinates", "dtw input"));
    }
    let (n, m) = (trace.len(), template.len());
    let idx = |i: usize, j: usize| i * m + j;
    let mut acc = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            let local = distance(&trace[i], &template[j]);
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => acc[idx(0, j - 1)],
                (_, 0) => acc[idx(i - 1, 0)],
                _ => acc[idx(i - 1, j - 1)].min(acc[idx(i - 1, j)]).min(acc[idx(i, j - 1)]),
            };
            acc[idx(i, j)] = best + local;
        }
    }

    // open end: cheapest end column, the later one on ties
    let last = &acc[idx(n - 1, 0)..];
    let mut j_end = 0;
    for j in 1..m {
        if last[j] <= last[j_end] {
            j_end = j;
        }
    }
    let total_cost = last[j_end];

    let mut path = vec![(n - 1, j_end)];
    let (mut i, mut j) = (n - 1, j_end);
    while (i, j) != (0, 0) {
        (i, j) = match (i, j) {
            (0, _) => (0, j - 1),
            (_, 0) => (i - 1, 0),
            _ => {
                let diag = acc[idx(i - 1, j - 1)];
                let up = acc[idx(i - 1, j)];
                let left = acc[idx(i, j - 1)];
                if diag <= up && diag <= left {
                    (i - 1, j - 1)
                } else if up <= left {
                    (i - 1, j)
                } else {
                    (i, j - 1)
                }
            }
        };
        path.push((i, j));
    }
    path.reverse();

    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for &(i, j) in &path {
        sums[i] += distance(&trace[i], &template[j]);
        counts[i] += 1;
    }
    let per_trace_distance = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();

    Ok(DtwAlignment {
        path,
        total_cost,
        n_c: j_end + 1,
        per_trace_distance,
    })
}

/// Speed–accuracy score: template fraction covered over mean distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskPerformance {
    pub fraction_matched: f64,
    pub mean_distance: f64,
    /// `fraction_matched / mean_distance`, or `+inf` for a perfect copy
    /// (zero distance). Perfect trials are left out of regressions.
    pub value: f64,
}

impl TaskPerformance {
    pub fn from_alignment(alignment: &DtwAlignment, n_total: usize) -> Self {
        let fraction_matched = alignment.n_c as f64 / n_total as f64;
        let n = alignment.per_trace_distance.len() as f64;
        let mean_distance = alignment.per_trace_distance.iter().sum::<f64>() / n;
        let value = if mean_distance == 0.0 {
            f64::INFINITY
        } else {
            fraction_matched / mean_distance
        };
        Self {
            fraction_matched,
            mean_distance,
            value,
        }
    }

    pub fn is_perfect(&self) -> bool {
        self.mean_distance == 0.0
    }

    /// The score for regression targets, `None` for perfect copies.
    pub fn finite_value(&self) -> Option<f64> {
        (!self.is_perfect()).then_some(self.value)
    }
}

pub fn task_performance(trace: &Trace) -> Result<TaskPerformance> {
    let alignment = align(&trace.points(), trace.template())?;
    Ok(TaskPerformance::from_alignment(&alignment, trace.template().len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PenSample;
    use crate::synth::brute_force_dtw;
    use proptest::prelude::*;

    fn line(n: usize) -> Vec<Point> {
        (0..n).map(|i| [i as f64, 0.0]).collect()
    }

    #[test]
    fn identical_sequences_align_diagonally() {
        let pts: Vec<Point> = vec![[0.0, 0.0], [3.0, 1.0], [5.0, 4.0], [2.0, 7.0]];
        let a = align(&pts, &pts).unwrap();
        assert_eq!(a.total_cost, 0.0);
        assert_eq!(a.n_c, 4);
        assert_eq!(a.path, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert!(a.per_trace_distance.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn prefix_trace_matches_prefix() {
        let template: Vec<Point> = (0..10).map(|i| [i as f64, (i * i) as f64 * 0.1]).collect();
        for k in 2..=10 {
            let a = align(&template[..k], &template).unwrap();
            assert_eq!(a.n_c, k);
            assert_eq!(a.total_cost, 0.0);
        }
    }

    #[test]
    fn four_point_line_against_five_point_template() {
        let a = align(&line(4), &line(5)).unwrap();
        assert_eq!(a.n_c, 4);
        assert_eq!(a.per_trace_distance.iter().sum::<f64>() / 4.0, 0.0);

        let perturbed = vec![[0.0, 0.3], [1.2, -0.1], [1.9, 0.4], [3.4, 0.0]];
        let fast = align(&perturbed, &line(5)).unwrap();
        let brute = brute_force_dtw(&perturbed, &line(5)).unwrap();
        assert_eq!(fast.total_cost, brute.total_cost);
        assert_eq!(fast.n_c, brute.n_c);
    }

    #[test]
    fn rejects_single_point() {
        assert!(matches!(align(&line(1), &line(3)), Err(Error::TooFewPoints { .. })));
        assert!(matches!(align(&line(3), &line(1)), Err(Error::TooFewPoints { .. })));
    }

    fn trace_of(points: &[Point], template: Vec<Point>) -> Trace {
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, p)| PenSample::new(i as f64 * 0.01, p[0], p[1]))
            .collect();
        Trace::new(samples, template, 8.0).unwrap()
    }

    #[test]
    fn half_template_unit_offset_scores_one_half() {
        let template = line(20);
        let drawn: Vec<Point> = template[..10].iter().map(|p| [p[0], p[1] + 1.0]).collect();
        let perf = task_performance(&trace_of(&drawn, template)).unwrap();
        assert_eq!(perf.fraction_matched, 0.5);
        assert_eq!(perf.mean_distance, 1.0);
        assert!((perf.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn full_coverage_two_pixel_offset() {
        let template = line(12);
        let drawn: Vec<Point> = template.iter().map(|p| [p[0], p[1] - 2.0]).collect();
        let perf = task_performance(&trace_of(&drawn, template)).unwrap();
        assert_eq!(perf.fraction_matched, 1.0);
        assert_eq!(perf.value, 0.5);
    }

    #[test]
    fn perfect_copy_returns_sentinel() {
        let template = line(8);
        let perf = task_performance(&trace_of(&template.clone(), template)).unwrap();
        assert!(perf.is_perfect());
        assert!(perf.value.is_infinite());
        assert_eq!(perf.finite_value(), None);
    }

    fn points(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Point>> {
        proptest::collection::vec((-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| [x, y]), n)
    }

    proptest! {
        #[test]
        fn path_is_monotone_and_anchored(a in points(2..30), b in points(2..30)) {
            let al = align(&a, &b).unwrap();
            prop_assert_eq!(al.path[0], (0, 0));
            prop_assert_eq!(*al.path.last().unwrap(), (a.len() - 1, al.n_c - 1));
            for w in al.path.windows(2) {
                let step = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                prop_assert!(matches!(step, (1, 0) | (0, 1) | (1, 1)));
            }
            prop_assert!(al.n_c <= b.len());
        }

        #[test]
        fn translation_invariant(a in points(2..20), b in points(2..20), dx in -1e3..1e3f64, dy in -1e3..1e3f64) {
            let shift = |p: &Vec<Point>| p.iter().map(|q| [q[0] + dx, q[1] + dy]).collect::<Vec<_>>();
            let t0 = task_performance(&trace_of(&pad(&a), b.clone())).unwrap();
            let t1 = task_performance(&trace_of(&pad(&shift(&a)), shift(&b))).unwrap();
            prop_assume!(!t0.is_perfect());
            prop_assert!((t0.value - t1.value).abs() <= 1e-6 * t0.value.abs());
        }

        #[test]
        fn larger_distances_lower_the_score(a in points(4..20), b in points(2..20), bumps in proptest::collection::vec(1e-3..10.0f64, 20)) {
            let al = align(&a, &b).unwrap();
            let mut worse = al.clone();
            for (d, bump) in worse.per_trace_distance.iter_mut().zip(&bumps) {
                *d += bump;
            }
            let t0 = TaskPerformance::from_alignment(&al, b.len());
            let t1 = TaskPerformance::from_alignment(&worse, b.len());
            prop_assert!(t1.value < t0.value);
        }
    }

    /// Traces need at least four samples.
    fn pad(a: &[Point]) -> Vec<Point> {
        let mut v = a.to_vec();
        while v.len() < 4 {
            v.push(*v.last().unwrap());
        }
        v
    }
}
