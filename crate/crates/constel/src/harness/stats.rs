//! Small statistics helpers shared by the report builders.

use serde::{Deserialize, Serialize};

/// Arithmetic mean; `None` on an empty slice.
pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Sample standard deviation (ddof = 1). Fewer than two points yield 0.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs).expect("non-empty");
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Nearest-rank percentile. `None` on an empty slice.
pub fn percentile(xs: &[f64], pct: f64) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Least-squares line fit. A fit over fewer than two points or over a
/// zero-variance abscissa is flagged degenerate and carries no coefficients.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub points: usize,
    pub degenerate: bool,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len(), "paired samples");
    let n = xs.len();
    let degenerate = LinearFit {
        slope: None,
        intercept: None,
        points: n,
        degenerate: true,
    };
    if n < 2 {
        return degenerate;
    }
    let mx = mean(xs).expect("non-empty");
    let my = mean(ys).expect("non-empty");
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return degenerate;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    LinearFit {
        slope: Some(slope),
        intercept: Some(my - slope * mx),
        points: n,
        degenerate: false,
    }
}

/// Ranks starting at 1, ties resolved to the average rank of the tied block.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Positions i..=j hold one tied block; ranks are 1-based.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation via Pearson on average ranks. `None` when either
/// margin has zero rank variance or fewer than two points exist.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "paired samples");
    if xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mx = mean(&rx).expect("non-empty");
    let my = mean(&ry).expect("non-empty");
    let sxx: f64 = rx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ry.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let sxy: f64 = rx.iter().zip(&ry).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_std_hand_values() {
        assert_eq!(mean(&[]), None);
        assert_eq!(mean(&[2.0, 4.0]), Some(3.0));
        assert_eq!(sample_std(&[5.0]), 0.0);
        // var([2,4,4,4,5,5,7,9], ddof=1) = 32/7
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert!((sample_std(&xs) - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn percentile_nearest_rank_edges() {
        let xs = [15.0, 20.0, 35.0, 40.0, 50.0];
        assert_eq!(percentile(&xs, 5.0), Some(15.0));
        assert_eq!(percentile(&xs, 30.0), Some(20.0));
        assert_eq!(percentile(&xs, 40.0), Some(20.0));
        assert_eq!(percentile(&xs, 50.0), Some(35.0));
        assert_eq!(percentile(&xs, 100.0), Some(50.0));
        assert_eq!(percentile(&[], 50.0), None);
    }

    #[test]
    fn linear_fit_recovers_an_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let fit = linear_fit(&xs, &ys);
        assert!(!fit.degenerate);
        assert!((fit.slope.unwrap() - 2.0).abs() < 1e-12);
        assert!((fit.intercept.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_flags_zero_x_variance() {
        let fit = linear_fit(&[2.0, 2.0, 2.0], &[1.0, 5.0, 9.0]);
        assert!(fit.degenerate);
        assert_eq!(fit.slope, None);
        assert!(linear_fit(&[1.0], &[1.0]).degenerate);
    }

    #[test]
    fn average_ranks_handle_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 30.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(average_ranks(&[7.0, 7.0, 7.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_detects_monotone_relations() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let inc = [2.0, 4.0, 8.0, 16.0, 32.0];
        let dec = [9.0, 7.0, 5.0, 3.0, 1.0];
        assert!((spearman_rho(&xs, &inc).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman_rho(&xs, &dec).unwrap() + 1.0).abs() < 1e-12);
        // Constant margin carries no rank information.
        assert_eq!(spearman_rho(&xs, &[3.0; 5]), None);
    }
}
