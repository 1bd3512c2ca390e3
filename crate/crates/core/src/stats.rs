//! Small order-statistics helpers shared by the accuracy and privacy metrics.

use alloc::vec::Vec;

/// Percentile with linear interpolation between closest ranks (inclusive).
///
/// `values` does not need to be sorted. `p` is in percent, 0..=100.
/// Returns `None` on an empty input.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("non-finite value in percentile"));
    Some(percentile_sorted(&sorted, p))
}

/// Same as [`percentile`] but assumes `sorted` is ascending.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let p = p.clamp(0.0, 100.0);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank as usize;
    let hi = if lo + 1 < sorted.len() { lo + 1 } else { lo };
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Median via [`percentile`].
pub fn median(values: &[f64]) -> Option<f64> {
    percentile(values, 50.0)
}

/// Arithmetic mean; `None` on empty input.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_length() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
    }

    #[test]
    fn median_even_length_interpolates() {
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), Some(2.5));
    }

    #[test]
    fn percentile_of_singleton_is_the_value() {
        assert_eq!(percentile(&[7.5], 95.0), Some(7.5));
    }

    #[test]
    fn p95_linear_interpolation() {
        // rank = 0.95 * 4 = 3.8 -> 4 + 0.8 * (5 - 4)
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((percentile(&v, 95.0).unwrap() - 4.8).abs() < 1e-12);
    }

    #[test]
    fn empty_input() {
        assert_eq!(percentile(&[], 50.0), None);
        assert_eq!(mean(&[]), None);
    }
}
