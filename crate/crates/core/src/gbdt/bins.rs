//! Quantile histogram binning.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Bin index reserved for NaN.
pub const NAN_BIN: u8 = u8::MAX;

/// Largest supported `max_bins`; bin indices must stay below [`NAN_BIN`].
pub const MAX_BINS_LIMIT: usize = 255;

/// Interior bin edges of one feature, strictly increasing.
///
/// Bin `b` holds values in `(edges[b-1], edges[b]]`, so a split after bin
/// `b` sends `v <= edges[b]` left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    pub edges: Vec<f64>,
}

impl FeatureBins {
    /// Number of non-NaN bins.
    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin(&self, v: f64) -> u8 {
        if v.is_nan() {
            NAN_BIN
        } else {
            self.edges.partition_point(|&e| e < v) as u8
        }
    }
}

/// A split point strictly between `a < b` that keeps `a` left and `b` right.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m >= b || m < a {
        a
    } else {
        m
    }
}

/// Edges at empirical quantiles of the non-NaN values.
///
/// When the column has at most `max_bins` distinct values every distinct
/// value gets its own bin and edges sit between neighbours, which makes
/// histogram split search lossless.
pub fn build_bins(column: &[f64], max_bins: usize) -> FeatureBins {
    let max_bins = max_bins.clamp(1, MAX_BINS_LIMIT);
    let mut sorted: Vec<f64> = column.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        let edges = distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
        return FeatureBins { edges };
    }
    let n = sorted.len();
    let mut edges: Vec<f64> = Vec::with_capacity(max_bins - 1);
    for k in 1..max_bins {
        let idx = k * n / max_bins;
        if idx == 0 || idx >= n {
            continue;
        }
        let (lo, hi) = (sorted[idx - 1], sorted[idx]);
        let edge = if lo < hi { midpoint(lo, hi) } else { lo };
        if edges.last().is_none_or(|&last| edge > last) && edge < sorted[n - 1] {
            edges.push(edge);
        }
    }
    FeatureBins { edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn few_distinct_values_get_midpoints() {
        let b = build_bins(&[3.0, 1.0, 2.0, 2.0], 255);
        assert_eq!(b.edges, [1.5, 2.5]);
        assert_eq!(b.bin(1.0), 0);
        assert_eq!(b.bin(2.0), 1);
        assert_eq!(b.bin(3.0), 2);
        assert_eq!(b.bin(f64::NAN), NAN_BIN);
    }

    #[test]
    fn constant_and_empty_columns() {
        assert!(build_bins(&[4.0; 10], 255).edges.is_empty());
        assert!(build_bins(&[f64::NAN; 5], 255).edges.is_empty());
        assert!(build_bins(&[], 255).edges.is_empty());
    }

    #[test]
    fn uniform_column_fills_bins_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let col: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let b = build_bins(&col, 255);
        assert_eq!(b.n_bins(), 255);
        let mut counts = [0usize; 255];
        for &v in &col {
            counts[usize::from(b.bin(v))] += 1;
        }
        let expected = 10_000.0 / 255.0;
        for c in counts {
            assert!((c as f64) <= 3.0 * expected && (c as f64) >= expected / 3.0, "{c}");
        }
    }

    #[test]
    fn heavy_ties_keep_edges_increasing() {
        let mut col = alloc::vec![0.0; 5000];
        col.extend((0..5000).map(|i| i as f64));
        let b = build_bins(&col, 16);
        assert!(b.edges.windows(2).all(|w| w[0] < w[1]));
        assert!(b.n_bins() <= 16);
        assert_eq!(b.bin(0.0), 0);
    }

    #[test]
    fn midpoint_separates_adjacent_floats() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }
}
