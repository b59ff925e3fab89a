//! Histogram split search for squared loss.
//!
//! With unit hessians a node's loss reduction from a split is
//! `G_L²/n_L + G_R²/n_R − G²/n`, where `G` are residual sums and `n` row
//! counts. Every boundary between adjacent bins is tried with NaN rows
//! sent left and then right.

use alloc::vec;
use alloc::vec::Vec;

use super::bins::{midpoint, FeatureBins, NAN_BIN};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinStat {
    pub sum: f64,
    pub count: u32,
}

impl BinStat {
    #[inline]
    fn add(&mut self, g: f64) {
        self.sum += g;
        self.count += 1;
    }
}

/// Residual sums and counts per bin of one feature, plus the NaN bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureHistogram {
    pub bins: Vec<BinStat>,
    pub nan: BinStat,
}

impl FeatureHistogram {
    pub fn new(n_bins: usize) -> FeatureHistogram {
        FeatureHistogram { bins: vec![BinStat::default(); n_bins], nan: BinStat::default() }
    }

    /// Accumulates `grad[r]` for each listed row, in list order.
    pub fn build(n_bins: usize, bin_of_row: &[u8], rows: &[u32], grad: &[f64]) -> FeatureHistogram {
        let mut h = FeatureHistogram::new(n_bins);
        for &r in rows {
            let r = r as usize;
            let b = bin_of_row[r];
            if b == NAN_BIN {
                h.nan.add(grad[r]);
            } else {
                h.bins[usize::from(b)].add(grad[r]);
            }
        }
        h
    }

    /// `self − other`, for deriving a sibling from its parent.
    pub fn subtract(&self, other: &FeatureHistogram) -> FeatureHistogram {
        let sub = |a: &BinStat, b: &BinStat| BinStat { sum: a.sum - b.sum, count: a.count - b.count };
        FeatureHistogram {
            bins: self.bins.iter().zip(&other.bins).map(|(a, b)| sub(a, b)).collect(),
            nan: sub(&self.nan, &other.nan),
        }
    }

    fn total(&self) -> BinStat {
        let mut t = BinStat::default();
        for b in &self.bins {
            t.sum += b.sum;
            t.count += b.count;
        }
        t.sum += self.nan.sum;
        t.count += self.nan.count;
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    /// Minimum rows per child (at least 1).
    pub min_child_weight: u32,
    /// Minimum loss reduction.
    pub min_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    /// Feature index; filled in by the caller that knows it.
    pub feature: usize,
    /// Split sends bins `0..=bin` left.
    pub bin: usize,
    /// `v <= threshold` goes left.
    pub threshold: f64,
    pub nan_left: bool,
    pub gain: f64,
    pub left_count: u32,
    pub right_count: u32,
}

#[inline]
fn split_gain(left_sum: f64, left_n: u32, total_sum: f64, total_n: u32) -> f64 {
    let right_sum = total_sum - left_sum;
    let right_n = total_n - left_n;
    left_sum * left_sum / f64::from(left_n) + right_sum * right_sum / f64::from(right_n)
        - total_sum * total_sum / f64::from(total_n)
}

/// Scans cumulative (sum, count) prefixes in order. `prefix[b]` covers
/// everything up to and including boundary `b`; `threshold[b]` is the cut.
/// Shared by the histogram and brute-force paths so both apply identical
/// arithmetic and tie-breaking.
fn scan(
    boundaries: impl Iterator<Item = (usize, BinStat, f64)>,
    nan: BinStat,
    total: BinStat,
    params: &SplitParams,
) -> Option<SplitCandidate> {
    let min_child = params.min_child_weight.max(1);
    let mut best: Option<SplitCandidate> = None;
    for (bin, prefix, threshold) in boundaries {
        for nan_left in [true, false] {
            let (ls, ln) = if nan_left {
                (prefix.sum + nan.sum, prefix.count + nan.count)
            } else {
                (prefix.sum, prefix.count)
            };
            if ln < min_child || total.count - ln < min_child {
                continue;
            }
            let gain = split_gain(ls, ln, total.sum, total.count);
            if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature: 0,
                    bin,
                    threshold,
                    nan_left,
                    gain,
                    left_count: ln,
                    right_count: total.count - ln,
                });
            }
        }
    }
    best.filter(|b| b.gain >= params.min_gain)
}

/// Best boundary of one feature's histogram, or `None` when no legal split
/// reaches `min_gain`. Ties go to the lowest bin, then to NaN-left.
pub fn best_split(
    hist: &FeatureHistogram,
    bins: &FeatureBins,
    params: &SplitParams,
) -> Option<SplitCandidate> {
    let total = hist.total();
    if total.count == 0 {
        return None;
    }
    let mut prefix = BinStat::default();
    let boundaries = hist.bins.iter().zip(&bins.edges).enumerate().map(move |(b, (stat, &edge))| {
        prefix.sum += stat.sum;
        prefix.count += stat.count;
        (b, prefix, edge)
    });
    scan(boundaries, hist.nan, total, params)
}

/// Brute-force reference: sorts the column, groups equal values and tries
/// every midpoint between consecutive distinct values.
///
/// Residuals within a group are summed in row order, which reproduces the
/// histogram's arithmetic exactly whenever each distinct value has its own
/// bin. Intended for testing; O(n log n) per call.
pub fn exact_best_split(column: &[f64], grad: &[f64], params: &SplitParams) -> Option<SplitCandidate> {
    assert_eq!(column.len(), grad.len(), "column and gradient lengths differ");
    let mut order: Vec<usize> = (0..column.len()).filter(|&i| !column[i].is_nan()).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]).then(a.cmp(&b)));

    let mut groups: Vec<(f64, BinStat)> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some((v, stat)) if *v == column[i] => stat.add(grad[i]),
            _ => {
                let mut stat = BinStat::default();
                stat.add(grad[i]);
                groups.push((column[i], stat));
            }
        }
    }
    let mut nan = BinStat::default();
    for i in 0..column.len() {
        if column[i].is_nan() {
            nan.add(grad[i]);
        }
    }
    let mut total = BinStat::default();
    for (_, g) in &groups {
        total.sum += g.sum;
        total.count += g.count;
    }
    total.sum += nan.sum;
    total.count += nan.count;
    if total.count == 0 {
        return None;
    }

    let mut cuts = Vec::with_capacity(groups.len().saturating_sub(1));
    let mut prefix = BinStat::default();
    for (k, w) in groups.windows(2).enumerate() {
        prefix.sum += w[0].1.sum;
        prefix.count += w[0].1.count;
        cuts.push((k, prefix, midpoint(w[0].0, w[1].0)));
    }
    scan(cuts.into_iter(), nan, total, params)
}

#[cfg(test)]
mod tests {
    use super::super::bins::build_bins;
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn hist_split(col: &[f64], grad: &[f64], params: &SplitParams) -> Option<SplitCandidate> {
        let bins = build_bins(col, 255);
        let binned: Vec<u8> = col.iter().map(|&v| bins.bin(v)).collect();
        let rows: Vec<u32> = (0..col.len() as u32).collect();
        let h = FeatureHistogram::build(bins.n_bins(), &binned, &rows, grad);
        best_split(&h, &bins, params)
    }

    const LOOSE: SplitParams = SplitParams { min_child_weight: 1, min_gain: 0.0 };

    #[test]
    fn two_level_target() {
        let col = [1.0, 1.0, 2.0, 2.0];
        let grad = [0.0, 0.0, 10.0, 10.0];
        let s = hist_split(&col, &grad, &LOOSE).unwrap();
        assert_eq!(s.threshold, 1.5);
        assert_eq!(s.gain, 100.0);
        assert_eq!((s.left_count, s.right_count), (2, 2));
        let e = exact_best_split(&col, &grad, &LOOSE).unwrap();
        assert_eq!((e.threshold, e.gain), (1.5, 100.0));
    }

    #[test]
    fn constant_targets_do_not_split() {
        let col = [1.0, 2.0, 3.0, 4.0];
        let strict = SplitParams { min_child_weight: 1, min_gain: 1e-6 };
        assert!(hist_split(&col, &[5.0; 4], &strict).is_none());
        assert!(exact_best_split(&col, &[5.0; 4], &strict).is_none());
    }

    #[test]
    fn child_size_constraint() {
        let p = SplitParams { min_child_weight: 3, min_gain: 0.0 };
        assert!(hist_split(&[1.0, 1.0, 2.0, 2.0], &[0.0, 0.0, 10.0, 10.0], &p).is_none());
    }

    #[test]
    fn constant_feature_has_no_split() {
        assert!(exact_best_split(&[2.0; 6], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &LOOSE).is_none());
        assert!(hist_split(&[2.0; 6], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &LOOSE).is_none());
    }

    #[test]
    fn empty_histogram() {
        let h = FeatureHistogram::new(3);
        let bins = FeatureBins { edges: alloc::vec![1.0, 2.0] };
        assert!(best_split(&h, &bins, &LOOSE).is_none());
    }

    #[test]
    fn nan_rows_choose_the_better_side() {
        // NaN rows look like the high group, so they should go right.
        let col = [1.0, 1.0, 2.0, 2.0, f64::NAN, f64::NAN];
        let grad = [0.0, 0.0, 10.0, 10.0, 10.0, 10.0];
        let s = hist_split(&col, &grad, &LOOSE).unwrap();
        assert!(!s.nan_left);
        assert_eq!(s.threshold, 1.5);
        let e = exact_best_split(&col, &grad, &LOOSE).unwrap();
        assert_eq!((e.threshold, e.nan_left, e.gain), (s.threshold, s.nan_left, s.gain));
    }

    #[test]
    fn subtraction_recovers_sibling() {
        let bins = FeatureBins { edges: alloc::vec![0.5, 1.5] };
        let binned = [0u8, 1, 2, NAN_BIN, 1];
        let grad = [1.0, 2.0, 3.0, 4.0, 5.0];
        let parent = FeatureHistogram::build(bins.n_bins(), &binned, &[0, 1, 2, 3, 4], &grad);
        let left = FeatureHistogram::build(bins.n_bins(), &binned, &[0, 3], &grad);
        let right = FeatureHistogram::build(bins.n_bins(), &binned, &[1, 2, 4], &grad);
        assert_eq!(parent.subtract(&left), right);
    }

    proptest! {
        #[test]
        fn histogram_matches_brute_force(
            data in proptest::collection::vec((0u8..40, -50i32..50, proptest::bool::weighted(0.1)), 2..120),
            mcw in 1u32..4,
        ) {
            let col: Vec<f64> = data.iter().map(|&(v, _, nan)| if nan { f64::NAN } else { f64::from(v) * 0.25 }).collect();
            let grad: Vec<f64> = data.iter().map(|&(_, g, _)| f64::from(g) * 0.37).collect();
            let p = SplitParams { min_child_weight: mcw, min_gain: 0.0 };
            let h = hist_split(&col, &grad, &p);
            let e = exact_best_split(&col, &grad, &p);
            prop_assert_eq!(h.map(|s| (s.threshold, s.nan_left, s.gain.to_bits())),
                            e.map(|s| (s.threshold, s.nan_left, s.gain.to_bits())));
        }
    }
}
