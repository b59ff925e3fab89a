//! Regression trees and the leaf-wise / depth-wise growers.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::bins::FeatureBins;
use super::split::{best_split, FeatureHistogram, SplitCandidate, SplitParams};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    /// Always split the leaf with the largest gain next.
    Leafwise,
    /// Split every frontier leaf, one level at a time.
    Depthwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        /// `v <= threshold` goes left.
        threshold: f64,
        /// Where NaN goes.
        default_left: bool,
        left: u32,
        right: u32,
        /// Training loss reduction of this split.
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

/// Arena-allocated binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Tree {
        Tree { nodes: alloc::vec![Node::Leaf { value }] }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, default_left, left, right, .. } => {
                    let v = row[feature as usize];
                    let go_left = if v.is_nan() { default_left } else { v <= threshold };
                    i = if go_left { left } else { right } as usize;
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    /// Internal nodes as `(feature, gain)`.
    pub fn splits(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Split { feature, gain, .. } => Some((feature as usize, gain)),
            Node::Leaf { .. } => None,
        })
    }
}

/// Pre-binned training matrix, column-major.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub n_rows: usize,
    pub bins: Vec<FeatureBins>,
    /// `codes[f][r]`.
    pub codes: Vec<Vec<u8>>,
}

impl BinnedMatrix {
    pub fn n_features(&self) -> usize {
        self.bins.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowParams {
    pub growth: Growth,
    /// Leaf cap for leaf-wise growth.
    pub num_leaves: usize,
    /// 0 means unlimited.
    pub max_depth: usize,
    pub split: SplitParams,
    /// Multiplies every leaf value (the boosting learning rate).
    pub leaf_scale: f64,
}

/// Leaves at least this large keep their histograms for sibling subtraction.
const HIST_CACHE_MIN_ROWS: usize = 256;

/// Below this many row×feature cells histograms are built serially.
const PAR_MIN_CELLS: usize = 1 << 15;

struct Leaf {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
    hist: Option<Vec<FeatureHistogram>>,
    best: Option<SplitCandidate>,
}

struct Grower<'a> {
    data: &'a BinnedMatrix,
    grad: &'a [f64],
    features: &'a [usize],
    params: &'a GrowParams,
    rows: Vec<u32>,
    nodes: Vec<Node>,
    scratch: Vec<u32>,
}

impl<'a> Grower<'a> {
    fn histograms(&self, start: usize, end: usize) -> Vec<FeatureHistogram> {
        let rows = &self.rows[start..end];
        let build = |k: usize| {
            let f = self.features[k];
            FeatureHistogram::build(self.data.bins[f].n_bins(), &self.data.codes[f], rows, self.grad)
        };
        if rows.len() * self.features.len() >= PAR_MIN_CELLS {
            par::map_indexed(self.features.len(), build)
        } else {
            (0..self.features.len()).map(build).collect()
        }
    }

    fn can_split(&self, depth: usize, n: usize) -> bool {
        (self.params.max_depth == 0 || depth < self.params.max_depth)
            && n >= 2 * self.params.split.min_child_weight.max(1) as usize
    }

    /// Best split over the sampled features; ties go to the lowest feature.
    fn find_best(&self, hist: &[FeatureHistogram], depth: usize, n: usize) -> Option<SplitCandidate> {
        if !self.can_split(depth, n) {
            return None;
        }
        let mut best: Option<SplitCandidate> = None;
        for (k, h) in hist.iter().enumerate() {
            let f = self.features[k];
            if let Some(mut c) = best_split(h, &self.data.bins[f], &self.params.split) {
                c.feature = f;
                if best.is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn make_leaf(&mut self, node: usize, start: usize, end: usize, depth: usize, hist: Option<Vec<FeatureHistogram>>) -> Leaf {
        let n = end - start;
        let hist = match hist {
            Some(h) => h,
            None => self.histograms(start, end),
        };
        let best = self.find_best(&hist, depth, n);
        let keep = best.is_some() && n >= HIST_CACHE_MIN_ROWS;
        Leaf { node, start, end, depth, hist: keep.then_some(hist), best }
    }

    fn leaf_value(&self, start: usize, end: usize) -> f64 {
        let rows = &self.rows[start..end];
        let sum: f64 = rows.iter().map(|&r| self.grad[r as usize]).sum();
        self.params.leaf_scale * (sum / rows.len() as f64)
    }

    /// Stable partition of the leaf's rows; returns the left size.
    fn partition(&mut self, leaf: &Leaf, split: &SplitCandidate) -> usize {
        let codes = &self.data.codes[split.feature];
        let bin = split.bin;
        let goes_left = |r: u32| {
            let c = codes[r as usize];
            if c == super::bins::NAN_BIN {
                split.nan_left
            } else {
                usize::from(c) <= bin
            }
        };
        self.scratch.clear();
        let mut write = leaf.start;
        for i in leaf.start..leaf.end {
            let r = self.rows[i];
            if goes_left(r) {
                self.rows[write] = r;
                write += 1;
            } else {
                self.scratch.push(r);
            }
        }
        let n_left = write - leaf.start;
        self.rows[write..leaf.end].copy_from_slice(&self.scratch);
        n_left
    }

    fn split(&mut self, leaf: Leaf) -> (Leaf, Leaf) {
        let split = leaf.best.expect("split requested on a terminal leaf");
        let n_left = self.partition(&leaf, &split);
        debug_assert_eq!(n_left as u32, split.left_count);
        let mid = leaf.start + n_left;
        let left_node = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        self.nodes.push(Node::Leaf { value: 0.0 });
        self.nodes[leaf.node] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            default_left: split.nan_left,
            left: left_node as u32,
            right: left_node as u32 + 1,
            gain: split.gain,
        };
        let depth = leaf.depth + 1;
        let (small_is_left, small, large) = if n_left <= leaf.end - mid {
            (true, (leaf.start, mid), (mid, leaf.end))
        } else {
            (false, (mid, leaf.end), (leaf.start, mid))
        };
        let small_hist = self.histograms(small.0, small.1);
        let large_hist = leaf.hist.as_ref().map(|parent| {
            parent.iter().zip(&small_hist).map(|(p, s)| p.subtract(s)).collect::<Vec<_>>()
        });
        let (small_node, large_node) = if small_is_left {
            (left_node, left_node + 1)
        } else {
            (left_node + 1, left_node)
        };
        let small_leaf = self.make_leaf(small_node, small.0, small.1, depth, Some(small_hist));
        let large_leaf = self.make_leaf(large_node, large.0, large.1, depth, large_hist);
        if small_is_left {
            (small_leaf, large_leaf)
        } else {
            (large_leaf, small_leaf)
        }
    }

    fn finish(mut self, leaves: Vec<Leaf>) -> Tree {
        for leaf in leaves {
            let value = self.leaf_value(leaf.start, leaf.end);
            self.nodes[leaf.node] = Node::Leaf { value };
        }
        Tree { nodes: self.nodes }
    }
}

/// Grows one tree on the residuals `grad` of the given rows, restricted to
/// `features` (ascending). Rows may repeat (bootstrap samples).
///
/// Leaf values are the mean residual of their rows times
/// `params.leaf_scale`. An empty row set yields a zero leaf.
pub fn grow_tree(
    data: &BinnedMatrix,
    rows: Vec<u32>,
    grad: &[f64],
    features: &[usize],
    params: &GrowParams,
) -> Tree {
    if rows.is_empty() {
        return Tree::leaf(0.0);
    }
    let n = rows.len();
    let mut g = Grower { data, grad, features, params, rows, nodes: alloc::vec![Node::Leaf { value: 0.0 }], scratch: Vec::new() };
    let root = g.make_leaf(0, 0, n, 0, None);
    let mut done: Vec<Leaf> = Vec::new();
    match params.growth {
        Growth::Leafwise => {
            let cap = params.num_leaves.max(1);
            let mut open = alloc::vec![root];
            while done.len() + open.len() < cap {
                let mut pick: Option<usize> = None;
                for (i, l) in open.iter().enumerate() {
                    if let Some(b) = l.best {
                        if pick.is_none_or(|p| b.gain > open[p].best.map_or(f64::NEG_INFINITY, |x| x.gain)) {
                            pick = Some(i);
                        }
                    }
                }
                let Some(i) = pick else { break };
                let leaf = open.remove(i);
                let (l, r) = g.split(leaf);
                open.insert(i, r);
                open.insert(i, l);
            }
            done.extend(open);
        }
        Growth::Depthwise => {
            let mut frontier = alloc::vec![root];
            while !frontier.is_empty() {
                let mut next = Vec::new();
                for leaf in frontier {
                    if leaf.best.is_some() {
                        let (l, r) = g.split(leaf);
                        next.push(l);
                        next.push(r);
                    } else {
                        done.push(leaf);
                    }
                }
                frontier = next;
            }
        }
    }
    g.finish(done)
}

#[cfg(test)]
mod tests {
    use super::super::bins::build_bins;
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bin_columns(cols: &[Vec<f64>]) -> BinnedMatrix {
        let bins: Vec<FeatureBins> = cols.iter().map(|c| build_bins(c, 255)).collect();
        let codes = cols.iter().zip(&bins).map(|(c, b)| c.iter().map(|&v| b.bin(v)).collect()).collect();
        BinnedMatrix { n_rows: cols[0].len(), bins, codes }
    }

    fn params(growth: Growth, num_leaves: usize, max_depth: usize) -> GrowParams {
        GrowParams {
            growth,
            num_leaves,
            max_depth,
            split: SplitParams { min_child_weight: 1, min_gain: 0.0 },
            leaf_scale: 1.0,
        }
    }

    fn sse(tree: &Tree, cols: &[Vec<f64>], y: &[f64]) -> f64 {
        (0..y.len())
            .map(|i| {
                let row: Vec<f64> = cols.iter().map(|c| c[i]).collect();
                let e = y[i] - tree.predict(&row);
                e * e
            })
            .sum()
    }

    #[test]
    fn single_leaf_is_mean() {
        let cols = vec![vec![1.0, 2.0, 3.0, 4.0]];
        let y = [1.0, 2.0, 4.0, 9.0];
        let t = grow_tree(&bin_columns(&cols), (0..4).collect(), &y, &[0], &params(Growth::Leafwise, 1, 0));
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[0.0]), 4.0);
    }

    #[test]
    fn separable_target_is_fit_exactly() {
        let cols = vec![vec![0.1, 0.2, 0.3, 0.7, 0.8, 0.9]];
        let y = [3.0, 3.0, 3.0, -1.0, -1.0, -1.0];
        let t = grow_tree(&bin_columns(&cols), (0..6).collect(), &y, &[0], &params(Growth::Leafwise, 8, 0));
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(sse(&t, &cols, &y), 0.0);
    }

    #[test]
    fn leafwise_respects_leaf_cap_and_depthwise_respects_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..200).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let data = bin_columns(&cols);
        let lw = grow_tree(&data, (0..200).collect(), &y, &[0, 1, 2], &params(Growth::Leafwise, 11, 0));
        assert_eq!(lw.n_leaves(), 11);
        let dw = grow_tree(&data, (0..200).collect(), &y, &[0, 1, 2], &params(Growth::Depthwise, 0, 4));
        assert_eq!(dw.depth(), 4);
        // greedy splits can isolate single rows early, so fewer than 2^4 leaves
        assert!(dw.n_leaves() <= 16 && dw.n_leaves() > 8);
    }

    #[test]
    fn leafwise_beats_depthwise_at_equal_leaves() {
        // 50 random rows, fixed seed; both trees end with 8 leaves.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..50).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<f64> = (0..50).map(|i| 3.0 * cols[0][i] - 2.0 * cols[1][i] * cols[2][i] + rng.random::<f64>()).collect();
        let data = bin_columns(&cols);
        let feats = [0, 1, 2, 3];
        let lw = grow_tree(&data, (0..50).collect(), &y, &feats, &params(Growth::Leafwise, 8, 0));
        let dw = grow_tree(&data, (0..50).collect(), &y, &feats, &params(Growth::Depthwise, 0, 3));
        assert_eq!(lw.n_leaves(), 8);
        assert_eq!(dw.n_leaves(), 8);
        assert!(sse(&lw, &cols, &y) <= sse(&dw, &cols, &y));
    }

    #[test]
    fn subtraction_path_matches_direct_histograms() {
        // Enough rows that the root caches its histogram.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 2000;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| (rng.random_range(0..40) as f64) * 0.5).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|i| (cols[0][i] - 5.0).abs() + rng.random_range(-4..4) as f64).collect();
        let data = bin_columns(&cols);
        let t = grow_tree(&data, (0..n as u32).collect(), &y, &[0, 1, 2], &params(Growth::Leafwise, 31, 0));
        // Every leaf value must be the exact mean of the rows routed to it.
        let mut sums = alloc::collections::BTreeMap::<usize, (f64, usize)>::new();
        for i in 0..n {
            let mut node = 0usize;
            loop {
                match t.nodes[node] {
                    Node::Leaf { .. } => break,
                    Node::Split { feature, threshold, default_left, left, right, .. } => {
                        let v = cols[feature as usize][i];
                        let l = if v.is_nan() { default_left } else { v <= threshold };
                        node = if l { left } else { right } as usize;
                    }
                }
            }
            let e = sums.entry(node).or_default();
            e.0 += y[i];
            e.1 += 1;
        }
        for (node, (s, c)) in sums {
            let Node::Leaf { value } = t.nodes[node] else { unreachable!() };
            assert!((value - s / c as f64).abs() <= 1e-9 * value.abs().max(1.0));
        }
    }
}
