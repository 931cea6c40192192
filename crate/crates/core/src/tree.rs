//! Regression tree (CART) with variance-reduction split finding, both
//! exhaustive over midpoints of consecutive distinct values and restricted
//! to histogram bin edges. Weighted SSE uses the one-pass form
//! `sum(w*y^2) - sum(w*y)^2 / sum(w)` with compensated summation, which is
//! what lets AdaBoost sample weights drive the split criterion.
//!
//! Reproducibility contract: thresholds sit at midpoints, `x <= t` routes
//! left, and ties break toward the smallest feature index then the smallest
//! threshold, so a fit is a pure function of (data, weights, config).

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::CoreError;
use crate::frame::FeatureFrame;
use crate::rng;

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Exhaustive,
    /// Candidate thresholds restricted to equal-frequency quantile bin
    /// edges, computed once per tree.
    Histogram(usize),
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_gain: f64,
    pub feature_subsample: f64,
    pub split_mode: SplitMode,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 12,
            min_samples_leaf: 5,
            min_gain: 1e-12,
            feature_subsample: 1.0,
            split_mode: SplitMode::Exhaustive,
            seed: 0,
        }
    }
}

impl TreeConfig {
    fn validate(&self) -> Result<(), CoreError> {
        if self.max_depth < 1 {
            return Err(CoreError::InvalidConfig(String::from("max_depth must be >= 1")));
        }
        if self.min_samples_leaf < 1 {
            return Err(CoreError::InvalidConfig(String::from("min_samples_leaf must be >= 1")));
        }
        if !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(CoreError::InvalidConfig(String::from("feature_subsample must be in (0,1]")));
        }
        if self.min_gain < 0.0 {
            return Err(CoreError::InvalidConfig(String::from("min_gain must be >= 0")));
        }
        if let SplitMode::Histogram(bins) = self.split_mode {
            if bins < 2 {
                return Err(CoreError::InvalidConfig(String::from("histogram bins must be >= 2")));
            }
        }
        Ok(())
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64, count: usize },
}

/// Fitted regression tree; `nodes[0]` is the root.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64], names: &FeatureNames) -> Result<f64, CoreError> {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return Ok(*value),
                Node::Split { feature, threshold, left, right } => {
                    let v = row.get(*feature).copied().unwrap_or(f64::NAN);
                    if v.is_nan() {
                        return Err(CoreError::MissingFeature {
                            index: *feature,
                            name: names.name(*feature),
                        });
                    }
                    at = if v <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<f64>, CoreError> {
        let names = FeatureNames::Frame(frame);
        (0..frame.n_rows()).map(|i| self.predict_row(frame.row(i), &names)).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Feature-name lookup for error messages; prediction paths that only have
/// a bare row can pass `FeatureNames::None`.
pub enum FeatureNames<'a> {
    Frame(&'a FeatureFrame),
    None,
}

impl FeatureNames<'_> {
    fn name(&self, index: usize) -> String {
        match self {
            FeatureNames::Frame(f) => {
                f.columns.get(index).map(|c| c.name.clone()).unwrap_or_default()
            }
            FeatureNames::None => String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

fn sse(sw: f64, swy: f64, swyy: f64) -> f64 {
    if sw <= 0.0 {
        return 0.0;
    }
    (swyy - swy * swy / sw).max(0.0)
}

/// Best variance-reduction split of a single column: maximizes
/// `SSE(parent) - SSE(left) - SSE(right)` over midpoints between consecutive
/// distinct sorted values. Returns None when no candidate satisfies
/// `min_samples_leaf` or strictly improves by at least `min_gain`.
pub fn best_split(
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    min_samples_leaf: usize,
    min_gain: f64,
) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n || weights.len() != n {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]));

    let (mut tw, mut twy, mut twyy) = (Kahan::default(), Kahan::default(), Kahan::default());
    for i in 0..n {
        let w = weights[i];
        tw.add(w);
        twy.add(w * y[i]);
        twyy.add(w * y[i] * y[i]);
    }
    let parent = sse(tw.sum, twy.sum, twyy.sum);

    let (mut lw, mut lwy, mut lwyy) = (Kahan::default(), Kahan::default(), Kahan::default());
    let mut best: Option<(f64, f64)> = None;
    for pos in 0..n - 1 {
        let i = order[pos];
        let w = weights[i];
        lw.add(w);
        lwy.add(w * y[i]);
        lwyy.add(w * y[i] * y[i]);
        let (xa, xb) = (x[order[pos]], x[order[pos + 1]]);
        if xb <= xa {
            continue; // not a boundary between distinct values
        }
        let n_left = pos + 1;
        if n_left < min_samples_leaf || n - n_left < min_samples_leaf {
            continue;
        }
        let left = sse(lw.sum, lwy.sum, lwyy.sum);
        let right = sse(tw.sum - lw.sum, twy.sum - lwy.sum, twyy.sum - lwyy.sum);
        let gain = (parent - left - right).max(0.0);
        let threshold = 0.5 * (xa + xb);
        if gain > 0.0 && gain >= min_gain && best.map_or(true, |(_, g)| gain > g) {
            best = Some((threshold, gain));
        }
    }
    best
}

/// Equal-frequency quantile bin edges for a column, at most `bins - 1` of
/// them, always midpoints between consecutive distinct values. With
/// `bins >= distinct values` every distinct boundary becomes an edge, which
/// makes histogram splitting coincide with the exhaustive search.
pub fn bin_edges(x: &[f64], bins: usize) -> Vec<f64> {
    let n = x.len();
    if n < 2 || bins < 2 {
        return Vec::new();
    }
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    // distinct values with cumulative counts
    let mut values: Vec<f64> = Vec::new();
    let mut cum: Vec<usize> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if values.last() != Some(&v) {
            values.push(v);
            cum.push(i + 1);
        } else {
            *cum.last_mut().unwrap() = i + 1;
        }
    }
    let m = values.len();
    if m < 2 {
        return Vec::new();
    }
    let mut edges = Vec::new();
    if m <= bins {
        for j in 0..m - 1 {
            edges.push(0.5 * (values[j] + values[j + 1]));
        }
        return edges;
    }
    let mut last_j = usize::MAX;
    for k in 1..bins {
        let rank = ((k * n) as f64 / bins as f64).ceil() as usize;
        let j = cum.partition_point(|&c| c < rank);
        if j >= m - 1 || j == last_j {
            continue;
        }
        edges.push(0.5 * (values[j] + values[j + 1]));
        last_j = j;
    }
    edges
}

/// Best split of a column restricted to precomputed bin edges; same gain
/// formula and tie-breaking as [`best_split`].
pub fn best_split_on_edges(
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    edges: &[f64],
    min_samples_leaf: usize,
    min_gain: f64,
) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || edges.is_empty() {
        return None;
    }
    let nb = edges.len() + 1;
    let mut bw = alloc::vec![0.0f64; nb];
    let mut bwy = alloc::vec![0.0f64; nb];
    let mut bwyy = alloc::vec![0.0f64; nb];
    let mut bcount = alloc::vec![0usize; nb];
    for i in 0..n {
        let b = edges.partition_point(|&e| e < x[i]);
        let w = weights[i];
        bw[b] += w;
        bwy[b] += w * y[i];
        bwyy[b] += w * y[i] * y[i];
        bcount[b] += 1;
    }
    let (mut tw, mut twy, mut twyy) = (Kahan::default(), Kahan::default(), Kahan::default());
    for b in 0..nb {
        tw.add(bw[b]);
        twy.add(bwy[b]);
        twyy.add(bwyy[b]);
    }
    let parent = sse(tw.sum, twy.sum, twyy.sum);

    let (mut lw, mut lwy, mut lwyy) = (Kahan::default(), Kahan::default(), Kahan::default());
    let mut n_left = 0usize;
    let mut best: Option<(f64, f64)> = None;
    for b in 0..nb - 1 {
        lw.add(bw[b]);
        lwy.add(bwy[b]);
        lwyy.add(bwyy[b]);
        n_left += bcount[b];
        if n_left < min_samples_leaf || n - n_left < min_samples_leaf || n_left == 0 || n_left == n {
            continue;
        }
        let left = sse(lw.sum, lwy.sum, lwyy.sum);
        let right = sse(tw.sum - lw.sum, twy.sum - lwy.sum, twyy.sum - lwyy.sum);
        let gain = (parent - left - right).max(0.0);
        if gain > 0.0 && gain >= min_gain && best.map_or(true, |(_, g)| gain > g) {
            best = Some((edges[b], gain));
        }
    }
    best
}

/// Convenience form of the spec'd histogram split: computes the edges from
/// the column itself, then restricts the search to them.
pub fn histogram_split(
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    bins: usize,
    min_samples_leaf: usize,
    min_gain: f64,
) -> Option<(f64, f64)> {
    let edges = bin_edges(x, bins);
    best_split_on_edges(x, y, weights, &edges, min_samples_leaf, min_gain)
}

/// Per-tree candidate edges, one vector per feature; empty in exhaustive mode.
pub(crate) struct TreeEdges(pub Vec<Vec<f64>>);

pub(crate) fn compute_tree_edges(
    frame: &FeatureFrame,
    rows: &[usize],
    config: &TreeConfig,
) -> Option<TreeEdges> {
    let SplitMode::Histogram(bins) = config.split_mode else {
        return None;
    };
    let mut per_feature = Vec::with_capacity(frame.n_cols());
    let mut scratch = Vec::with_capacity(rows.len());
    for j in 0..frame.n_cols() {
        scratch.clear();
        scratch.extend(rows.iter().map(|&i| frame.value(i, j)));
        per_feature.push(bin_edges(&scratch, bins));
    }
    Some(TreeEdges(per_feature))
}

/// Best split over a feature subset at one node, with the cross-feature
/// tie-break (smallest feature index wins on equal gain by strict
/// improvement scanning in ascending order).
pub(crate) fn choose_split(
    frame: &FeatureFrame,
    y: &[f64],
    weights: &[f64],
    rows: &[usize],
    features: &[usize],
    config: &TreeConfig,
    edges: Option<&TreeEdges>,
) -> Option<SplitCandidate> {
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    let mut ws = Vec::with_capacity(rows.len());
    ys.extend(rows.iter().map(|&i| y[i]));
    ws.extend(rows.iter().map(|&i| weights[i]));
    let mut best: Option<SplitCandidate> = None;
    for &j in features {
        xs.clear();
        xs.extend(rows.iter().map(|&i| frame.value(i, j)));
        let found = match edges {
            Some(e) => best_split_on_edges(
                &xs,
                &ys,
                &ws,
                &e.0[j],
                config.min_samples_leaf,
                config.min_gain,
            ),
            None => best_split(&xs, &ys, &ws, config.min_samples_leaf, config.min_gain),
        };
        if let Some((threshold, gain)) = found {
            if best.map_or(true, |b| gain > b.gain) {
                best = Some(SplitCandidate { feature: j, threshold, gain });
            }
        }
    }
    best
}

fn weighted_mean(y: &[f64], weights: &[f64], rows: &[usize]) -> f64 {
    let mut sw = 0.0;
    let mut swy = 0.0;
    for &i in rows {
        sw += weights[i];
        swy += weights[i] * y[i];
    }
    if sw > 0.0 {
        swy / sw
    } else {
        rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len().max(1) as f64
    }
}

fn sample_features(
    n_features: usize,
    fraction: f64,
    rng_state: &mut rand_chacha::ChaCha8Rng,
) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..n_features).collect();
    }
    let k = ((fraction * n_features as f64).ceil() as usize).clamp(1, n_features);
    let mut idx: Vec<usize> = (0..n_features).collect();
    for i in 0..k {
        let j = rng_state.random_range(i..n_features);
        idx.swap(i, j);
    }
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

struct Grower<'a> {
    frame: &'a FeatureFrame,
    y: &'a [f64],
    weights: &'a [f64],
    config: &'a TreeConfig,
    edges: Option<TreeEdges>,
    rng: rand_chacha::ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    // Pre-order DFS; RNG draws happen in node-creation order so a fit is
    // deterministic for a given seed.
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let leaf = Node::Leaf { value: weighted_mean(self.y, self.weights, &rows), count: rows.len() };
        if depth >= self.config.max_depth || rows.len() < 2 * self.config.min_samples_leaf {
            self.nodes.push(leaf);
            return self.nodes.len() - 1;
        }
        let features = sample_features(self.frame.n_cols(), self.config.feature_subsample, &mut self.rng);
        let Some(split) = choose_split(
            self.frame,
            self.y,
            self.weights,
            &rows,
            &features,
            self.config,
            self.edges.as_ref(),
        ) else {
            self.nodes.push(leaf);
            return self.nodes.len() - 1;
        };
        let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
        for &i in &rows {
            if self.frame.value(i, split.feature) <= split.threshold {
                left_rows.push(i);
            } else {
                right_rows.push(i);
            }
        }
        let at = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: usize::MAX,
            right: usize::MAX,
        });
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[at] {
            *l = left;
            *r = right;
        }
        at
    }
}

/// Fits a tree on selected rows against an arbitrary target slice; this is
/// the entry point boosting uses to fit residuals.
pub(crate) fn fit_tree_on(
    frame: &FeatureFrame,
    y: &[f64],
    weights: &[f64],
    rows: Vec<usize>,
    config: &TreeConfig,
) -> Result<Tree, CoreError> {
    config.validate()?;
    if rows.is_empty() || frame.is_empty() {
        return Err(CoreError::EmptyFrame);
    }
    let edges = compute_tree_edges(frame, &rows, config);
    let mut grower = Grower {
        frame,
        y,
        weights,
        config,
        edges,
        rng: rng::seed_rng(config.seed),
        nodes: Vec::new(),
    };
    grower.grow(rows, 0);
    Ok(Tree { nodes: grower.nodes, n_features: frame.n_cols() })
}

/// Greedy depth-wise CART fit of the whole frame with unit weights.
pub fn fit_tree(frame: &FeatureFrame, config: &TreeConfig) -> Result<Tree, CoreError> {
    let w = alloc::vec![1.0; frame.n_rows()];
    fit_tree_on(frame, &frame.targets, &w, (0..frame.n_rows()).collect(), config)
}

/// Same as [`fit_tree`] with per-row sample weights (AdaBoost.R2 uses this).
pub fn fit_tree_weighted(
    frame: &FeatureFrame,
    weights: &[f64],
    config: &TreeConfig,
) -> Result<Tree, CoreError> {
    if weights.len() != frame.n_rows() {
        return Err(CoreError::LengthMismatch { left: weights.len(), right: frame.n_rows() });
    }
    fit_tree_on(frame, &frame.targets, weights, (0..frame.n_rows()).collect(), config)
}
