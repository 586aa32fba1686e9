//! Random forest: bagged CART trees with per-node feature subsampling and
//! majority voting.
//!
//! Trees are grown greedily on a bootstrap resample. Each tree keeps, per
//! feature, its sample ids in sorted order and stably partitions those lists at
//! every split, so a node scan is linear in the node size.

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datakit::{Dataset, Scaler};
use crate::error::Result;
use crate::seed;
use crate::simkit::{Sample, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub split_criterion: SplitCriterion,
    pub features_per_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            split_criterion: SplitCriterion::Gini,
            features_per_split: 2,
        }
    }
}

impl TreeParams {
    fn features_per_split(&self) -> usize {
        self.features_per_split.clamp(1, FEATURE_COUNT)
    }
}

/// Impurity of a node holding `positives` class-1 samples out of `total`.
pub fn impurity(criterion: SplitCriterion, positives: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = positives as f64 / total as f64;
    let q = 1.0 - p;
    match criterion {
        SplitCriterion::Gini => 1.0 - p * p - q * q,
        SplitCriterion::Entropy => {
            let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
            h(p) + h(q)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        impurity: f64,
        samples: usize,
    },
    Leaf {
        class: u8,
        /// Fraction of class-1 training samples that reached this leaf.
        positive_fraction: f64,
        impurity: f64,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(&self, x: &[f64; FEATURE_COUNT]) -> &Node {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    pub fn predict(&self, x: &[f64; FEATURE_COUNT]) -> u8 {
        match self.leaf(x) {
            Node::Leaf { class, .. } => *class,
            Node::Split { .. } => unreachable!("traversal ends at a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Candidate {
    impurity: f64,
    feature: usize,
    threshold: f64,
    n_left: usize,
}

struct TreeBuilder<'a> {
    rows: &'a [[f64; FEATURE_COUNT]],
    labels: &'a [u8],
    params: &'a TreeParams,
    order: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    nodes: Vec<Node>,
    rng: seed::Rng,
}

impl<'a> TreeBuilder<'a> {
    fn new(rows: &'a [[f64; FEATURE_COUNT]], labels: &'a [u8], params: &'a TreeParams, seed: u64) -> Self {
        let n = rows.len();
        let order = (0..FEATURE_COUNT)
            .map(|f| {
                let mut ids: Vec<u32> = (0..n as u32).collect();
                ids.sort_by(|&a, &b| rows[a as usize][f].total_cmp(&rows[b as usize][f]));
                ids
            })
            .collect();
        TreeBuilder {
            rows,
            labels,
            params,
            order,
            goes_left: vec![false; n],
            scratch: Vec::with_capacity(n),
            nodes: Vec::new(),
            rng: seed::rng(seed),
        }
    }

    fn best_split_on(&self, feature: usize, start: usize, end: usize, positives: usize) -> Option<Candidate> {
        let ids = &self.order[feature][start..end];
        let total = ids.len();
        let criterion = self.params.split_criterion;
        let mut best: Option<Candidate> = None;
        let (mut left_n, mut left_pos) = (0usize, 0usize);
        for w in ids.windows(2) {
            let (a, b) = (w[0] as usize, w[1] as usize);
            left_n += 1;
            left_pos += self.labels[a] as usize;
            let (va, vb) = (self.rows[a][feature], self.rows[b][feature]);
            if va >= vb {
                continue;
            }
            let right_n = total - left_n;
            let weighted = (left_n as f64 * impurity(criterion, left_pos, left_n)
                + right_n as f64 * impurity(criterion, positives - left_pos, right_n))
                / total as f64;
            if best.as_ref().is_none_or(|c| weighted < c.impurity) {
                let mut threshold = 0.5 * (va + vb);
                if threshold >= vb {
                    threshold = va;
                }
                best = Some(Candidate {
                    impurity: weighted,
                    feature,
                    threshold,
                    n_left: left_n,
                });
            }
        }
        best
    }

    fn make_leaf(&mut self, node: usize, positives: usize, total: usize, node_impurity: f64) {
        let positive_fraction = positives as f64 / total as f64;
        self.nodes[node] = Node::Leaf {
            class: u8::from(positive_fraction > 0.5),
            positive_fraction,
            impurity: node_impurity,
            samples: total,
        };
    }

    fn build(mut self) -> DecisionTree {
        let n = self.rows.len();
        self.nodes.push(Node::Leaf {
            class: 0,
            positive_fraction: 0.0,
            impurity: 0.0,
            samples: 0,
        });
        let mut stack = vec![(0usize, 0usize, n, 0usize)];
        let k = self.params.features_per_split();

        while let Some((node, start, end, depth)) = stack.pop() {
            let total = end - start;
            let positives = self.order[0][start..end]
                .iter()
                .map(|&i| self.labels[i as usize] as usize)
                .sum::<usize>();
            let node_impurity = impurity(self.params.split_criterion, positives, total);
            let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
            if positives == 0 || positives == total || depth_capped || total < self.params.min_samples_split {
                self.make_leaf(node, positives, total, node_impurity);
                continue;
            }

            let mut drawn = index::sample(&mut self.rng, FEATURE_COUNT, k).into_vec();
            drawn.sort_unstable();
            let mut best: Option<Candidate> = None;
            for &f in &drawn {
                if let Some(c) = self.best_split_on(f, start, end, positives) {
                    if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                        best = Some(c);
                    }
                }
            }
            if best.is_none() {
                // every drawn feature is constant in this node; fall back to the others
                for f in (0..FEATURE_COUNT).filter(|f| !drawn.contains(f)) {
                    if let Some(c) = self.best_split_on(f, start, end, positives) {
                        if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                            best = Some(c);
                        }
                    }
                }
            }
            let best = match best {
                Some(c) if c.impurity <= node_impurity => c,
                _ => {
                    self.make_leaf(node, positives, total, node_impurity);
                    continue;
                }
            };

            for &id in &self.order[best.feature][start..start + best.n_left] {
                self.goes_left[id as usize] = true;
            }
            for f in 0..FEATURE_COUNT {
                self.scratch.clear();
                let seg = &self.order[f][start..end];
                self.scratch.extend(seg.iter().filter(|&&i| self.goes_left[i as usize]));
                self.scratch.extend(seg.iter().filter(|&&i| !self.goes_left[i as usize]));
                self.order[f][start..end].copy_from_slice(&self.scratch);
            }
            for &id in &self.order[0][start..start + best.n_left] {
                self.goes_left[id as usize] = false;
            }

            let left = self.nodes.len();
            let right = left + 1;
            for _ in 0..2 {
                self.nodes.push(Node::Leaf {
                    class: 0,
                    positive_fraction: 0.0,
                    impurity: 0.0,
                    samples: 0,
                });
            }
            self.nodes[node] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right,
                impurity: node_impurity,
                samples: total,
            };
            let mid = start + best.n_left;
            stack.push((right, mid, end, depth + 1));
            stack.push((left, start, mid, depth + 1));
        }
        DecisionTree { nodes: self.nodes }
    }
}

/// Grow one tree on already-scaled rows.
pub fn grow_tree(rows: &[[f64; FEATURE_COUNT]], labels: &[u8], params: &TreeParams, seed: u64) -> DecisionTree {
    assert!(!rows.is_empty(), "cannot grow a tree on an empty set");
    assert_eq!(rows.len(), labels.len());
    TreeBuilder::new(rows, labels, params, seed).build()
}

/// Grow one tree on the raw features of `train`.
pub fn build_tree(train: &Dataset, params: &TreeParams, seed: u64) -> Result<DecisionTree> {
    train.ensure_non_empty()?;
    let rows: Vec<_> = train.samples.iter().map(Sample::features).collect();
    Ok(grow_tree(&rows, &train.labels(), params, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    pub params: TreeParams,
    pub scaler: Scaler,
}

/// Bootstrap indices for tree `tree` of a forest seeded with `seed`.
fn bootstrap(n: usize, rng: &mut seed::Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Fit `m` trees, tree `j` on a bootstrap drawn from `derive(seed, j)`.
///
/// Because tree seeds depend only on the tree index, the first `m'` trees of a
/// forest of size `m` are exactly the forest of size `m'`.
pub fn fit_forest(train: &Dataset, m: usize, params: &TreeParams, seed: u64) -> Result<Forest> {
    train.ensure_non_empty()?;
    let m = m.max(1);
    let scaler = Scaler::fit(train)?;
    let rows = scaler.rows(train);
    let labels = train.labels();
    let trees = (0..m)
        .into_par_iter()
        .map(|j| {
            let tree_seed = seed::derive(seed, j as u64);
            let mut rng = seed::rng(tree_seed);
            let picks = bootstrap(rows.len(), &mut rng);
            let r: Vec<_> = picks.iter().map(|&i| rows[i]).collect();
            let l: Vec<_> = picks.iter().map(|&i| labels[i]).collect();
            grow_tree(&r, &l, params, seed::derive(tree_seed, 1))
        })
        .collect();
    Ok(Forest {
        trees,
        params: params.clone(),
        scaler,
    })
}

impl Forest {
    /// The forest made of the first `m` trees.
    pub fn truncated(&self, m: usize) -> Forest {
        Forest {
            trees: self.trees[..m.clamp(1, self.trees.len())].to_vec(),
            params: self.params.clone(),
            scaler: self.scaler.clone(),
        }
    }

    pub fn votes(&self, x: &Sample) -> Vec<u8> {
        let z = self.scaler.transform(&x.features());
        self.trees.iter().map(|t| t.predict(&z)).collect()
    }

    /// Fraction of trees voting for class 1.
    pub fn vote_fraction(&self, x: &Sample) -> f64 {
        let z = self.scaler.transform(&x.features());
        let ones: usize = self.trees.iter().map(|t| t.predict(&z) as usize).sum();
        ones as f64 / self.trees.len() as f64
    }

    /// Majority vote; an exact tie goes to class 0.
    pub fn predict(&self, x: &Sample) -> u8 {
        u8::from(self.vote_fraction(x) > 0.5)
    }
}

pub fn vote_fraction(f: &Forest, x: &Sample) -> f64 {
    f.vote_fraction(x)
}

pub fn forest_predict(f: &Forest, x: &Sample) -> u8 {
    f.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(class: u8) -> DecisionTree {
        DecisionTree {
            nodes: vec![Node::Leaf {
                class,
                positive_fraction: class as f64,
                impurity: 0.0,
                samples: 1,
            }],
        }
    }

    fn forest_of(classes: &[u8]) -> Forest {
        Forest {
            trees: classes.iter().map(|&c| stump(c)).collect(),
            params: TreeParams::default(),
            scaler: Scaler {
                means: vec![0.0; 4],
                stddevs: vec![1.0; 4],
            },
        }
    }

    fn x0() -> Sample {
        Sample::new([0.5, 0.1, -40.0, 0.2], 0)
    }

    #[test]
    fn gini_values() {
        assert_eq!(impurity(SplitCriterion::Gini, 4, 4), 0.0);
        assert_eq!(impurity(SplitCriterion::Gini, 0, 7), 0.0);
        assert_eq!(impurity(SplitCriterion::Gini, 2, 4), 0.5);
        assert_eq!(impurity(SplitCriterion::Entropy, 2, 4), 1.0);
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let rows = vec![[1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 0.0, 4.0]];
        let t = grow_tree(&rows, &[1, 1], &TreeParams::default(), 0);
        assert_eq!(t.nodes.len(), 1);
        assert!(matches!(t.nodes[0], Node::Leaf { class: 1, impurity, .. } if impurity == 0.0));
    }

    #[test]
    fn separable_line_with_one_split() {
        let rows: Vec<[f64; 4]> = (-10..10).map(|i| [i as f64 + 0.5, 0.0, 0.0, 0.0]).collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] >= 0.0)).collect();
        let params = TreeParams {
            max_depth: Some(1),
            features_per_split: 4,
            ..TreeParams::default()
        };
        let t = grow_tree(&rows, &labels, &params, 3);
        assert_eq!(t.depth(), 1);
        for (r, &l) in rows.iter().zip(&labels) {
            assert_eq!(t.predict(r), l);
        }
        match t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 0.0);
            }
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn ties_break_to_lowest_feature() {
        // features 0 and 2 both separate perfectly
        let rows = vec![[0.0, 5.0, 0.0, 1.0], [1.0, 5.0, 1.0, 1.0]];
        let params = TreeParams {
            features_per_split: 4,
            ..TreeParams::default()
        };
        let t = grow_tree(&rows, &[0, 1], &params, 0);
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn vote_arithmetic() {
        assert!((forest_of(&[1, 1, 0]).vote_fraction(&x0()) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(forest_of(&[1, 1, 1]).vote_fraction(&x0()), 1.0);
        assert_eq!(forest_of(&[1, 1, 0, 0]).vote_fraction(&x0()), 0.5);
    }

    #[test]
    fn majority_rule_is_strict() {
        assert_eq!(forest_of(&[1, 1, 0]).predict(&x0()), 1);
        assert_eq!(forest_of(&[1, 0]).predict(&x0()), 0);
        assert_eq!(forest_of(&[0, 0, 0]).predict(&x0()), 0);
    }

    #[test]
    fn truncation_matches_smaller_fit() {
        let d = Dataset::new(
            (0..60)
                .map(|i| {
                    let v = i as f64 / 60.0;
                    Sample::new([v, 1.0 - v, -40.0 - v, (i % 7) as f64], u8::from(i % 3 == 0))
                })
                .collect(),
        );
        let big = fit_forest(&d, 9, &TreeParams::default(), 5).unwrap();
        let small = fit_forest(&d, 4, &TreeParams::default(), 5).unwrap();
        assert_eq!(big.truncated(4), small);
    }
}
