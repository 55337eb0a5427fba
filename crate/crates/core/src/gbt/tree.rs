//! A single regression tree: exact greedy, level-wise growth over presorted
//! feature columns.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tree node. Rows with `x[feature] < threshold` go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] < *threshold { left } else { right },
            }
        }
    }

    /// Like [`TreeNode::predict`], reading feature `f` through `x(f)`.
    pub fn predict_with(&self, x: impl Fn(usize) -> f64) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x(*feature) < *threshold { left } else { right },
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    /// Depth in edges; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

const LEAF: u32 = u32::MAX;

/// Flat node: a leaf when `feature == LEAF` (value in `value`), otherwise a
/// split at `value` with children at `left` and `left + 1`.
#[derive(Clone, Copy, Debug)]
struct FlatNode {
    feature: u32,
    left: u32,
    value: f64,
}

/// Contiguous copy of a tree sequence for fast single-row prediction.
#[derive(Clone, Debug, Default)]
pub struct FlatTrees {
    nodes: Vec<FlatNode>,
    roots: Vec<u32>,
}

impl FlatTrees {
    pub fn new(trees: &[TreeNode]) -> Self {
        let mut flat = FlatTrees::default();
        for t in trees {
            let root = flat.nodes.len();
            flat.nodes.push(FlatNode {
                feature: LEAF,
                left: 0,
                value: 0.0,
            });
            flat.roots.push(root as u32);
            flat.fill(t, root);
        }
        flat
    }

    fn fill(&mut self, node: &TreeNode, at: usize) {
        match node {
            TreeNode::Leaf { value } => self.nodes[at].value = *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let l = self.nodes.len();
                let blank = FlatNode {
                    feature: LEAF,
                    left: 0,
                    value: 0.0,
                };
                self.nodes.extend([blank, blank]);
                self.nodes[at] = FlatNode {
                    feature: *feature as u32,
                    left: l as u32,
                    value: *threshold,
                };
                self.fill(left, l);
                self.fill(right, l + 1);
            }
        }
    }

    /// Sum of every tree's output, in tree order.
    pub fn sum(&self, x: &[f64]) -> f64 {
        self.roots
            .iter()
            .map(|&r| {
                let mut n = self.nodes[r as usize];
                while n.feature != LEAF {
                    let go_right = x[n.feature as usize] >= n.value;
                    n = self.nodes[n.left as usize + go_right as usize];
                }
                n.value
            })
            .sum()
    }
}

/// Feature columns with row indices presorted by value, shared by every tree
/// (and every channel) fitted on the same matrix.
pub struct Presorted {
    pub columns: Vec<Vec<f64>>,
    pub order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(columns: Vec<Vec<f64>>) -> Self {
        let order = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                idx
            })
            .collect();
        Presorted { columns, order }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }
}

pub struct GrowParams {
    pub max_depth: usize,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub reg_lambda: f64,
    pub colsample_bylevel: f64,
    pub colsample_bynode: f64,
}

/// Keep `max(1, ⌊ratio·n⌋)` of `from`, ascending.
pub fn subsample_features<R: Rng + ?Sized>(rng: &mut R, from: &[usize], ratio: f64) -> Vec<usize> {
    if ratio >= 1.0 {
        return from.to_vec();
    }
    let k = ((ratio * from.len() as f64).floor() as usize).clamp(1, from.len());
    let mut picked: Vec<usize> = sample(rng, from.len(), k).into_iter().map(|i| from[i]).collect();
    picked.sort_unstable();
    picked
}

const NO_NODE: u32 = u32::MAX;

struct Building {
    depth: usize,
    g: f64,
    h: f64,
    split: Option<(usize, f64, usize, usize)>,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    g_left: f64,
    h_left: f64,
}

/// Per-node scan state while sweeping one feature.
#[derive(Clone, Copy)]
struct Scan {
    g: f64,
    h: f64,
    last: f64,
    seen: bool,
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Grow one tree on the rows listed in `rows` (each with gradient `grad` and
/// hessian `hess`, indexed by row). Returns the tree with placeholder leaf
/// values and, for each leaf in creation order, the rows that reached it.
pub fn grow<R: Rng + ?Sized>(
    data: &Presorted,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    tree_features: &[usize],
    params: &GrowParams,
    rng: &mut R,
) -> (Vec<BuiltNode>, Vec<u32>) {
    let n = data.n_rows();
    let mut pos = vec![NO_NODE; n];
    let (mut g0, mut h0) = (0.0, 0.0);
    for &i in rows {
        pos[i] = 0;
        g0 += grad[i];
        h0 += hess[i];
    }
    let mut nodes = vec![Building {
        depth: 0,
        g: g0,
        h: h0,
        split: None,
    }];
    let mut active: Vec<usize> = vec![0];
    let mut slot_of: Vec<usize> = Vec::new();

    // For each tree feature, the in-sample rows grouped by active node
    // (slot order) and sorted by value within each group. Rows of nodes that
    // stop splitting drop out, so deep levels only touch the rows left.
    let mut list_of = vec![usize::MAX; data.n_features()];
    let mut lists: Vec<(Vec<u32>, Vec<f64>)> = Vec::with_capacity(tree_features.len());
    for (k, &f) in tree_features.iter().enumerate() {
        list_of[f] = k;
        let col = &data.columns[f];
        let (r, v): (Vec<u32>, Vec<f64>) = data.order[f]
            .iter()
            .filter(|&&r| pos[r as usize] != NO_NODE)
            .map(|&r| (r, col[r as usize]))
            .unzip();
        lists.push((r, v));
    }
    let mut segments = vec![(0, rows.len())];

    while !active.is_empty() {
        let depth = nodes[active[0]].depth;
        if depth >= params.max_depth {
            break;
        }
        let level_features = subsample_features(rng, tree_features, params.colsample_bylevel);
        let mut node_allows = vec![vec![false; data.n_features()]; active.len()];
        for allows in node_allows.iter_mut() {
            for f in subsample_features(rng, &level_features, params.colsample_bynode) {
                allows[f] = true;
            }
        }

        let mut best: Vec<Option<Candidate>> = vec![None; active.len()];
        for &f in &level_features {
            let (list_rows, list_vals) = &lists[list_of[f]];
            for (slot, &(lo, hi)) in segments.iter().enumerate() {
                if !node_allows[slot][f] {
                    continue;
                }
                let node = &nodes[active[slot]];
                let parent = score(node.g, node.h, params.reg_lambda);
                let mut s = Scan {
                    g: 0.0,
                    h: 0.0,
                    last: 0.0,
                    seen: false,
                };
                for (&r, &v) in list_rows[lo..hi].iter().zip(&list_vals[lo..hi]) {
                    let r = r as usize;
                    if s.seen && v > s.last {
                        // Candidate boundary between s.last and v.
                        let (gl, hl) = (s.g, s.h);
                        let (gr, hr) = (node.g - gl, node.h - hl);
                        if hl >= params.min_child_weight && hr >= params.min_child_weight {
                            let gain = score(gl, hl, params.reg_lambda) + score(gr, hr, params.reg_lambda) - parent;
                            if best[slot].is_none_or(|b| gain > b.gain) {
                                best[slot] = Some(Candidate {
                                    gain,
                                    feature: f,
                                    threshold: s.last + (v - s.last) / 2.0,
                                    g_left: gl,
                                    h_left: hl,
                                });
                            }
                        }
                    }
                    s.g += grad[r];
                    s.h += hess[r];
                    s.last = v;
                    s.seen = true;
                }
            }
        }

        let mut next = Vec::new();
        for (slot, &id) in active.iter().enumerate() {
            let Some(c) = best[slot] else { continue };
            if !(c.gain > params.gamma.max(0.0)) {
                continue;
            }
            let (g, h) = (nodes[id].g, nodes[id].h);
            let left = nodes.len();
            nodes.push(Building {
                depth: depth + 1,
                g: c.g_left,
                h: c.h_left,
                split: None,
            });
            nodes.push(Building {
                depth: depth + 1,
                g: g - c.g_left,
                h: h - c.h_left,
                split: None,
            });
            nodes[id].split = Some((c.feature, c.threshold, left, left + 1));
            next.push(left);
            next.push(left + 1);
        }
        slot_of.resize(nodes.len(), usize::MAX);
        for (slot, &id) in next.iter().enumerate() {
            slot_of[id] = slot;
        }
        let mut counts = vec![0usize; next.len()];
        for &i in rows {
            let p = pos[i] as usize;
            if let Some((f, thr, l, r)) = nodes[p].split {
                let child = if data.columns[f][i] < thr { l } else { r };
                pos[i] = child as u32;
                if slot_of[child] != usize::MAX {
                    counts[slot_of[child]] += 1;
                }
            }
        }
        if !next.is_empty() && depth + 1 < params.max_depth {
            segments.clear();
            let mut start = 0;
            for &c in &counts {
                segments.push((start, start + c));
                start += c;
            }
            for (list_rows, list_vals) in lists.iter_mut() {
                let mut cursor: Vec<usize> = segments.iter().map(|s| s.0).collect();
                let mut new_rows = vec![0u32; start];
                let mut new_vals = vec![0.0; start];
                for (&r, &v) in list_rows.iter().zip(list_vals.iter()) {
                    let slot = slot_of[pos[r as usize] as usize];
                    if slot != usize::MAX {
                        new_rows[cursor[slot]] = r;
                        new_vals[cursor[slot]] = v;
                        cursor[slot] += 1;
                    }
                }
                *list_rows = new_rows;
                *list_vals = new_vals;
            }
        }
        for &id in &next {
            slot_of[id] = usize::MAX;
        }
        active = next;
    }

    let built = nodes
        .iter()
        .map(|b| BuiltNode {
            g: b.g,
            h: b.h,
            split: b.split,
        })
        .collect();
    (built, pos)
}

/// Arena node returned by [`grow`]; `pos[i]` in the second return value is
/// the arena index of the leaf row `i` ended in.
pub struct BuiltNode {
    pub g: f64,
    pub h: f64,
    pub split: Option<(usize, f64, usize, usize)>,
}

/// Convert the arena into a nested tree, taking leaf values from `leaf_value`.
pub fn nest(nodes: &[BuiltNode], id: usize, leaf_value: &dyn Fn(usize) -> f64) -> TreeNode {
    match nodes[id].split {
        None => TreeNode::Leaf { value: leaf_value(id) },
        Some((feature, threshold, l, r)) => TreeNode::Split {
            feature,
            threshold,
            left: Box::new(nest(nodes, l, leaf_value)),
            right: Box::new(nest(nodes, r, leaf_value)),
        },
    }
}
