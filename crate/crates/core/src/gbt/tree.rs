use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefaultDirection {
    Left,
    Right,
}

/// Arena node. Rows with `x[feature] < threshold` go left; NaN follows
/// `default`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        default: DefaultDirection,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

/// Regression tree stored as a flat arena with the root at index 0.
/// Serialized as nested `{feature, threshold, default, left, right}` /
/// `{weight}` objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(weight: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { weight }],
        }
    }

    #[inline]
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { weight } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    default,
                    left,
                    right,
                } => {
                    let v = row[*feature];
                    // non-short-circuit so this compiles to a select
                    let go_left = (v < *threshold) | (v.is_nan() & (*default == DefaultDirection::Left));
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Same tree with nodes renumbered in preorder, the layout produced by
    /// deserialization.
    pub fn preorder(&self) -> Tree {
        Tree::from_nested(self.to_nested(0))
    }

    fn to_nested(&self, i: usize) -> Nested {
        match &self.nodes[i] {
            Node::Leaf { weight } => Nested::Leaf { weight: *weight },
            Node::Split {
                feature,
                threshold,
                default,
                left,
                right,
            } => Nested::Split {
                feature: *feature,
                threshold: *threshold,
                default: *default,
                left: Box::new(self.to_nested(*left)),
                right: Box::new(self.to_nested(*right)),
            },
        }
    }

    fn from_nested(n: Nested) -> Tree {
        fn push(n: Nested, nodes: &mut Vec<Node>) -> usize {
            let at = nodes.len();
            match n {
                Nested::Leaf { weight } => nodes.push(Node::Leaf { weight }),
                Nested::Split {
                    feature,
                    threshold,
                    default,
                    left,
                    right,
                } => {
                    nodes.push(Node::Leaf { weight: 0.0 });
                    let l = push(*left, nodes);
                    let r = push(*right, nodes);
                    nodes[at] = Node::Split {
                        feature,
                        threshold,
                        default,
                        left: l,
                        right: r,
                    };
                }
            }
            at
        }
        let mut nodes = Vec::new();
        push(n, &mut nodes);
        Tree { nodes }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum Nested {
    Split {
        feature: usize,
        threshold: f64,
        default: DefaultDirection,
        left: Box<Nested>,
        right: Box<Nested>,
    },
    Leaf {
        weight: f64,
    },
}

impl Serialize for Tree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_nested(0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Tree::from_nested(Nested::deserialize(d)?))
    }
}

pub(crate) const LANES: usize = 8;
const DEFAULT_LEFT: u32 = 1 << 31;

/// 16-byte node for batch inference. Nodes are in preorder, so a split's
/// left child is the next node. A leaf points right at itself behind a
/// threshold no value passes, so walks can run a fixed number of steps
/// without checking for leaves.
#[derive(Debug, Clone, Copy)]
struct FlatNode {
    threshold: f64,
    /// Feature index with `DEFAULT_LEFT` or'd in.
    feature: u32,
    right: u32,
}

/// A forest packed into one contiguous array.
#[derive(Debug, Clone)]
pub(crate) struct FlatForest {
    nodes: Vec<FlatNode>,
    /// Leaf weights by node; 0 for splits.
    weights: Vec<f64>,
    roots: Vec<usize>,
    depths: Vec<usize>,
}

impl FlatForest {
    pub(crate) fn new(trees: &[Tree]) -> Self {
        let total = trees.iter().map(|t| t.nodes.len()).sum();
        let mut nodes: Vec<FlatNode> = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut roots = Vec::with_capacity(trees.len());
        for tree in trees {
            roots.push(nodes.len());
            let mut stack = vec![(0usize, None::<usize>)];
            while let Some((i, parent)) = stack.pop() {
                let at = nodes.len();
                if let Some(p) = parent {
                    nodes[p].right = at as u32;
                }
                match &tree.nodes[i] {
                    Node::Leaf { weight } => {
                        nodes.push(FlatNode {
                            threshold: f64::NEG_INFINITY,
                            feature: 0,
                            right: at as u32,
                        });
                        weights.push(*weight);
                    }
                    Node::Split {
                        feature,
                        threshold,
                        default,
                        left,
                        right,
                    } => {
                        let mut f = *feature as u32;
                        if *default == DefaultDirection::Left {
                            f |= DEFAULT_LEFT;
                        }
                        nodes.push(FlatNode {
                            threshold: *threshold,
                            feature: f,
                            right: 0,
                        });
                        weights.push(0.0);
                        // right is visited after the whole left subtree
                        stack.push((*right, Some(at)));
                        stack.push((*left, None));
                    }
                }
            }
        }
        FlatForest {
            nodes,
            weights,
            roots,
            depths: trees.iter().map(Tree::depth).collect(),
        }
    }

    #[inline(always)]
    fn step(&self, i: usize, row: &[f64]) -> usize {
        let n = self.nodes[i];
        let v = row[(n.feature & !DEFAULT_LEFT) as usize];
        let go_left = (v < n.threshold) | (v.is_nan() & (n.feature & DEFAULT_LEFT != 0));
        if go_left {
            i + 1
        } else {
            n.right as usize
        }
    }

    /// Adds tree `tree`'s output for each of `LANES` rows (row-major, `f`
    /// columns) to `acc`. The rows are walked in lockstep so their
    /// independent node loads overlap.
    #[inline]
    pub(crate) fn accumulate_lanes(&self, tree: usize, rows: &[f64], f: usize, acc: &mut [f64; LANES]) {
        let mut at = [self.roots[tree]; LANES];
        for _ in 0..self.depths[tree] {
            for (lane, i) in at.iter_mut().enumerate() {
                *i = self.step(*i, &rows[lane * f..(lane + 1) * f]);
            }
        }
        for (a, i) in acc.iter_mut().zip(at) {
            *a += self.weights[i];
        }
    }

    /// Sum of every tree's output for one row, added in tree order. Groups of
    /// `LANES` trees are walked in lockstep.
    pub(crate) fn sum_row(&self, row: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut roots = self.roots.chunks_exact(LANES);
        let mut t = 0;
        for group in &mut roots {
            let mut at: [usize; LANES] = group.try_into().unwrap();
            let steps = self.depths[t..t + LANES].iter().max().copied().unwrap_or(0);
            for _ in 0..steps {
                for i in &mut at {
                    *i = self.step(*i, row);
                }
            }
            for i in at {
                sum += self.weights[i];
            }
            t += LANES;
        }
        for tree in t..self.roots.len() {
            sum += self.predict_tree(tree, row);
        }
        sum
    }

    #[inline]
    pub(crate) fn predict_tree(&self, tree: usize, row: &[f64]) -> f64 {
        let mut i = self.roots[tree];
        for _ in 0..self.depths[tree] {
            i = self.step(i, row);
        }
        self.weights[i]
    }
}
