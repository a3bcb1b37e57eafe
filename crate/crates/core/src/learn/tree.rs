use std::fmt::Write as _;

use super::{check_dataset, check_row, parse_floats, LearnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_leaf: 5,
        }
    }
}

/// Internal nodes send `x[feature] < threshold` left and everything else
/// right. Leaves hold the training class counts that reached them.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    num_features: usize,
    num_classes: usize,
    params: TreeParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreePrediction {
    pub class: usize,
    /// Fraction of the leaf's training rows in `class`.
    pub score: f64,
    pub probabilities: Vec<f64>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

/// Lowest class index among the most frequent.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    classes: usize,
    params: TreeParams,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.classes];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn find_split(&self, idx: &[usize], parent: &[usize]) -> Option<BestSplit> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let parent_impurity = gini(parent, n);
        let mut best: Option<BestSplit> = None;
        let mut order = idx.to_vec();
        for f in 0..self.rows[0].len() {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.classes];
            let mut right = parent.to_vec();
            for pos in 0..n - 1 {
                let lab = self.labels[order[pos]];
                left[lab] += 1;
                right[lab] -= 1;
                let (lo, hi) = (self.rows[order[pos]][f], self.rows[order[pos + 1]][f]);
                let n_left = pos + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let impurity =
                    (n_left as f64 * gini(&left, n_left) + (n - n_left) as f64 * gini(&right, n - n_left)) / n as f64;
                if impurity >= parent_impurity {
                    continue;
                }
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold <= lo {
                        threshold = hi;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let slot = self.nodes.len();
        let split = if depth < self.params.max_depth {
            self.find_split(&idx, &counts)
        } else {
            None
        };
        let Some(split) = split else {
            self.nodes.push(Node::Leaf { counts });
            return slot;
        };
        self.nodes.push(Node::Leaf { counts: Vec::new() });
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.rows[i][split.feature] < split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        slot
    }
}

/// Greedy CART with Gini impurity. Only splits that strictly lower the
/// impurity are taken; ties go to the lowest feature, then the smallest
/// threshold. The number of classes is `max(labels) + 1`.
pub fn train_decision_tree(
    rows: &[Vec<f64>],
    labels: &[usize],
    params: TreeParams,
) -> Result<DecisionTree, LearnError> {
    let classes = labels.iter().max().map_or(1, |m| m + 1);
    let num_features = check_dataset(rows, labels, classes)?;
    let mut b = Builder {
        rows,
        labels,
        classes,
        params,
        nodes: Vec::new(),
    };
    b.grow((0..rows.len()).collect(), 0);
    Ok(DecisionTree {
        nodes: b.nodes,
        num_features,
        num_classes: classes,
        params,
    })
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    /// Longest root-to-leaf path, counted in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[usize]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts } => Some(counts.as_slice()),
            Node::Split { .. } => None,
        })
    }

    pub fn predict(&self, row: &[f64]) -> Result<TreePrediction, LearnError> {
        check_row(row, self.num_features)?;
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] < *threshold { *left } else { *right },
                Node::Leaf { counts } => {
                    let total: usize = counts.iter().sum();
                    let probabilities: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
                    let class = majority(counts);
                    return Ok(TreePrediction {
                        class,
                        score: probabilities[class],
                        probabilities,
                    });
                }
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "TREE v1 features {} classes {} max_depth {} min_leaf {} nodes {}\n",
            self.num_features,
            self.num_classes,
            self.params.max_depth,
            self.params.min_leaf,
            self.nodes.len()
        );
        for node in &self.nodes {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(out, "split {feature} {threshold} {left} {right}");
                }
                Node::Leaf { counts } => {
                    out.push_str("leaf");
                    for c in counts {
                        let _ = write!(out, " {c}");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
        let (_, header) = lines.next().ok_or_else(|| LearnError::format(1, "empty model file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let keys = ["features", "classes", "max_depth", "min_leaf", "nodes"];
        if h.len() != 12 || h[0] != "TREE" || h[1] != "v1" || (0..5).any(|n| h[2 + 2 * n] != keys[n]) {
            return Err(LearnError::format(
                1,
                "expected `TREE v1 features F classes C max_depth D min_leaf L nodes M`",
            ));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| LearnError::format(1, format!("`{s}`: {e}")))
        };
        let (num_features, num_classes) = (num(h[3])?, num(h[5])?);
        let params = TreeParams {
            max_depth: num(h[7])?,
            min_leaf: num(h[9])?,
        };
        let count = num(h[11])?;
        let mut nodes = Vec::with_capacity(count);
        for (line, text) in lines.by_ref().take(count) {
            let mut parts = text.split_whitespace();
            let int = |s: Option<&str>| -> Result<usize, LearnError> {
                s.ok_or_else(|| LearnError::format(line, "truncated node"))?
                    .parse::<usize>()
                    .map_err(|e| LearnError::format(line, e.to_string()))
            };
            let node = match parts.next() {
                Some("split") => {
                    let feature = int(parts.next())?;
                    let threshold = parse_floats(parts.next().unwrap_or(""), line)?;
                    let (left, right) = (int(parts.next())?, int(parts.next())?);
                    if feature >= num_features || threshold.len() != 1 || left >= count || right >= count {
                        return Err(LearnError::format(line, "malformed split"));
                    }
                    Node::Split {
                        feature,
                        threshold: threshold[0],
                        left,
                        right,
                    }
                }
                Some("leaf") => {
                    let counts = parts.map(|s| int(Some(s))).collect::<Result<Vec<_>, _>>()?;
                    if counts.len() != num_classes || counts.iter().sum::<usize>() == 0 {
                        return Err(LearnError::format(line, "malformed leaf"));
                    }
                    Node::Leaf { counts }
                }
                _ => return Err(LearnError::format(line, "expected `split` or `leaf`")),
            };
            nodes.push(node);
        }
        if nodes.len() != count {
            return Err(LearnError::format(nodes.len() + 2, format!("expected {count} nodes")));
        }
        if let Some((line, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(LearnError::format(line, format!("trailing content `{extra}`")));
        }
        Ok(Self {
            nodes,
            num_features,
            num_classes,
            params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn pure_labels_make_one_leaf() {
        let t = train_decision_tree(&one_d(&[0.1, 0.5, 0.9]), &[1, 1, 1], TreeParams::default()).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&[100.0]).unwrap().class, 1);
    }

    #[test]
    fn separable_at_half() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 20.0 + 0.025).collect();
        let labels: Vec<usize> = xs.iter().map(|&x| (x >= 0.5) as usize).collect();
        let t = train_decision_tree(&one_d(&xs), &labels, TreeParams::default()).unwrap();
        assert_eq!(t.depth(), 1);
        match &t.nodes()[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        for (x, &y) in xs.iter().zip(&labels) {
            assert_eq!(t.predict(&[*x]).unwrap().class, y);
        }
        assert_eq!(t.predict(&[0.9]).unwrap().class, 1);
        // the boundary goes right
        assert_eq!(t.predict(&[0.5]).unwrap().class, 1);
        assert_eq!(t.predict(&[0.4999]).unwrap().class, 0);
    }

    #[test]
    fn min_leaf_forces_majority_leaf() {
        let params = TreeParams {
            max_depth: 8,
            min_leaf: 10,
        };
        let t = train_decision_tree(&one_d(&[0.0, 1.0, 2.0]), &[0, 1, 1], params).unwrap();
        assert_eq!(t.nodes().len(), 1);
        let p = t.predict(&[0.0]).unwrap();
        assert_eq!(p.class, 1);
        assert!((p.score - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // both features separate the data identically
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, i as f64 * 2.0]).collect();
        let labels: Vec<usize> = (0..12).map(|i| (i >= 6) as usize).collect();
        let t = train_decision_tree(
            &rows,
            &labels,
            TreeParams {
                max_depth: 3,
                min_leaf: 1,
            },
        )
        .unwrap();
        assert!(matches!(t.nodes()[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            train_decision_tree(&[], &[], TreeParams::default()),
            Err(LearnError::Empty)
        ));
        let t = train_decision_tree(&one_d(&[0.0, 1.0]), &[0, 1], TreeParams::default()).unwrap();
        assert!(matches!(t.predict(&[f64::NAN]), Err(LearnError::NonFinite)));
        assert!(matches!(t.predict(&[1.0, 2.0]), Err(LearnError::Arity { .. })));
        assert!(train_decision_tree(&[vec![1.0], vec![1.0, 2.0]], &[0, 1], TreeParams::default()).is_err());
    }

    #[test]
    fn text_round_trip() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i * 37 % 11) as f64 / 3.0, (i % 7) as f64 * 0.1])
            .collect();
        let labels: Vec<usize> = (0..40)
            .map(|i| (i * 37 % 11 > 4) as usize + (i % 7 == 3) as usize)
            .collect();
        let t = train_decision_tree(
            &rows,
            &labels,
            TreeParams {
                max_depth: 4,
                min_leaf: 2,
            },
        )
        .unwrap();
        let back = DecisionTree::from_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert!(DecisionTree::from_text("TREE v2").is_err());
        let truncated: String = t.to_text().lines().take(2).map(|l| format!("{l}\n")).collect();
        assert!(DecisionTree::from_text(&truncated).is_err());
    }
}
