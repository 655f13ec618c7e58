use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::graph::{detect_necks, GraphSystem};
use super::{IfsFamily, Result, SharedFamily, TreeError};

/// A node of the level DAG: its system and, for each map, the child index on
/// the next level (empty on the deepest stored level).
#[derive(Clone, Debug)]
pub struct TreeNode {
    pub family: SharedFamily,
    pub children: Vec<usize>,
}

/// A code tree realized down to depth `K`: words of length up to `K` are valid.
///
/// `levels[n]` holds the distinct nodes reachable at depth `n` for
/// `n = 0, …, K−1`; the root is `levels[0][0]`.
#[derive(Clone, Debug)]
pub struct CodeTreeRealization {
    dim: usize,
    levels: Vec<Vec<TreeNode>>,
    necks: Vec<usize>,
}

impl CodeTreeRealization {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn necks(&self) -> &[usize] {
        &self.necks
    }

    pub fn levels(&self) -> &[Vec<TreeNode>] {
        &self.levels
    }

    pub fn root(&self) -> &TreeNode {
        &self.levels[0][0]
    }

    pub(crate) fn node(&self, level: usize, index: usize) -> &TreeNode {
        &self.levels[level][index]
    }

    /// Replace the neck list, keeping only entries that lie within the realized depth.
    pub fn with_necks(mut self, necks: Vec<usize>) -> Self {
        self.necks = necks.into_iter().filter(|&n| n >= 1 && n <= self.depth()).collect();
        self
    }

    /// Smallest `σ_d` and largest `σ₁` over every map in the realized tree.
    pub fn singular_range(&self) -> (f64, f64) {
        self.levels
            .iter()
            .flatten()
            .map(|n| n.family.singular_range())
            .fold((f64::INFINITY, 0.0), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }

    /// Largest number of children of any node.
    pub fn max_branching(&self) -> usize {
        self.levels.iter().flatten().map(|n| n.family.len()).max().unwrap_or(0)
    }

    /// Structural equality of the sub code trees rooted at two nodes of the same level.
    pub fn subtrees_equal(&self, level: usize, a: usize, b: usize) -> bool {
        let mut memo = HashMap::new();
        subtree_eq(self, self, level, a, level, b, &mut memo)
    }

    /// Structural equality of the sub code tree of `self` at `(la, a)` and of
    /// `other` at `(lb, b)`, compared over their common realized depth.
    pub fn subtree_matches(&self, la: usize, a: usize, other: &CodeTreeRealization, lb: usize, b: usize) -> bool {
        let mut memo = HashMap::new();
        subtree_eq(self, other, la, a, lb, b, &mut memo)
    }

    /// Checks that all level-`N` sub code trees coincide for every recorded neck `N`.
    pub fn verify_necks(&self) -> bool {
        let increasing = self.necks.windows(2).all(|w| w[0] < w[1]);
        increasing
            && self.necks.iter().all(|&n| {
                n >= self.depth() || (1..self.levels[n].len()).all(|j| self.subtrees_equal(n, 0, j))
            })
    }

    /// Number of realized nodes per level (the DAG width).
    pub fn level_widths(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }
}

fn subtree_eq(
    ta: &CodeTreeRealization,
    tb: &CodeTreeRealization,
    la: usize,
    a: usize,
    lb: usize,
    b: usize,
    memo: &mut HashMap<(usize, usize, usize, usize), bool>,
) -> bool {
    if let Some(&r) = memo.get(&(la, a, lb, b)) {
        return r;
    }
    let na = ta.node(la, a);
    let nb = tb.node(lb, b);
    let same_family = Arc::ptr_eq(&na.family, &nb.family) || *na.family == *nb.family;
    let result = same_family
        && (na.children.is_empty()
            || nb.children.is_empty()
            || na
                .children
                .iter()
                .zip(&nb.children)
                .all(|(&ca, &cb)| subtree_eq(ta, tb, la + 1, ca, lb + 1, cb, memo)));
    memo.insert((la, a, lb, b), result);
    result
}

/// The constant code tree of a single system: necks at every level.
pub fn deterministic_tree(family: IfsFamily, depth: usize) -> Result<CodeTreeRealization> {
    if depth == 0 {
        return Err(TreeError::ZeroDepth);
    }
    let dim = family.dim();
    let family = Arc::new(family);
    let levels = (0..depth)
        .map(|n| {
            let children = if n + 1 < depth { vec![0; family.len()] } else { Vec::new() };
            vec![TreeNode {
                family: Arc::clone(&family),
                children,
            }]
        })
        .collect();
    Ok(CodeTreeRealization {
        dim,
        levels,
        necks: (1..=depth).collect(),
    })
}

/// The code tree `ω_v` generated by the label sequence `g` from `start_vertex`:
/// the node reached through edges ending at `w` after `n` steps carries `𝓕_w^{g_n}`.
///
/// Necks are read off `g[..depth]` with the given thinning factor.
pub fn build_code_tree(
    gs: &GraphSystem,
    g: &[usize],
    start_vertex: usize,
    depth: usize,
    thinning: usize,
) -> Result<CodeTreeRealization> {
    if depth == 0 {
        return Err(TreeError::ZeroDepth);
    }
    if g.len() < depth {
        return Err(TreeError::SequenceTooShort {
            available: g.len(),
            depth,
        });
    }
    if start_vertex >= gs.vertices() {
        return Err(TreeError::VertexOutOfRange {
            vertex: start_vertex,
            vertices: gs.vertices(),
        });
    }
    let mut levels: Vec<Vec<TreeNode>> = Vec::with_capacity(depth);
    let mut current: Vec<usize> = vec![start_vertex];
    for n in 0..depth {
        let label = g[n];
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        let mut nodes = Vec::with_capacity(current.len());
        // child indices are assigned after the next level's vertex set is known
        let mut raw_children: Vec<Vec<usize>> = Vec::with_capacity(current.len());
        for &w in &current {
            let family = gs.family(label, w).ok_or_else(|| TreeError::NoOutgoingEdge {
                vertex: w,
                label: gs.labels()[label].name.clone(),
            })?;
            let targets = gs.targets(label, w).to_vec();
            for &t in &targets {
                next.insert(t, 0);
            }
            nodes.push(TreeNode {
                family: Arc::clone(family),
                children: Vec::new(),
            });
            raw_children.push(targets);
        }
        let order: Vec<usize> = next.keys().copied().collect();
        for (slot, v) in order.iter().enumerate() {
            next.insert(*v, slot);
        }
        if n + 1 < depth {
            for (node, targets) in nodes.iter_mut().zip(raw_children) {
                node.children = targets.iter().map(|t| next[t]).collect();
            }
        }
        levels.push(nodes);
        current = order;
    }
    let necks = detect_necks(&g[..depth], gs, thinning)?;
    Ok(CodeTreeRealization {
        dim: gs.dim(),
        levels,
        necks,
    })
}

/// Linear part `T_{i₁}^{ω(∅)} T_{i₂}^{ω(i₁)} ⋯` and the point `f_{𝐢}(0)` of a word.
pub fn compose(tree: &CodeTreeRealization, word: &[usize]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if word.len() > tree.depth() {
        return Err(TreeError::WordTooLong {
            length: word.len(),
            depth: tree.depth(),
        });
    }
    let d = tree.dim();
    let mut linear = DMatrix::identity(d, d);
    let mut point = DVector::zeros(d);
    let mut index = 0;
    for (position, &symbol) in word.iter().enumerate() {
        let node = tree.node(position, index);
        let map = node.family.maps().get(symbol).ok_or(TreeError::InvalidWord {
            position,
            symbol,
            children: node.family.len(),
        })?;
        point += &linear * map.translation();
        linear *= map.linear();
        if position + 1 < word.len() {
            index = node.children[symbol];
        }
    }
    Ok((linear, point))
}

/// Reroot at the first neck: `Ξ(ω, N) = (ω̂, N̂)` with `N̂_m = N_{m+1} − N₁`.
pub fn shift_first_neck(tree: &CodeTreeRealization) -> Result<CodeTreeRealization> {
    if tree.necks.len() < 2 {
        return Err(TreeError::NotEnoughNecks {
            needed: 2,
            available: tree.necks.len(),
        });
    }
    let first = tree.necks[0];
    // all level-`first` nodes share one sub code tree; keep what node 0 reaches
    let mut levels: Vec<Vec<TreeNode>> = Vec::with_capacity(tree.depth() - first);
    let mut reach: Vec<usize> = vec![0];
    for n in first..tree.depth() {
        let remap: BTreeMap<usize, usize> = reach.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let mut nodes: Vec<TreeNode> = reach.iter().map(|&old| tree.levels[n][old].clone()).collect();
        let mut next: Vec<usize> = nodes.iter().flat_map(|node| node.children.iter().copied()).collect();
        next.sort_unstable();
        next.dedup();
        let next_remap: BTreeMap<usize, usize> = next.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        for node in &mut nodes {
            node.children = node.children.iter().map(|c| next_remap[c]).collect();
        }
        debug_assert_eq!(remap.len(), nodes.len());
        levels.push(nodes);
        reach = next;
    }
    let necks = tree.necks[1..].iter().map(|n| n - first).collect();
    Ok(CodeTreeRealization {
        dim: tree.dim,
        levels,
        necks,
    })
}
