use std::sync::Arc;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AffineMap, IfsFamily, Result, SharedFamily, TreeError};

/// A directed edge `i(e) → t(e)` carrying an affine map.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub map: AffineMap,
}

/// One labelled multigraph `E^λ` on the shared vertex set.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphLabel {
    pub name: String,
    pub edges: Vec<Edge>,
}

impl GraphLabel {
    /// True when every edge terminates at `v0`.
    pub fn is_neck(&self, v0: usize) -> bool {
        self.edges.iter().all(|e| e.to == v0)
    }
}

/// Random graph-directed system: i.i.d. labels drawn from `probabilities`.
#[derive(Clone, Debug)]
pub struct GraphSystem {
    dim: usize,
    vertices: usize,
    v0: usize,
    labels: Vec<GraphLabel>,
    probabilities: Vec<f64>,
    /// `families[λ][v]`: maps of the edges leaving `v` in graph `λ`, in edge order.
    families: Vec<Vec<Option<SharedFamily>>>,
    /// `targets[λ][v]`: terminal vertices of those edges.
    targets: Vec<Vec<Vec<usize>>>,
}

impl GraphSystem {
    pub fn new(vertices: usize, v0: usize, labels: Vec<GraphLabel>, probabilities: Vec<f64>) -> Result<Self> {
        if labels.is_empty() || labels.len() != probabilities.len() {
            return Err(TreeError::NoLabels);
        }
        if v0 >= vertices {
            return Err(TreeError::VertexOutOfRange { vertex: v0, vertices });
        }
        for (label, &p) in labels.iter().zip(&probabilities) {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(TreeError::InvalidProbability {
                    label: label.name.clone(),
                    value: p,
                });
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TreeError::ProbabilitySum { sum });
        }
        let dim = labels
            .iter()
            .flat_map(|l| l.edges.first())
            .map(|e| e.map.dim())
            .next()
            .ok_or(TreeError::NoLabels)?;

        let mut families = Vec::with_capacity(labels.len());
        let mut targets = Vec::with_capacity(labels.len());
        for (label, &p) in labels.iter().zip(&probabilities) {
            let mut fam_row = Vec::with_capacity(vertices);
            let mut tgt_row = Vec::with_capacity(vertices);
            for e in &label.edges {
                for v in [e.from, e.to] {
                    if v >= vertices {
                        return Err(TreeError::VertexOutOfRange { vertex: v, vertices });
                    }
                }
                if e.map.dim() != dim {
                    return Err(TreeError::MixedDimensions(dim, e.map.dim()));
                }
            }
            for v in 0..vertices {
                let out: Vec<&Edge> = label.edges.iter().filter(|e| e.from == v).collect();
                if out.is_empty() {
                    if p > 0.0 {
                        return Err(TreeError::NoOutgoingEdge {
                            vertex: v,
                            label: label.name.clone(),
                        });
                    }
                    fam_row.push(None);
                    tgt_row.push(Vec::new());
                    continue;
                }
                let maps = out.iter().map(|e| e.map.clone()).collect();
                let family = IfsFamily::new(format!("{}@{}", label.name, v), maps)?;
                fam_row.push(Some(Arc::new(family)));
                tgt_row.push(out.iter().map(|e| e.to).collect());
            }
            families.push(fam_row);
            targets.push(tgt_row);
        }
        let neck_mass: f64 = labels
            .iter()
            .zip(&probabilities)
            .filter(|(l, _)| l.is_neck(v0))
            .map(|(_, p)| p)
            .sum();
        if !(neck_mass > 0.0) {
            return Err(TreeError::NoNeckGraph { v0 });
        }
        Ok(Self {
            dim,
            vertices,
            v0,
            labels,
            probabilities,
            families,
            targets,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn v0(&self) -> usize {
        self.v0
    }

    pub fn labels(&self) -> &[GraphLabel] {
        &self.labels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `μ(Λ_neck)`.
    pub fn neck_probability(&self) -> f64 {
        self.labels
            .iter()
            .zip(&self.probabilities)
            .filter(|(l, _)| l.is_neck(self.v0))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn is_neck_label(&self, label: usize) -> bool {
        self.labels[label].is_neck(self.v0)
    }

    pub(crate) fn family(&self, label: usize, vertex: usize) -> Option<&SharedFamily> {
        self.families[label][vertex].as_ref()
    }

    pub(crate) fn targets(&self, label: usize, vertex: usize) -> &[usize] {
        &self.targets[label][vertex]
    }

    /// Largest `σ₁` and smallest `σ_d` over all edge maps.
    pub fn singular_range(&self) -> (f64, f64) {
        self.labels
            .iter()
            .flat_map(|l| &l.edges)
            .map(|e| e.map.singular_range())
            .fold((f64::INFINITY, 0.0), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }
}

/// `n` i.i.d. label indices drawn from the system's probability vector.
pub fn sample_graph_sequence(gs: &GraphSystem, seed: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = WeightedIndex::new(&gs.probabilities).expect("validated probability vector");
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

/// Neck levels of a label sequence.
///
/// Raw necks are `Ñ_k = n_k + 1` where `n_1 < n_2 < …` are the positions of
/// neck graphs in `g`; the returned list is `N_k = Ñ_{thinning·k}`.
pub fn detect_necks(g: &[usize], gs: &GraphSystem, thinning: usize) -> Result<Vec<usize>> {
    if thinning == 0 {
        return Err(TreeError::ZeroThinning);
    }
    let raw: Vec<usize> = g
        .iter()
        .enumerate()
        .filter(|(_, &label)| gs.is_neck_label(label))
        .map(|(n, _)| n + 1)
        .collect();
    Ok(raw.iter().skip(thinning - 1).step_by(thinning).copied().collect())
}
