//! Affine code trees.
//!
//! A code tree attaches an iterated function system to every node of a
//! finitely branching tree of words; the node `i₁…i_n` has one child per map
//! of its system. Realizations here are finite-depth and stored level by level
//! as a DAG: each level keeps only its distinct nodes, and child links point
//! into the next level. A graph-directed tree has at most `V` nodes per level,
//! and a neck level has exactly one.

mod graph;
mod measure;
mod sums;
mod tree;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::fs::FsError;
use crate::singular::SingularSpectrum;

pub use graph::{detect_necks, sample_graph_sequence, Edge, GraphLabel, GraphSystem};
pub use measure::{attractor_points, count_full_blocks, first_block_family, sample_measure_points, MeasureSample, WeightedPoint};
pub use sums::{
    fold_words, map_words, partition_sum, partition_sum_monte_carlo, word_count, LogPartitionTable, MonteCarloSum,
    DEFAULT_ENUMERATION_CAP,
};
pub use tree::{build_code_tree, compose, deterministic_tree, shift_first_neck, CodeTreeRealization, TreeNode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("linear part of map has shape {rows}x{cols}, expected {dim}x{dim}")]
    Shape { rows: usize, cols: usize, dim: usize },
    #[error("translation has length {found}, expected {dim}")]
    TranslationLength { found: usize, dim: usize },
    #[error("map is not a nonsingular contraction: singular values {sigma:?}")]
    NotContraction { sigma: Vec<f64> },
    #[error("family '{label}' is empty")]
    EmptyFamily { label: String },
    #[error("family '{label}' repeats translation class {class}")]
    DuplicateClass { label: String, class: usize },
    #[error("mixed ambient dimensions: {0} and {1}")]
    MixedDimensions(usize, usize),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("label sequence has {available} entries, depth {depth} needs that many")]
    SequenceTooShort { available: usize, depth: usize },
    #[error("vertex {vertex} has no outgoing edge in graph '{label}'")]
    NoOutgoingEdge { vertex: usize, label: String },
    #[error("vertex {vertex} out of range (V = {vertices})")]
    VertexOutOfRange { vertex: usize, vertices: usize },
    #[error("probabilities sum to {sum}, expected 1")]
    ProbabilitySum { sum: f64 },
    #[error("probability {value} for graph '{label}' is invalid")]
    InvalidProbability { label: String, value: f64 },
    #[error("no positive-probability graph sends every edge to v0 = {v0}; necks never occur")]
    NoNeckGraph { v0: usize },
    #[error("graph system has no labels")]
    NoLabels,
    #[error("symbol {symbol} at position {position} is not a valid child (node has {children})")]
    InvalidWord { position: usize, symbol: usize, children: usize },
    #[error("word of length {length} exceeds realized depth {depth}")]
    WordTooLong { length: usize, depth: usize },
    #[error("level {level} exceeds realized depth {depth}")]
    LevelTooDeep { level: usize, depth: usize },
    #[error("{count} words at level {level} exceed the enumeration cap {cap}; use Monte-Carlo estimation")]
    EnumerationCap { level: usize, count: u128, cap: u128 },
    #[error("need at least {needed} realized necks, have {available}")]
    NotEnoughNecks { needed: usize, available: usize },
    #[error("neck thinning factor must be at least 1")]
    ZeroThinning,
    #[error(transparent)]
    Fs(#[from] FsError),
}

pub type Result<T> = std::result::Result<T, TreeError>;

/// `x ↦ T x + a` with `T` a nonsingular contraction.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    linear: DMatrix<f64>,
    translation_class: usize,
    translation: DVector<f64>,
}

impl AffineMap {
    pub fn new(linear: DMatrix<f64>, translation_class: usize, translation: DVector<f64>) -> Result<Self> {
        let (rows, cols) = linear.shape();
        if rows != cols || rows == 0 {
            return Err(TreeError::Shape { rows, cols, dim: rows });
        }
        if translation.len() != rows {
            return Err(TreeError::TranslationLength {
                found: translation.len(),
                dim: rows,
            });
        }
        let spec = SingularSpectrum::of_unchecked(&linear);
        if !(spec.largest() < 1.0) || !(spec.smallest() > 0.0) || linear.iter().any(|x| !x.is_finite()) {
            return Err(TreeError::NotContraction {
                sigma: spec.values().to_vec(),
            });
        }
        Ok(Self {
            linear,
            translation_class,
            translation,
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.nrows()
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.linear
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    pub fn translation_class(&self) -> usize {
        self.translation_class
    }

    pub fn with_translation(&self, translation: DVector<f64>) -> Result<Self> {
        Self::new(self.linear.clone(), self.translation_class, translation)
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.linear * x + &self.translation
    }

    /// `(σ_d, σ₁)` of the linear part.
    pub fn singular_range(&self) -> (f64, f64) {
        let spec = SingularSpectrum::of_unchecked(&self.linear);
        (spec.smallest(), spec.largest())
    }
}

/// One iterated function system `F^λ = {f₁, …, f_{M_λ}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct IfsFamily {
    label: String,
    maps: Vec<AffineMap>,
}

impl IfsFamily {
    pub fn new(label: impl Into<String>, maps: Vec<AffineMap>) -> Result<Self> {
        let label = label.into();
        let first = maps.first().ok_or_else(|| TreeError::EmptyFamily { label: label.clone() })?;
        let dim = first.dim();
        let mut classes = Vec::with_capacity(maps.len());
        for m in &maps {
            if m.dim() != dim {
                return Err(TreeError::MixedDimensions(dim, m.dim()));
            }
            if classes.contains(&m.translation_class) {
                return Err(TreeError::DuplicateClass {
                    label,
                    class: m.translation_class,
                });
            }
            classes.push(m.translation_class);
        }
        Ok(Self { label, maps })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    /// Smallest `σ_d` and largest `σ₁` over the family.
    pub fn singular_range(&self) -> (f64, f64) {
        self.maps.iter().map(AffineMap::singular_range).fold((f64::INFINITY, 0.0), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        })
    }
}

pub(crate) type SharedFamily = Arc<IfsFamily>;
