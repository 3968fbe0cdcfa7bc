//! Minority-class oversampling: synthetic rows interpolated between a
//! minority row and one of its k nearest minority neighbors, until the
//! minority count reaches ⌊target_ratio · majority count⌋.
//!
//! Applied to training data only. Original rows are never modified or
//! reordered; synthetic rows are appended and flagged with their parents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Sentiment;
use crate::matrix::{FeatureMatrix, OwnedRow, RowRef};
use crate::sparse::SparseVector;
use crate::{Error, Result};

/// Where a training row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    /// Interpolated between two original minority rows, identified by their
    /// row indices in the output (originals keep their input positions).
    Synthetic { parent: usize, neighbor: usize },
}

impl Provenance {
    pub fn is_synthetic(self) -> bool {
        matches!(self, Provenance::Synthetic { .. })
    }
}

/// Feature rows with aligned labels and row provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub features: FeatureMatrix,
    pub labels: Vec<Sentiment>,
    pub provenance: Vec<Provenance>,
}

impl LabeledMatrix {
    /// Wrap features and labels, marking every row original.
    pub fn new(features: FeatureMatrix, labels: Vec<Sentiment>) -> Result<Self> {
        if features.n_rows() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature rows but {} labels",
                features.n_rows(),
                labels.len()
            )));
        }
        let provenance = vec![Provenance::Original; labels.len()];
        Ok(LabeledMatrix {
            features,
            labels,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, label: Sentiment) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Neighbor-search strategy for sparse rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum NeighborMode {
    /// Full Euclidean distance over all stored coordinates.
    Exact,
    /// Distance computed after truncating each row to its `top_f`
    /// highest-ranked coordinates (rank = |value| scaled by the optional
    /// per-column weights). A quadratic-cost reduction for wide sparse
    /// matrices; synthesis still interpolates the untruncated rows.
    Coarse { top_f: usize },
}

/// Oversampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired minority/majority ratio after synthesis, in (0, 1].
    pub target_ratio: f64,
    pub seed: u64,
    pub neighbor_mode: NeighborMode,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_ratio: 0.7,
            seed: 42,
            neighbor_mode: NeighborMode::Exact,
        }
    }
}

/// Minority row count required for a majority count and ratio:
/// ⌊target_ratio · majority⌋. A tiny nudge compensates for decimal ratios
/// that have no exact binary representation (0.7 · 10 must floor to 7).
pub fn smote_target_count(majority: usize, target_ratio: f64) -> usize {
    (target_ratio * majority as f64 + 1e-9).floor() as usize
}

/// Indices of the `k` nearest rows to `rows[query]` by Euclidean distance,
/// excluding the query row itself. Distance ties break toward the lower
/// index.
pub fn knn_minority(rows: &[RowRef<'_>], query: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if k >= rows.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} requires more than {k} minority rows, got {}",
            rows.len()
        )));
    }
    let mut by_distance: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != query)
        .map(|(i, row)| (rows[query].squared_distance(row), i))
        .collect();
    by_distance.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(by_distance[..k].iter().map(|&(_, i)| i).collect())
}

/// Interpolate `a + lambda * (b - a)` coordinate-wise, clamped to the
/// per-coordinate interval `[min(a_i, b_i), max(a_i, b_i)]` to absorb
/// floating-point overshoot.
fn lerp_rows(a: &RowRef<'_>, b: &RowRef<'_>, lambda: f64) -> OwnedRow {
    match (a, b) {
        (RowRef::Sparse(a), RowRef::Sparse(b)) => OwnedRow::Sparse(lerp_sparse(a, b, lambda)),
        (a, b) => {
            let values = (0..a.dim())
                .map(|i| lerp_clamped(a.get(i), b.get(i), lambda))
                .collect();
            OwnedRow::Dense(values)
        }
    }
}

fn lerp_clamped(a: f64, b: f64, lambda: f64) -> f64 {
    let value = a + lambda * (b - a);
    value.clamp(a.min(b), a.max(b))
}

fn lerp_sparse(a: &SparseVector, b: &SparseVector, lambda: f64) -> SparseVector {
    let (ae, be) = (a.entries(), b.entries());
    let mut entries = Vec::with_capacity(ae.len() + be.len());
    let (mut i, mut j) = (0, 0);
    let mut push = |index: usize, va: f64, vb: f64| {
        let value = lerp_clamped(va, vb, lambda);
        if value != 0.0 {
            entries.push((index, value));
        }
    };
    while i < ae.len() && j < be.len() {
        match ae[i].0.cmp(&be[j].0) {
            std::cmp::Ordering::Less => {
                push(ae[i].0, ae[i].1, 0.0);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                push(be[j].0, 0.0, be[j].1);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                push(ae[i].0, ae[i].1, be[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    for &(index, va) in &ae[i..] {
        push(index, va, 0.0);
    }
    for &(index, vb) in &be[j..] {
        push(index, 0.0, vb);
    }
    SparseVector::new(entries, a.dim()).expect("merge walk preserves sparse invariants")
}

/// Truncate a sparse row to its `top_f` highest-ranked entries for coarse
/// neighbor search. Rank = |value| · column weight (weight 1 when absent).
/// Kept entries stay index-sorted.
fn truncate_sparse(
    row: &SparseVector,
    top_f: usize,
    column_weights: Option<&[f64]>,
) -> SparseVector {
    if row.nnz() <= top_f {
        return row.clone();
    }
    let mut ranked: Vec<(f64, usize, f64)> = row
        .entries()
        .iter()
        .map(|&(index, value)| {
            let weight = column_weights.map_or(1.0, |w| w[index]);
            (value.abs() * weight, index, value)
        })
        .collect();
    ranked.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut kept: Vec<(usize, f64)> = ranked[..top_f]
        .iter()
        .map(|&(_, index, value)| (index, value))
        .collect();
    kept.sort_unstable_by_key(|e| e.0);
    SparseVector::new(kept, row.dim()).expect("truncation preserves sparse invariants")
}

/// Rebalance the minority class by synthetic interpolation.
///
/// Each synthetic row draws its own seeded random stream, so generation
/// order (parallel or sequential) cannot change the output. Returns the
/// input unchanged when the minority already meets the target. For sparse
/// inputs `column_weights` (for example IDF weights) sharpen the coarse
/// neighbor ranking; they are ignored in exact mode.
pub fn smote(
    train: LabeledMatrix,
    config: &SmoteConfig,
    column_weights: Option<&[f64]>,
) -> Result<LabeledMatrix> {
    if !(config.target_ratio > 0.0 && config.target_ratio <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "target ratio {} outside (0, 1]",
            config.target_ratio
        )));
    }
    let positive = train.count(Sentiment::Positive);
    let negative = train.count(Sentiment::Negative);
    if positive == 0 || negative == 0 {
        return Err(Error::InvalidInput(
            "oversampling requires both classes present".into(),
        ));
    }

    let minority_label = if positive <= negative {
        Sentiment::Positive
    } else {
        Sentiment::Negative
    };
    let (minority_count, majority_count) = if positive <= negative {
        (positive, negative)
    } else {
        (negative, positive)
    };
    let target = smote_target_count(majority_count, config.target_ratio);
    if minority_count >= target {
        return Ok(train);
    }
    let n_new = target - minority_count;

    let minority_indices: Vec<usize> = train
        .labels
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l == minority_label)
        .map(|(i, _)| i)
        .collect();
    if config.k_neighbors >= minority_count {
        return Err(Error::InvalidInput(format!(
            "k = {} requires more than {} minority rows, got {minority_count}",
            config.k_neighbors, config.k_neighbors
        )));
    }

    // Neighbor search runs on (possibly truncated) copies; synthesis always
    // interpolates the original rows.
    let search_rows_owned: Option<Vec<SparseVector>> = match (&train.features, config.neighbor_mode)
    {
        (FeatureMatrix::Sparse { rows, .. }, NeighborMode::Coarse { top_f }) => Some(
            minority_indices
                .par_iter()
                .map(|&i| truncate_sparse(&rows[i], top_f, column_weights))
                .collect(),
        ),
        _ => None,
    };
    let search_rows: Vec<RowRef<'_>> = match &search_rows_owned {
        Some(rows) => rows.iter().map(RowRef::Sparse).collect(),
        None => minority_indices
            .iter()
            .map(|&i| train.features.row(i))
            .collect(),
    };

    let m = minority_indices.len();
    let needed = m.min(n_new);
    let neighbor_lists: Vec<Vec<usize>> = (0..needed)
        .into_par_iter()
        .map(|i| knn_minority(&search_rows, i, config.k_neighbors))
        .collect::<Result<_>>()?;

    struct SyntheticRow {
        row: OwnedRow,
        parent: usize,
        neighbor: usize,
    }
    let synthetic: Vec<SyntheticRow> = (0..n_new)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(1 + i as u64);
            let a_pos = i % m;
            let neighbors = &neighbor_lists[a_pos];
            let b_pos = neighbors[rng.gen_range(0..neighbors.len())];
            let lambda: f64 = rng.gen();
            let parent = minority_indices[a_pos];
            let neighbor = minority_indices[b_pos];
            let row = lerp_rows(
                &train.features.row(parent),
                &train.features.row(neighbor),
                lambda,
            );
            SyntheticRow { row, parent, neighbor }
        })
        .collect();

    let LabeledMatrix {
        mut features,
        mut labels,
        mut provenance,
    } = train;
    for item in synthetic {
        features.push(item.row)?;
        labels.push(minority_label);
        provenance.push(Provenance::Synthetic {
            parent: item.parent,
            neighbor: item.neighbor,
        });
    }
    Ok(LabeledMatrix {
        features,
        labels,
        provenance,
    })
}
