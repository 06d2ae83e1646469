//! Partition and edge-set agreement scores.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{quotient, Condensation, DirectedGraph, Partition};
use crate::recover::support_graph;

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index (Hubert and Arabie).
pub fn ari(pred: &Partition, truth: &Partition) -> Result<f64> {
    if pred.d() != truth.d() {
        return Err(Error::DimensionMismatch {
            expected: truth.d(),
            found: pred.d(),
        });
    }
    let (kp, kt) = (pred.num_clusters(), truth.num_clusters());
    let mut table = vec![0u64; kp * kt];
    for v in 0..pred.d() {
        table[pred.label(v) * kt + truth.label(v)] += 1;
    }
    let mut rows = vec![0u64; kp];
    let mut cols = vec![0u64; kt];
    for a in 0..kp {
        for b in 0..kt {
            rows[a] += table[a * kt + b];
            cols[b] += table[a * kt + b];
        }
    }
    let index: f64 = table.iter().map(|&c| pairs(c)).sum();
    let sum_pred: f64 = rows.iter().map(|&c| pairs(c)).sum();
    let sum_truth: f64 = cols.iter().map(|&c| pairs(c)).sum();
    Ok(adjusted_index(index, sum_pred, sum_truth, pairs(pred.d() as u64)))
}

/// `(index - expected) / (max - expected)`, or 1 when the denominator vanishes.
pub(crate) fn adjusted_index(index: f64, sum_pred: f64, sum_truth: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_pred * sum_truth / total;
    let max = 0.5 * (sum_pred + sum_truth);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Micro F1 over directed pairs; 1 when both sets are empty.
pub fn edge_f1(pred: &BTreeSet<(usize, usize)>, truth: &BTreeSet<(usize, usize)>) -> f64 {
    let tp = pred.intersection(truth).count();
    let fp = pred.len() - tp;
    let fn_ = truth.len() - tp;
    if tp + fp + fn_ == 0 {
        return 1.0;
    }
    (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
}

/// F1 of the predicted edges mapped onto the true clusters (intra-cluster
/// edges dropped) against the true cluster edges.
pub fn cluster_dag_f1(
    pred_support: &DirectedGraph,
    true_partition: &Partition,
    true_condensation: &Condensation,
) -> Result<f64> {
    if true_condensation.partition.num_clusters() != true_partition.num_clusters() {
        return Err(Error::DimensionMismatch {
            expected: true_partition.num_clusters(),
            found: true_condensation.partition.num_clusters(),
        });
    }
    let projected = quotient(pred_support, true_partition)?;
    Ok(edge_f1(projected.edges(), &true_condensation.cluster_edges))
}

/// Off-diagonal positions where exactly one of the two supports is nonzero.
pub fn hamming_support(b_hat: &DMatrix<f64>, b_true: &DMatrix<f64>) -> Result<usize> {
    if b_hat.shape() != b_true.shape() {
        return Err(Error::DimensionMismatch {
            expected: b_true.nrows(),
            found: b_hat.nrows(),
        });
    }
    let a = support_graph(b_hat);
    let b = support_graph(b_true);
    Ok(a.edges().symmetric_difference(b.edges()).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsReport {
    pub ari: f64,
    pub cluster_dag_f1: f64,
    pub variable_f1: f64,
    pub hamming_support: usize,
    pub predicted_partition_size: usize,
}

impl MetricsReport {
    /// Scores an estimated adjacency against the true one.
    pub fn evaluate(b_hat: &DMatrix<f64>, b_true: &DMatrix<f64>) -> Result<Self> {
        let pred = support_graph(b_hat);
        let truth = support_graph(b_true);
        if pred.d() != truth.d() {
            return Err(Error::DimensionMismatch {
                expected: truth.d(),
                found: pred.d(),
            });
        }
        let true_condensation = crate::graph::condense(&truth);
        let pred_partition = crate::graph::tarjan_scc(&pred);
        Ok(Self {
            ari: ari(&pred_partition, &true_condensation.partition)?,
            cluster_dag_f1: cluster_dag_f1(&pred, &true_condensation.partition, &true_condensation)?,
            variable_f1: edge_f1(pred.edges(), truth.edges()),
            hamming_support: hamming_support(b_hat, b_true)?,
            predicted_partition_size: pred_partition.num_clusters(),
        })
    }

    pub fn exact_support_recovery(&self) -> bool {
        self.hamming_support == 0
    }
}
