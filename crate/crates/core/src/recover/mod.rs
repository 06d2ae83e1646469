//! From an estimated unmixing matrix to a condensation.
//!
//! A row permutation `P` of `W` is *admissible* when every diagonal entry of
//! `P W` exceeds `eta` in magnitude. Each admissible `P` yields a candidate
//! `B_P = I - diag(P W)^{-1} P W`; the candidates differ by cycle reversals
//! but share their condensation.
//!
//! Permutations are stored as `perm[i] = r`: row `i` of `P W` is row `r` of `W`,
//! so `(P W)[i][i] = W[perm[i]][i]`.

mod assignment;

use std::collections::BTreeSet;
use std::ops::ControlFlow;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use assignment::min_cost_assignment;

use crate::error::{Error, Result};
use crate::graph::{condense, Condensation, DirectedGraph, Partition};
use crate::ica::{fastica, IcaOptions};
use crate::linalg::spectral_radius;
use crate::scm::SampleMatrix;

pub const DEFAULT_TAU: f64 = 0.1;
pub const DEFAULT_ETA: f64 = 1e-3;
/// Largest dimension accepted by [`enumerate_admissible`].
pub const ENUMERATION_LIMIT: usize = 12;
pub const DEFAULT_MAX_CANDIDATES: usize = 200_000;

/// Directed graph of the off-diagonal nonzero pattern of `B`, using
/// `B[i][j] != 0  <=>  j -> i`. This is the only place where the matrix
/// orientation is translated into edges.
pub fn support_graph(b: &DMatrix<f64>) -> DirectedGraph {
    let mut edges = BTreeSet::new();
    for j in 0..b.ncols() {
        for i in 0..b.nrows() {
            if i != j && b[(i, j)] != 0.0 {
                edges.insert((j, i));
            }
        }
    }
    DirectedGraph::from_set(b.nrows(), edges)
}

/// Candidate adjacency built from one admissible permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAdjacency {
    pub b: DMatrix<f64>,
    pub permutation: Vec<usize>,
    pub spectral_radius: f64,
}

impl CandidateAdjacency {
    pub fn support(&self) -> DirectedGraph {
        support_graph(&self.b)
    }
}

fn check_square(w: &DMatrix<f64>) -> Result<usize> {
    if !w.is_square() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            found: w.ncols(),
        });
    }
    Ok(w.nrows())
}

/// Admissible permutation maximizing `sum_i log |(P W)_ii|`.
///
/// Solved as a min-cost assignment with cost `-log |W[r][i]|` for placing row
/// `r` on diagonal slot `i`. Entries with `|W[r][i]| <= eta` get a cost larger
/// than any assignment built from admissible entries alone can reach.
pub fn hungarian_admissible(w: &DMatrix<f64>, eta: f64) -> Result<Vec<usize>> {
    let d = check_square(w)?;
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let admissible = |r: usize, i: usize| w[(r, i)].abs() > eta;
    let finite: Vec<f64> = (0..d)
        .flat_map(|i| (0..d).map(move |r| (r, i)))
        .filter(|&(r, i)| admissible(r, i))
        .map(|(r, i)| -w[(r, i)].abs().ln())
        .collect();
    if finite.is_empty() {
        return Err(Error::NoAdmissiblePermutation { eta });
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let prohibitive = hi + (d as f64 + 1.0) * (hi - lo + 1.0);
    // costs[slot][row]
    let costs: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|r| {
                    if admissible(r, i) {
                        -w[(r, i)].abs().ln()
                    } else {
                        prohibitive
                    }
                })
                .collect()
        })
        .collect();
    let perm = min_cost_assignment(&costs);
    if (0..d).all(|i| admissible(perm[i], i)) {
        Ok(perm)
    } else {
        Err(Error::NoAdmissiblePermutation { eta })
    }
}

/// Visits admissible permutations in lexicographic order until `visit` breaks.
pub fn for_each_admissible<F>(w: &DMatrix<f64>, eta: f64, mut visit: F) -> Result<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let d = check_square(w)?;
    if d > ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded {
            d,
            limit: ENUMERATION_LIMIT,
        });
    }
    // options[i]: rows usable on slot i, increasing
    let options: Vec<Vec<usize>> = (0..d)
        .map(|i| (0..d).filter(|&r| w[(r, i)].abs() > eta).collect())
        .collect();
    let mut perm = Vec::with_capacity(d);
    let mut used = vec![false; d];
    let _ = backtrack(&options, &mut perm, &mut used, &mut visit);
    Ok(())
}

fn backtrack<F>(
    options: &[Vec<usize>],
    perm: &mut Vec<usize>,
    used: &mut [bool],
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let slot = perm.len();
    if slot == options.len() {
        return visit(perm);
    }
    for &r in &options[slot] {
        if used[r] {
            continue;
        }
        used[r] = true;
        perm.push(r);
        let flow = backtrack(options, perm, used, visit);
        perm.pop();
        used[r] = false;
        flow?;
    }
    ControlFlow::Continue(())
}

/// Every admissible permutation, in lexicographic order.
pub fn enumerate_admissible(w: &DMatrix<f64>, eta: f64) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for_each_admissible(w, eta, |p| {
        out.push(p.to_vec());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// `B = I - diag(P W)^{-1} P W` with an exactly zero diagonal.
pub fn b_from_w(w: &DMatrix<f64>, perm: &[usize]) -> Result<CandidateAdjacency> {
    let d = check_square(w)?;
    if perm.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: perm.len(),
        });
    }
    let mut seen = vec![false; d];
    for &r in perm {
        if r >= d || std::mem::replace(&mut seen[r], true) {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
        }
    }
    let mut b = DMatrix::zeros(d, d);
    for i in 0..d {
        let row = perm[i];
        let diag = w[(row, i)];
        if diag == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
        for j in 0..d {
            if j != i {
                b[(i, j)] = -w[(row, j)] / diag;
            }
        }
    }
    let spectral_radius = spectral_radius(&b)?;
    Ok(CandidateAdjacency {
        b,
        permutation: perm.to_vec(),
        spectral_radius,
    })
}

/// Zeroes every entry with `|B_ij| < tau`; entries equal to `tau` survive.
pub fn threshold(candidate: &CandidateAdjacency, tau: f64) -> Result<CandidateAdjacency> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("tau = {tau} must be >= 0")));
    }
    let b = candidate.b.map(|x| if x.abs() < tau { 0.0 } else { x });
    let spectral_radius = if b == candidate.b {
        candidate.spectral_radius
    } else {
        spectral_radius(&b)?
    };
    Ok(CandidateAdjacency {
        b,
        permutation: candidate.permutation.clone(),
        spectral_radius,
    })
}

/// Index of the first candidate with spectral radius below one, or of the
/// smallest-radius candidate (earliest on ties) when none is stable.
pub fn first_stable_select(candidates: &[CandidateAdjacency]) -> Result<usize> {
    let mut selector = StableSelector::default();
    for (i, c) in candidates.iter().enumerate() {
        if selector.offer(i, c.spectral_radius).is_break() {
            break;
        }
    }
    selector.selected().ok_or(Error::EmptyCandidates)
}

#[derive(Debug, Default)]
struct StableSelector {
    best: Option<(usize, f64)>,
    stable: bool,
}

impl StableSelector {
    fn offer(&mut self, index: usize, radius: f64) -> ControlFlow<()> {
        if radius < 1.0 {
            self.best = Some((index, radius));
            self.stable = true;
            return ControlFlow::Break(());
        }
        if self.best.is_none_or(|(_, r)| radius < r) {
            self.best = Some((index, radius));
        }
        ControlFlow::Continue(())
    }

    fn selected(&self) -> Option<usize> {
        self.best.map(|(i, _)| i)
    }
}

/// How a single candidate is picked from the estimated unmixing matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// One admissible permutation from the assignment solver.
    Hungarian,
    /// Enumerate admissible permutations of the pruned unmixing matrix and
    /// keep the first stable candidate.
    EnumerateFirstStable,
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hungarian" => Ok(SelectionMode::Hungarian),
            "enumerate-first-stable" => Ok(SelectionMode::EnumerateFirstStable),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Hungarian => "hungarian",
            SelectionMode::EnumerateFirstStable => "enumerate-first-stable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct RecoveryConfig {
    pub tau: f64,
    pub eta: f64,
    pub ica: IcaOptions,
    pub mode: SelectionMode,
    /// Cap on candidates visited in enumeration mode before falling back to
    /// the smallest radius seen so far.
    pub max_candidates: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            eta: DEFAULT_ETA,
            ica: IcaOptions::default(),
            mode: SelectionMode::Hungarian,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub ica_ms: f64,
    pub assign_ms: f64,
    pub tarjan_ms: f64,
    pub total_ms: f64,
}

/// Output of the recovery pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Selected candidate after thresholding.
    pub b_hat: CandidateAdjacency,
    pub partition: Partition,
    pub condensation: Condensation,
    pub tau: f64,
    pub eta: f64,
    pub timings: Timings,
    pub ica_iterations: usize,
    pub ica_converged: bool,
    pub candidates_visited: usize,
}

/// Candidate chosen from a fixed unmixing matrix, before condensation.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub candidate: CandidateAdjacency,
    pub candidates_visited: usize,
}

/// Picks the thresholded candidate for `w` according to `cfg.mode`.
pub fn select_candidate(w: &DMatrix<f64>, cfg: &RecoveryConfig) -> Result<Selection> {
    let perm = hungarian_admissible(w, cfg.eta)?;
    let hungarian = threshold(&b_from_w(w, &perm)?, cfg.tau)?;
    match cfg.mode {
        SelectionMode::Hungarian => Ok(Selection {
            candidate: hungarian,
            candidates_visited: 1,
        }),
        SelectionMode::EnumerateFirstStable => enumerate_first_stable(w, &perm, cfg),
    }
}

/// Prunes `w` (each row scaled to put 1 on the entry the assignment solver
/// used, entries below `tau` in that scale dropped) and runs the first-stable
/// filter over the admissible permutations of the pruned matrix.
fn enumerate_first_stable(
    w: &DMatrix<f64>,
    perm: &[usize],
    cfg: &RecoveryConfig,
) -> Result<Selection> {
    let d = w.nrows();
    let mut pruned = DMatrix::zeros(d, d);
    for (slot, &row) in perm.iter().enumerate() {
        let anchor = w[(row, slot)];
        for j in 0..d {
            let v = w[(row, j)] / anchor;
            if j == slot || v.abs() >= cfg.tau {
                pruned[(row, j)] = v;
            }
        }
    }
    let mut selector = StableSelector::default();
    let mut best: Option<CandidateAdjacency> = None;
    let mut visited = 0usize;
    let mut failure = None;
    for_each_admissible(&pruned, cfg.eta, |p| {
        let candidate = match b_from_w(&pruned, p).and_then(|c| threshold(&c, cfg.tau)) {
            Ok(c) => c,
            Err(e) => {
                failure = Some(e);
                return ControlFlow::Break(());
            }
        };
        let before = selector.selected();
        let flow = selector.offer(visited, candidate.spectral_radius);
        if selector.selected() != before {
            best = Some(candidate);
        }
        visited += 1;
        if visited >= cfg.max_candidates {
            return ControlFlow::Break(());
        }
        flow
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let candidate = best.ok_or(Error::NoAdmissiblePermutation { eta: cfg.eta })?;
    Ok(Selection {
        candidate,
        candidates_visited: visited,
    })
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Condensation of a fixed unmixing matrix (no ICA stage).
pub fn recover_from_unmixing(w: &DMatrix<f64>, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    let start = Instant::now();
    let selection = select_candidate(w, cfg)?;
    let assign_ms = millis(start);
    let t = Instant::now();
    let condensation = condense(&selection.candidate.support());
    let tarjan_ms = millis(t);
    Ok(RecoveryResult {
        partition: condensation.partition.clone(),
        condensation,
        b_hat: selection.candidate,
        tau: cfg.tau,
        eta: cfg.eta,
        timings: Timings {
            ica_ms: 0.0,
            assign_ms,
            tarjan_ms,
            total_ms: millis(start),
        },
        ica_iterations: 0,
        ica_converged: true,
        candidates_visited: selection.candidates_visited,
    })
}

/// Full pipeline: FastICA, admissible permutation, candidate, threshold, SCCs
/// and inter-cluster edges.
pub fn recover_condensation(x: &SampleMatrix, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    if !(cfg.tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("tau = {} must be >= 0", cfg.tau)));
    }
    let start = Instant::now();
    let estimate = fastica(x, &cfg.ica)?;
    let ica_ms = millis(start);
    let mut result = recover_from_unmixing(&estimate.w, cfg)?;
    result.timings.ica_ms = ica_ms;
    result.timings.total_ms = millis(start);
    result.ica_iterations = estimate.iterations;
    result.ica_converged = estimate.converged;
    Ok(result)
}

/// On-disk form of a [`RecoveryResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryJson {
    pub partition: Vec<usize>,
    #[serde(rename = "clusterEdges")]
    pub cluster_edges: Vec<[usize; 2]>,
    #[serde(rename = "bHat")]
    pub b_hat: Vec<Vec<f64>>,
    pub tau: f64,
    pub eta: f64,
    pub timings: Timings,
    #[serde(rename = "icaIterations")]
    pub ica_iterations: usize,
}

impl From<&RecoveryResult> for RecoveryJson {
    fn from(r: &RecoveryResult) -> Self {
        Self {
            partition: r.partition.labels().to_vec(),
            cluster_edges: r.condensation.cluster_edges.iter().map(|&(a, b)| [a, b]).collect(),
            b_hat: r.b_hat.b.row_iter().map(|row| row.iter().copied().collect()).collect(),
            tau: r.tau,
            eta: r.eta,
            timings: r.timings,
            ica_iterations: r.ica_iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tarjan_scc;
    use crate::scm::tests::chain_matrix;
    use crate::scm::{generate_scm, GeneratorConfig, Regime};
    use proptest::prelude::*;

    fn identity_minus(b: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::identity(b.nrows(), b.ncols()) - b
    }

    fn all_permutations(d: usize) -> Vec<Vec<usize>> {
        fn go(d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == d {
                out.push(cur.clone());
                return;
            }
            for r in 0..d {
                if !cur.contains(&r) {
                    cur.push(r);
                    go(d, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(d, &mut Vec::new(), &mut out);
        out
    }

    fn candidate_with_radius(r: f64) -> CandidateAdjacency {
        CandidateAdjacency {
            b: DMatrix::zeros(1, 1),
            permutation: vec![0],
            spectral_radius: r,
        }
    }

    #[test]
    fn support_orientation() {
        let g = support_graph(&chain_matrix());
        let want = DirectedGraph::new(5, [(0, 1), (1, 2), (2, 3), (3, 1), (1, 4)]).unwrap();
        assert_eq!(g, want);
    }

    #[test]
    fn hungarian_basic_cases() {
        assert_eq!(hungarian_admissible(&DMatrix::identity(4, 4), 1e-3).unwrap(), vec![0, 1, 2, 3]);
        // rows of [[1, -0.5], [0, 1]] exchanged
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, -0.5]);
        let p = hungarian_admissible(&w, 1e-3).unwrap();
        assert_eq!(p, vec![1, 0]);
        let b = b_from_w(&w, &p).unwrap();
        assert_eq!(b.b, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, 0.0]));

        let w = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.5, 0.0, 1.0, 3.0, 0.0, 1.0]);
        assert!(matches!(
            hungarian_admissible(&w, 1e-3),
            Err(Error::NoAdmissiblePermutation { .. })
        ));
    }

    #[test]
    fn enumeration_basic_cases() {
        assert_eq!(enumerate_admissible(&DMatrix::identity(3, 3), 1e-3).unwrap(), vec![vec![0, 1, 2]]);
        let ones = DMatrix::from_element(3, 3, 1.0);
        let all = enumerate_admissible(&ones, 1e-3).unwrap();
        assert_eq!(all, all_permutations(3));
        assert!(enumerate_admissible(&DMatrix::identity(13, 13), 1e-3).is_err());
    }

    #[test]
    fn enumeration_count_on_chain_graph_matches_scan() {
        let w = identity_minus(&chain_matrix());
        let scan: Vec<Vec<usize>> = all_permutations(5)
            .into_iter()
            .filter(|p| (0..5).all(|i| w[(p[i], i)].abs() > 1e-3))
            .collect();
        let got = enumerate_admissible(&w, 1e-3).unwrap();
        assert_eq!(got, scan);
        // the true ordering and the reversed 3-cycle
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn candidate_inverts_definition() {
        let b = chain_matrix();
        let w = identity_minus(&b);
        let c = b_from_w(&w, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(c.b, b);
        let scale = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -0.5, 3.0, 1.5, -7.0]));
        let c2 = b_from_w(&(scale * &w), &[0, 1, 2, 3, 4]).unwrap();
        assert!((c2.b - &b).amax() < 1e-15);
    }

    #[test]
    fn candidate_rejects_zero_diagonal() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(b_from_w(&w, &[0, 1]), Err(Error::ZeroDiagonal(0))));
        assert!(b_from_w(&w, &[0, 0]).is_err());
    }

    #[test]
    fn threshold_cases() {
        let c = CandidateAdjacency {
            b: DMatrix::from_row_slice(2, 2, &[0.0, 0.05, 0.2, 0.0]),
            permutation: vec![0, 1],
            spectral_radius: 0.1,
        };
        let t = threshold(&c, 0.1).unwrap();
        assert_eq!(t.b, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.2, 0.0]));
        assert_eq!(t.spectral_radius, 0.0);
        assert_eq!(threshold(&c, 0.0).unwrap(), c);
        // equality survives
        assert_eq!(threshold(&c, 0.2).unwrap().b[(1, 0)], 0.2);
        assert!(threshold(&c, -1.0).is_err());
    }

    #[test]
    fn first_stable_cases() {
        let c: Vec<_> = [1.3, 0.8, 0.7].map(candidate_with_radius).into();
        assert_eq!(first_stable_select(&c).unwrap(), 1);
        let c: Vec<_> = [1.5, 1.2].map(candidate_with_radius).into();
        assert_eq!(first_stable_select(&c).unwrap(), 1);
        let c: Vec<_> = [1.5, 1.2, 1.2].map(candidate_with_radius).into();
        assert_eq!(first_stable_select(&c).unwrap(), 1);
        assert!(matches!(first_stable_select(&[]), Err(Error::EmptyCandidates)));
    }

    #[test]
    fn first_stable_recovers_true_b_on_noiseless_input() {
        let cfg = GeneratorConfig::new(8, 3, 0.5, Regime::Stable);
        for seed in 0..30 {
            let scm = generate_scm(&cfg, seed).unwrap();
            let w = identity_minus(scm.b.matrix());
            let candidates: Vec<_> = enumerate_admissible(&w, 1e-3)
                .unwrap()
                .iter()
                .map(|p| b_from_w(&w, p).unwrap())
                .collect();
            let chosen = &candidates[first_stable_select(&candidates).unwrap()];
            assert!((&chosen.b - scm.b.matrix()).amax() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn enumeration_mode_matches_truth_on_noiseless_input() {
        let cfg = GeneratorConfig::new(10, 4, 0.5, Regime::Stable);
        let rc = RecoveryConfig {
            mode: SelectionMode::EnumerateFirstStable,
            ..RecoveryConfig::default()
        };
        for seed in 0..20 {
            let scm = generate_scm(&cfg, seed).unwrap();
            // arbitrary row order and scale, as ICA would return
            let w = identity_minus(scm.b.matrix());
            let d = w.nrows();
            let shuffled = DMatrix::from_fn(d, d, |i, j| w[((i * 3 + 1) % d, j)] * (1.0 + i as f64));
            let sel = select_candidate(&shuffled, &rc).unwrap();
            assert!((&sel.candidate.b - scm.b.matrix()).amax() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn condensation_is_constant_across_noiseless_candidates() {
        let cfg = GeneratorConfig::new(8, 3, 0.8, Regime::Unstable);
        for seed in 0..20 {
            let scm = generate_scm(&cfg, seed).unwrap();
            let w = identity_minus(scm.b.matrix());
            let truth = condense(&scm.b.support());
            for p in enumerate_admissible(&w, 1e-3).unwrap() {
                let c = threshold(&b_from_w(&w, &p).unwrap(), DEFAULT_TAU).unwrap();
                assert_eq!(condense(&c.support()), truth, "seed {seed}, perm {p:?}");
            }
        }
    }

    #[test]
    fn tarjan_on_candidate_support_uses_edge_convention() {
        let c = b_from_w(&identity_minus(&chain_matrix()), &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(tarjan_scc(&c.support()).labels(), &[0, 1, 1, 1, 2]);
    }

    // brute-force argmax of sum log|diag| over all d! permutations
    fn brute_force_best(w: &DMatrix<f64>) -> f64 {
        all_permutations(w.nrows())
            .iter()
            .map(|p| (0..w.nrows()).map(|i| w[(p[i], i)].abs().ln()).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    proptest! {
        #[test]
        fn hungarian_is_optimal(d in 1usize..=6, entries in proptest::collection::vec(-3.0f64..3.0, 36)) {
            let w = DMatrix::from_fn(d, d, |i, j| {
                let v = entries[i * 6 + j];
                if v.abs() < 0.01 { 0.5 } else { v }
            });
            let p = hungarian_admissible(&w, 1e-3).unwrap();
            let got: f64 = (0..d).map(|i| w[(p[i], i)].abs().ln()).sum();
            prop_assert!((got - brute_force_best(&w)).abs() < 1e-9);
        }

        #[test]
        fn threshold_is_idempotent_and_monotone(
            entries in proptest::collection::vec(-1.0f64..1.0, 16),
            t1 in 0.0f64..1.0,
            dt in 0.0f64..1.0,
        ) {
            let mut b = DMatrix::from_vec(4, 4, entries);
            b.fill_diagonal(0.0);
            let c = CandidateAdjacency { spectral_radius: spectral_radius(&b).unwrap(), b, permutation: vec![0, 1, 2, 3] };
            let once = threshold(&c, t1).unwrap();
            prop_assert_eq!(threshold(&once, t1).unwrap(), once.clone());
            let coarser = threshold(&c, t1 + dt).unwrap();
            let fine = once.support();
            prop_assert!(coarser.support().edges().is_subset(fine.edges()));
        }
    }
}
