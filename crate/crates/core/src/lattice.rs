//! Exhaustive partition lattice: which groupings of the nodes have an acyclic
//! quotient, and is the SCC partition the finest of them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{is_dag, quotient, tarjan_scc, DirectedGraph, Partition};

/// Bell(10) = 115975 partitions is as far as the enumeration goes.
pub const LATTICE_LIMIT: usize = 10;

fn guard(d: usize) -> Result<()> {
    if d > LATTICE_LIMIT {
        return Err(Error::GuardExceeded {
            d,
            limit: LATTICE_LIMIT,
        });
    }
    Ok(())
}

/// Calls `visit` on every restricted growth string of length `d`
/// (`a[0] = 0`, `a[i] <= 1 + max(a[..i])`), in lexicographic order.
fn for_each_rgs(d: usize, mut visit: impl FnMut(&[usize])) {
    if d == 0 {
        visit(&[]);
        return;
    }
    let mut a = vec![0usize; d];
    // m[i] = max(a[..=i])
    let mut m = vec![0usize; d];
    loop {
        visit(&a);
        // rightmost position that can still grow
        let Some(i) = (1..d).rev().find(|&i| a[i] <= m[i - 1]) else {
            return;
        };
        a[i] += 1;
        m[i] = m[i - 1].max(a[i]);
        for j in i + 1..d {
            a[j] = 0;
            m[j] = m[i];
        }
    }
}

/// All set partitions of `0..d` in restricted-growth-string order.
pub fn enumerate_partitions(d: usize) -> Result<Vec<Partition>> {
    guard(d)?;
    let mut out = Vec::new();
    for_each_rgs(d, |a| out.push(Partition::from_labels(a)));
    Ok(out)
}

/// Counts for one level of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelCount {
    pub clusters: usize,
    pub partitions: usize,
    pub valid: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LatticeReport {
    pub d: usize,
    pub total_partitions: usize,
    pub valid_coarsenings: Vec<Partition>,
    pub scc_floor: Partition,
    pub by_cluster_count: Vec<LevelCount>,
}

/// Every partition whose quotient graph is acyclic.
pub fn valid_dag_coarsenings(g: &DirectedGraph) -> Result<LatticeReport> {
    let d = g.d();
    guard(d)?;
    let mut by_cluster_count: Vec<LevelCount> = (1..=d.max(1))
        .map(|k| LevelCount {
            clusters: k,
            partitions: 0,
            valid: 0,
        })
        .collect();
    let mut total = 0;
    let mut valid = Vec::new();
    for_each_rgs(d, |a| {
        total += 1;
        let p = Partition::from_labels(a);
        let level = &mut by_cluster_count[p.num_clusters().max(1) - 1];
        level.partitions += 1;
        if is_dag(&quotient(g, &p).expect("partition built for g")) {
            level.valid += 1;
            valid.push(p);
        }
    });
    Ok(LatticeReport {
        d,
        total_partitions: total,
        valid_coarsenings: valid,
        scc_floor: tarjan_scc(g),
        by_cluster_count,
    })
}

/// Exhaustively checks that the SCC partition is a valid coarsening and that
/// it refines every valid coarsening.
pub fn verify_scc_floor(g: &DirectedGraph) -> Result<bool> {
    let report = valid_dag_coarsenings(g)?;
    let floor_valid = report.valid_coarsenings.contains(&report.scc_floor);
    let finest = report
        .valid_coarsenings
        .iter()
        .all(|p| report.scc_floor.refines(p));
    Ok(floor_valid && finest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    // Bell numbers from the Bell triangle
    fn bell(d: usize) -> usize {
        let mut row = vec![1usize];
        for _ in 1..d.max(1) {
            let mut next = vec![*row.last().unwrap()];
            for &x in &row {
                next.push(next.last().unwrap() + x);
            }
            row = next;
        }
        if d == 0 { 1 } else { *row.last().unwrap() }
    }

    fn chain_graph() -> DirectedGraph {
        DirectedGraph::new(5, [(0, 1), (1, 2), (2, 3), (3, 1), (1, 4)]).unwrap()
    }

    #[test]
    fn bell_triangle() {
        let want = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (d, &b) in want.iter().enumerate() {
            assert_eq!(bell(d), b);
        }
    }

    #[test]
    fn partition_counts_match_bell() {
        for d in 0..=LATTICE_LIMIT {
            let all = enumerate_partitions(d).unwrap();
            assert_eq!(all.len(), bell(d), "d = {d}");
            let distinct: BTreeSet<_> = all.iter().collect();
            assert_eq!(distinct.len(), all.len());
        }
        assert!(enumerate_partitions(11).is_err());
    }

    #[test]
    fn enumeration_is_in_rgs_order() {
        let labels: Vec<Vec<usize>> = enumerate_partitions(3)
            .unwrap()
            .into_iter()
            .map(|p| p.labels().to_vec())
            .collect();
        assert_eq!(
            labels,
            vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![0, 1, 1], vec![0, 1, 2]]
        );
    }

    #[test]
    fn chain_graph_has_four_valid_coarsenings() {
        let r = valid_dag_coarsenings(&chain_graph()).unwrap();
        assert_eq!(r.total_partitions, 52);
        let got: BTreeSet<Vec<usize>> = r.valid_coarsenings.iter().map(|p| p.labels().to_vec()).collect();
        let want: BTreeSet<Vec<usize>> = [
            vec![0, 0, 0, 0, 0],
            vec![0, 1, 1, 1, 1],
            vec![0, 0, 0, 0, 1],
            vec![0, 1, 1, 1, 2],
        ]
        .into();
        assert_eq!(got, want);
        assert_eq!(r.scc_floor.labels(), &[0, 1, 1, 1, 2]);
        let sizes: Vec<usize> = r.by_cluster_count.iter().map(|l| l.partitions).collect();
        assert_eq!(sizes, vec![1, 15, 25, 10, 1]);
        let valid: Vec<usize> = r.by_cluster_count.iter().map(|l| l.valid).collect();
        assert_eq!(valid, vec![1, 2, 1, 0, 0]);
        assert!(verify_scc_floor(&chain_graph()).unwrap());
    }

    #[test]
    fn two_cycle_has_one_valid() {
        let g = DirectedGraph::new(2, [(0, 1), (1, 0)]).unwrap();
        let r = valid_dag_coarsenings(&g).unwrap();
        assert_eq!(r.total_partitions, 2);
        assert_eq!(r.valid_coarsenings, vec![Partition::single_cluster(2)]);
    }

    #[test]
    fn empty_graph_floor_is_singletons() {
        let g = DirectedGraph::empty(4);
        assert!(verify_scc_floor(&g).unwrap());
        let r = valid_dag_coarsenings(&g).unwrap();
        assert_eq!(r.scc_floor, Partition::singletons(4));
        assert_eq!(r.valid_coarsenings.len(), bell(4));
    }

    fn arb_graph() -> impl Strategy<Value = DirectedGraph> {
        (1usize..=6, 0.0f64..1.0).prop_flat_map(|(d, density)| {
            proptest::collection::vec(0.0f64..1.0, d * d).prop_map(move |u| {
                let edges = (0..d)
                    .flat_map(|s| (0..d).map(move |t| (s, t)))
                    .filter(|&(s, t)| s != t && u[s * d + t] < density);
                DirectedGraph::new(d, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn every_valid_coarsening_is_above_the_floor(g in arb_graph()) {
            let r = valid_dag_coarsenings(&g).unwrap();
            prop_assert!(r.valid_coarsenings.contains(&r.scc_floor));
            for p in &r.valid_coarsenings {
                prop_assert!(r.scc_floor.refines(p));
            }
        }

        #[test]
        fn dag_keeps_the_singleton_partition(d in 1usize..=6, u in proptest::collection::vec(0.0f64..1.0, 36)) {
            // forward edges only
            let edges = (0..d).flat_map(|s| (s + 1..d).map(move |t| (s, t))).filter(|&(s, t)| u[s * 6 + t] < 0.5);
            let g = DirectedGraph::new(d, edges).unwrap();
            let r = valid_dag_coarsenings(&g).unwrap();
            prop_assert!(r.valid_coarsenings.contains(&Partition::singletons(d)));
        }
    }
}
