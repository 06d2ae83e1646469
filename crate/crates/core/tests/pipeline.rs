use nalgebra::DMatrix;

use cyclic_condensation::graph::{condense, Partition};
use cyclic_condensation::ica::{fastica, IcaOptions};
use cyclic_condensation::recover::{recover_condensation, recover_from_unmixing, RecoveryConfig, SelectionMode};
use cyclic_condensation::scm::{generate_scm, sample, GeneratorConfig, Noise, Regime, SampleMatrix, ScmSpec};
use cyclic_condensation::WeightedAdjacency;

fn chain_scm() -> ScmSpec {
    let mut b = DMatrix::zeros(5, 5);
    b[(1, 0)] = 1.2;
    b[(1, 3)] = -0.3;
    b[(2, 1)] = 2.0;
    b[(3, 2)] = -1.0;
    b[(4, 1)] = 3.0;
    ScmSpec::from_matrix(WeightedAdjacency::new(b).unwrap(), Noise::default(), 0).unwrap()
}

#[test]
fn ica_recovers_independent_sources() {
    // identity mixing: W must be a scaled permutation
    let scm = ScmSpec::from_matrix(WeightedAdjacency::new(DMatrix::zeros(4, 4)).unwrap(), Noise::default(), 0).unwrap();
    let x = sample(&scm, 20_000, 5).unwrap();
    let est = fastica(&x, &IcaOptions::default()).unwrap();
    assert!(est.converged);
    for row in est.w.row_iter() {
        let abs: Vec<f64> = row.iter().map(|v| v.abs()).collect();
        let max = abs.iter().cloned().fold(0.0, f64::max);
        let rest: f64 = abs.iter().sum::<f64>() - max;
        assert!(rest < 0.1 * max, "row {row}");
    }
}

#[test]
fn five_node_chain_is_recovered() {
    let scm = chain_scm();
    let x = sample(&scm, 10_000, 1).unwrap();
    let r = recover_condensation(&x, &RecoveryConfig::default()).unwrap();
    assert_eq!(r.partition, Partition::from_labels(&[0, 1, 1, 1, 2]));
    assert_eq!(r.condensation, condense(&scm.b.support()));
}

#[test]
fn enumeration_mode_agrees_on_condensation() {
    let scm = generate_scm(&GeneratorConfig::new(8, 2, 0.5, Regime::Stable), 21).unwrap();
    let x = sample(&scm, 50_000, 2).unwrap();
    let truth = condense(&scm.b.support());
    for mode in [SelectionMode::Hungarian, SelectionMode::EnumerateFirstStable] {
        let cfg = RecoveryConfig { mode, ..RecoveryConfig::default() };
        let r = recover_condensation(&x, &cfg).unwrap();
        assert_eq!(r.condensation, truth, "{}", mode.as_str());
    }
}

#[test]
fn relabelling_variables_relabels_the_result() {
    let scm = generate_scm(&GeneratorConfig::new(7, 2, 0.5, Regime::Stable), 8).unwrap();
    let x = sample(&scm, 20_000, 4).unwrap();
    let perm = [3, 6, 0, 5, 1, 4, 2];
    let xp = DMatrix::from_fn(x.n(), 7, |s, j| x.values()[(s, perm[j])]);
    let xp = SampleMatrix::new(xp).unwrap();
    let cfg = RecoveryConfig::default();
    let est = fastica(&x, &cfg.ica).unwrap();
    let r = recover_from_unmixing(&est.w, &cfg).unwrap();
    let rp = recover_condensation(&xp, &cfg).unwrap();
    let relabelled: Vec<usize> = (0..7).map(|j| r.partition.label(perm[j])).collect();
    assert_eq!(rp.partition, Partition::from_labels(&relabelled));
    for i in 0..7 {
        for j in 0..7 {
            let a = r.b_hat.b[(perm[i], perm[j])] != 0.0;
            let b = rp.b_hat.b[(i, j)] != 0.0;
            assert_eq!(a, b, "edge {j}->{i}");
        }
    }
}
