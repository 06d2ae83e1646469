//! Dense linear algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::tarjan_scc;
use crate::recover::support_graph;
use crate::rng::rng_from;

const EIG_MAX_ITER_PER_DIM: usize = 200;
// Retried when Francis iterations stall, e.g. on pure cycles whose spectrum
// lies on a circle. Shifting moves the eigenvalues off that symmetric pattern.
const SHIFTS: [f64; 4] = [0.0, 0.5, -0.3, 1.1];
// Blocks whose eigenvalues share one modulus can stall for every real shift;
// a random orthogonal similarity breaks up their Hessenberg structure.
const ROTATIONS: u64 = 4;
const ROTATION_TAG: u64 = 0x726f_7461_7465;

/// Largest eigenvalue modulus.
///
/// The matrix is permuted to block-triangular form through the SCCs of its
/// support, so the spectrum is the union of the SCC blocks' spectra and
/// acyclic parts contribute exact zeros.
pub fn spectral_radius(b: &DMatrix<f64>) -> Result<f64> {
    let partition = tarjan_scc(&support_graph(b));
    let mut rho: f64 = 0.0;
    for block in partition.clusters() {
        if block.len() < 2 {
            rho = rho.max(b[(block[0], block[0])].abs());
            continue;
        }
        let sub = DMatrix::from_fn(block.len(), block.len(), |i, j| b[(block[i], block[j])]);
        rho = rho.max(dense_spectral_radius(&sub)?);
    }
    Ok(rho)
}

fn dense_spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    let scale = m.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }
    for attempt in 0..=ROTATIONS {
        let base = if attempt == 0 {
            m.clone()
        } else {
            let q = random_orthogonal(n, attempt);
            &q * m * q.transpose()
        };
        for shift in SHIFTS {
            let s = shift * scale;
            let shifted = &base + DMatrix::identity(n, n) * s;
            if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, EIG_MAX_ITER_PER_DIM * n.max(10)) {
                let origin = Complex::new(s, 0.0);
                return Ok(schur
                    .complex_eigenvalues()
                    .iter()
                    .map(|z| (z - origin).norm())
                    .fold(0.0, f64::max));
            }
        }
    }
    Err(Error::EigenNonConvergence)
}

fn random_orthogonal(n: usize, attempt: u64) -> DMatrix<f64> {
    let mut rng = rng_from(&[ROTATION_TAG, n as u64, attempt]);
    DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng)).qr().q()
}

/// Eigendecomposition of a symmetric matrix.
pub fn symmetric_eigen(m: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, EIG_MAX_ITER_PER_DIM * n.max(10))
        .ok_or(Error::EigenNonConvergence)?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// `(M M^T)^(-1/2) M`, the symmetric decorrelation used to keep ICA rows orthonormal.
pub fn symmetric_decorrelation(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = symmetric_eigen(m * m.transpose())?;
    let max = vals.amax();
    let inv_sqrt = vals.map(|v| 1.0 / v.max(max * 1e-14).max(f64::MIN_POSITIVE).sqrt());
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * inv_sqrt[j]);
    Ok(scaled * vecs.transpose() * m)
}

/// `det(I - B)`.
pub fn det_i_minus(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows();
    (DMatrix::identity(n, n) - b).determinant()
}

/// `(I - B)^{-1}`, rejecting `|det(I - B)| < tol`.
pub fn inverse_i_minus(b: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    let lu = (DMatrix::identity(n, n) - b).lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() < tol {
        return Err(Error::Singular { det });
    }
    lu.try_inverse().ok_or(Error::Singular { det })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(m: usize, w: f64) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(m, m);
        for i in 0..m {
            b[((i + 1) % m, i)] = w;
        }
        b
    }

    #[test]
    fn radius_of_zero_and_nilpotent() {
        assert_eq!(spectral_radius(&DMatrix::zeros(4, 4)).unwrap(), 0.0);
        let mut chain = DMatrix::zeros(5, 5);
        for i in 0..4 {
            chain[(i + 1, i)] = 3.0;
        }
        assert_eq!(spectral_radius(&chain).unwrap(), 0.0);
    }

    #[test]
    fn radius_of_two_cycle() {
        // eigenvalues +-sqrt(ab)
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert!((spectral_radius(&b).unwrap() - 0.5).abs() < 1e-12);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.2, 0.8, 0.0]);
        assert!((spectral_radius(&b).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn radius_of_pure_cycles_of_every_length() {
        for m in 2..40 {
            let r = spectral_radius(&cycle(m, 0.7)).unwrap();
            assert!((r - 0.7).abs() < 1e-10 * 0.7, "m = {m}: {r}");
        }
    }

    #[test]
    fn radius_of_block_with_equal_moduli() {
        // cycles 1->5->9->8->1 and 8->9->8; characteristic polynomial
        // x^4 - c2 x^2 - c4 with complex roots of modulus (-c4)^(1/4)
        let mut b = DMatrix::zeros(4, 4);
        b[(0, 2)] = -1.1756;
        b[(1, 0)] = 0.8074;
        b[(2, 3)] = 0.6750;
        b[(3, 1)] = 1.1118;
        b[(3, 2)] = 1.0728;
        let want = (1.1756f64 * 0.8074 * 0.6750 * 1.1118).powf(0.25);
        assert!((spectral_radius(&b).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn decorrelation_gives_orthogonal_rows() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.5, 1.0, 3.0, -1.0, 0.0, 1.0]);
        let w = symmetric_decorrelation(&m).unwrap();
        let g = &w * w.transpose();
        assert!((g - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn inverse_detects_singularity() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(inverse_i_minus(&b, 1e-10), Err(Error::Singular { .. })));
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, 0.0]);
        let a = inverse_i_minus(&b, 1e-10).unwrap();
        assert!((a[(0, 1)] - 0.5).abs() < 1e-15);
    }
}
