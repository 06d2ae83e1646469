//! Symmetric (parallel) FastICA.
//!
//! Data are centered and whitened through the eigendecomposition of the sample
//! covariance, then all `d` unmixing rows are updated together with the
//! fixed-point rule
//!
//! ```text
//! W <- E[g(W z) z^T] - diag(E[g'(W z)]) W,    W <- (W W^T)^(-1/2) W
//! ```
//!
//! until `1 - min_i |<w_i_new, w_i_old>|` drops below the tolerance.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_decorrelation, symmetric_eigen};
use crate::rng::{purpose, rng_from};
use crate::scm::SampleMatrix;

/// `E[log cosh(v)]` for a standard normal `v`.
pub const GAUSSIAN_LOGCOSH: f64 = 0.374_567_207_491_974_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    /// `G(u) = log cosh u`, `g = tanh`.
    Logcosh,
    /// `G(u) = u^4 / 4`, `g = u^3`.
    Cube,
}

impl std::str::FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logcosh" => Ok(Nonlinearity::Logcosh),
            "cube" => Ok(Nonlinearity::Cube),
            other => Err(Error::InvalidArgument(format!("unknown nonlinearity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct IcaOptions {
    pub nonlinearity: Nonlinearity,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for IcaOptions {
    fn default() -> Self {
        Self {
            nonlinearity: Nonlinearity::Logcosh,
            tolerance: 1e-6,
            max_iterations: 500,
            restarts: 3,
            seed: 0,
        }
    }
}

impl IcaOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("ICA tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("ICA needs at least one iteration".into()));
        }
        Ok(())
    }
}

/// Result of [`fastica`].
#[derive(Debug, Clone, PartialEq)]
pub struct DemixingEstimate {
    /// Unmixing matrix acting on raw observations (`W_white * K`).
    pub w: DMatrix<f64>,
    /// Orthonormal unmixing matrix in whitened coordinates.
    pub w_white: DMatrix<f64>,
    /// Whitening matrix `K`.
    pub whitening: DMatrix<f64>,
    pub mean: DVector<f64>,
    /// Fixed-point iterations used by the selected restart.
    pub iterations: usize,
    pub converged: bool,
    /// Non-Gaussianity of the recovered sources (larger is better).
    pub objective: f64,
    pub restart: usize,
}

/// Whitened data in `d x n` layout, plus the whitening matrix and mean.
struct Whitened {
    z: DMatrix<f64>,
    k: DMatrix<f64>,
    mean: DVector<f64>,
}

fn whiten(x: &SampleMatrix) -> Result<Whitened> {
    let (n, d) = (x.n(), x.d());
    if n <= d {
        return Err(Error::TooFewSamples { n, d });
    }
    let mean = x.column_means();
    let mut xt = x.values().transpose();
    for mut col in xt.column_iter_mut() {
        col -= &mean;
    }
    let cov = &xt * xt.transpose() / n as f64;
    let (vals, vecs) = symmetric_eigen(cov)?;
    let max = vals.max();
    let min = vals.min();
    if !(max > 0.0) || min < 1e-10 * max {
        return Err(Error::RankDeficient {
            ratio: if max > 0.0 { min / max } else { 0.0 },
        });
    }
    // K = diag(vals)^(-1/2) E^T
    let k = DMatrix::from_fn(d, d, |i, j| vecs[(j, i)] / vals[i].sqrt());
    let z = &k * xt;
    Ok(Whitened { z, k, mean })
}

/// Centers and whitens `X`: `Z = (X - mean) K^T` has identity sample covariance.
pub fn center_whiten(x: &SampleMatrix) -> Result<(SampleMatrix, DMatrix<f64>, DVector<f64>)> {
    let w = whiten(x)?;
    Ok((SampleMatrix::new(w.z.transpose())?, w.k, w.mean))
}

fn log_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Sum over components of the squared deviation of `E[G(y)]` from its Gaussian value.
fn negentropy_proxy(y: &DMatrix<f64>, nonlinearity: Nonlinearity) -> f64 {
    let n = y.ncols() as f64;
    y.row_iter()
        .map(|row| match nonlinearity {
            Nonlinearity::Logcosh => {
                let m = row.iter().map(|&u| log_cosh(u)).sum::<f64>() / n;
                (m - GAUSSIAN_LOGCOSH).powi(2)
            }
            Nonlinearity::Cube => {
                let m = row.iter().map(|&u| u.powi(4)).sum::<f64>() / n;
                (m - 3.0).powi(2)
            }
        })
        .sum()
}

struct Run {
    w: DMatrix<f64>,
    iterations: usize,
    converged: bool,
}

fn fixed_point(
    z: &DMatrix<f64>,
    zt: &DMatrix<f64>,
    w0: DMatrix<f64>,
    opts: &IcaOptions,
) -> Result<Run> {
    let d = z.nrows();
    let n = z.ncols() as f64;
    let mut w = symmetric_decorrelation(&w0)?;
    let mut y = DMatrix::zeros(d, z.ncols());
    let mut lhs = DMatrix::zeros(d, d);
    for it in 1..=opts.max_iterations {
        w.mul_to(z, &mut y);
        let mut gprime = vec![0.0; d];
        match opts.nonlinearity {
            Nonlinearity::Logcosh => {
                for (idx, v) in y.iter_mut().enumerate() {
                    let t = v.tanh();
                    *v = t;
                    gprime[idx % d] += 1.0 - t * t;
                }
            }
            Nonlinearity::Cube => {
                for (idx, v) in y.iter_mut().enumerate() {
                    let u = *v;
                    *v = u * u * u;
                    gprime[idx % d] += 3.0 * u * u;
                }
            }
        }
        y.mul_to(zt, &mut lhs);
        lhs /= n;
        for i in 0..d {
            let gi = gprime[i] / n;
            for j in 0..d {
                lhs[(i, j)] -= gi * w[(i, j)];
            }
        }
        let w_new = symmetric_decorrelation(&lhs)?;
        let lim = w_new
            .row_iter()
            .zip(w.row_iter())
            .map(|(a, b)| 1.0 - a.dot(&b).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if lim < opts.tolerance {
            return Ok(Run {
                w,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(Run {
        w,
        iterations: opts.max_iterations,
        converged: false,
    })
}

/// Estimates the unmixing matrix of `X` (rows = sources, up to permutation,
/// sign and scale). Non-convergence is reported through `converged`, not an error.
pub fn fastica(x: &SampleMatrix, opts: &IcaOptions) -> Result<DemixingEstimate> {
    opts.validate()?;
    let white = whiten(x)?;
    let d = x.d();
    let zt = white.z.transpose();
    let mut best: Option<(f64, usize, Run)> = None;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = rng_from(&[opts.seed, purpose::ICA, restart as u64]);
        let w0 = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let run = fixed_point(&white.z, &zt, w0, opts)?;
        let objective = negentropy_proxy(&(&run.w * &white.z), opts.nonlinearity);
        // ties keep the earlier restart
        if best.as_ref().is_none_or(|(obj, _, _)| objective > *obj) {
            best = Some((objective, restart, run));
        }
    }
    let (objective, restart, run) = best.expect("at least one restart");
    Ok(DemixingEstimate {
        w: &run.w * &white.k,
        w_white: run.w,
        whitening: white.k,
        mean: white.mean,
        iterations: run.iterations,
        converged: run.converged,
        objective,
        restart,
    })
}
