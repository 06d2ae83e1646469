//! Linear cyclic structural causal models `X = B X + e` with independent
//! non-Gaussian noise: random generation with a prescribed SCC structure,
//! observational sampling and cluster-level interventions.
//!
//! Row `i` of `B` is the structural equation of `X_i`; `B[i][j] != 0` is the
//! edge `X_j -> X_i`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{tarjan_scc, DirectedGraph};
use crate::linalg::{det_i_minus, inverse_i_minus, spectral_radius};
use crate::recover::support_graph;
use crate::rng::{purpose, rng_from, Rng};

/// Smallest admissible `|det(I - B)|`.
pub const DET_TOLERANCE: f64 = 1e-10;
const MAX_RETRIES: u64 = 100;

/// Weighted adjacency matrix with zero diagonal and invertible `I - B`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdjacency {
    matrix: DMatrix<f64>,
}

impl WeightedAdjacency {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entry in B".into()));
        }
        if let Some(i) = (0..matrix.nrows()).find(|&i| matrix[(i, i)] != 0.0) {
            return Err(Error::InvalidArgument(format!("B has nonzero diagonal at {i}")));
        }
        let det = det_i_minus(&matrix);
        if !det.is_finite() || det.abs() < DET_TOLERANCE {
            return Err(Error::Singular { det });
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn d(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Directed graph of the nonzero pattern (`B[i][j] != 0` gives `j -> i`).
    pub fn support(&self) -> DirectedGraph {
        support_graph(&self.matrix)
    }

    /// Mixing matrix `(I - B)^{-1}`.
    pub fn mixing(&self) -> Result<DMatrix<f64>> {
        inverse_i_minus(&self.matrix, DET_TOLERANCE)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        spectral_radius(&self.matrix)
    }

    /// Smallest absolute nonzero entry, or 0 for the empty graph.
    pub fn beta_min(&self) -> f64 {
        self.matrix
            .iter()
            .filter(|x| **x != 0.0)
            .map(|x| x.abs())
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    Laplace,
    ExponentialCentered,
}

/// Per-node noise law; `scale` is the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub family: NoiseFamily,
    pub scale: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Self {
            family: NoiseFamily::Laplace,
            scale: 1.0,
        }
    }
}

impl Noise {
    pub fn draw(&self, rng: &mut Rng) -> f64 {
        match self.family {
            // difference of two unit exponentials is Laplace(0, 1), variance 2
            NoiseFamily::Laplace => {
                let a: f64 = Exp1.sample(rng);
                let b: f64 = Exp1.sample(rng);
                self.scale * (a - b) / std::f64::consts::SQRT_2
            }
            NoiseFamily::ExponentialCentered => {
                let a: f64 = Exp1.sample(rng);
                self.scale * (a - 1.0)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        self.scale * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Stable,
    Unstable,
}

impl Regime {
    /// Spectral radius the generator rescales to.
    pub fn target_radius(self) -> f64 {
        match self {
            Regime::Stable => 0.9,
            Regime::Unstable => 1.5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Stable => "stable",
            Regime::Unstable => "unstable",
        }
    }

    pub fn code(self) -> u64 {
        match self {
            Regime::Stable => 0,
            Regime::Unstable => 1,
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stable" => Ok(Regime::Stable),
            "unstable" => Ok(Regime::Unstable),
            other => Err(Error::InvalidArgument(format!("unknown regime {other:?}"))),
        }
    }
}

/// A fully specified linear SCM.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmSpec {
    pub b: WeightedAdjacency,
    pub noise: Noise,
    pub regime: Regime,
    pub beta_min: f64,
    pub seed: u64,
}

impl ScmSpec {
    /// Wraps a hand-built matrix; the regime is read off its spectral radius.
    pub fn from_matrix(b: WeightedAdjacency, noise: Noise, seed: u64) -> Result<Self> {
        let regime = if b.spectral_radius()? < 1.0 {
            Regime::Stable
        } else {
            Regime::Unstable
        };
        let beta_min = b.beta_min();
        Ok(Self {
            b,
            noise,
            regime,
            beta_min,
            seed,
        })
    }

    pub fn d(&self) -> usize {
        self.b.d()
    }

    pub fn to_json(&self) -> ScmJson {
        ScmJson {
            d: self.d(),
            b: self.b.rows(),
            noise: self.noise,
            regime: self.regime,
            beta_min: self.beta_min,
            seed: self.seed,
        }
    }
}

/// On-disk form of an [`ScmSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmJson {
    pub d: usize,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub noise: Noise,
    pub regime: Regime,
    #[serde(rename = "betaMin")]
    pub beta_min: f64,
    pub seed: u64,
}

impl TryFrom<ScmJson> for ScmSpec {
    type Error = Error;

    fn try_from(j: ScmJson) -> Result<Self> {
        let b = WeightedAdjacency::from_rows(&j.b)?;
        if b.d() != j.d {
            return Err(Error::DimensionMismatch {
                expected: j.d,
                found: b.d(),
            });
        }
        if !(j.noise.scale > 0.0) {
            return Err(Error::InvalidArgument("noise scale must be positive".into()));
        }
        Ok(Self {
            beta_min: b.beta_min(),
            b,
            noise: j.noise,
            regime: j.regime,
            seed: j.seed,
        })
    }
}

/// Parameters of the random SCM generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub d: usize,
    pub kappa: usize,
    pub lambda: f64,
    pub weight_low: f64,
    pub weight_high: f64,
    pub regime: Regime,
    #[serde(default)]
    pub noise: Noise,
}

impl GeneratorConfig {
    /// The main-grid weight range `[0.5, 0.95]` with Laplace noise.
    pub fn new(d: usize, kappa: usize, lambda: f64, regime: Regime) -> Self {
        Self {
            d,
            kappa,
            lambda,
            weight_low: 0.5,
            weight_high: 0.95,
            regime,
            noise: Noise::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kappa < 1 || self.d < 2 * self.kappa {
            return Err(Error::Infeasible(format!(
                "need kappa >= 1 and d >= 2 kappa, got d = {}, kappa = {}",
                self.d, self.kappa
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!("lambda {} not in [0, 1]", self.lambda)));
        }
        if !(self.weight_low > 0.0 && self.weight_low <= self.weight_high) {
            return Err(Error::InvalidArgument(format!(
                "weight range [{}, {}] must satisfy 0 < low <= high",
                self.weight_low, self.weight_high
            )));
        }
        if !(self.noise.scale > 0.0) {
            return Err(Error::InvalidArgument("noise scale must be positive".into()));
        }
        Ok(())
    }
}

/// Random block structure: the non-trivial SCCs, then the singletons.
fn draw_clusters(cfg: &GeneratorConfig, rng: &mut Rng) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut nodes: Vec<usize> = (0..cfg.d).collect();
    nodes.shuffle(rng);
    let mut sccs: Vec<Vec<usize>> = nodes[..2 * cfg.kappa].chunks(2).map(<[usize]>::to_vec).collect();
    let mut singletons = Vec::new();
    // each remaining node stays a singleton with probability 1/2, otherwise
    // it joins a uniformly chosen SCC
    for &v in &nodes[2 * cfg.kappa..] {
        if rng.random_bool(0.5) {
            singletons.push(v);
        } else {
            let c = rng.random_range(0..cfg.kappa);
            sccs[c].push(v);
        }
    }
    (sccs, singletons)
}

fn draw_edges(cfg: &GeneratorConfig, rng: &mut Rng) -> BTreeSet<(usize, usize)> {
    let (mut sccs, singletons) = draw_clusters(cfg, rng);
    let mut edges = BTreeSet::new();
    for scc in sccs.iter_mut() {
        scc.shuffle(rng);
        let m = scc.len();
        for i in 0..m {
            edges.insert((scc[i], scc[(i + 1) % m]));
        }
        for &u in scc.iter() {
            for &v in scc.iter() {
                if u != v && !edges.contains(&(u, v)) && rng.random_bool(cfg.lambda) {
                    edges.insert((u, v));
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = sccs;
    clusters.extend(singletons.into_iter().map(|v| vec![v]));
    clusters.shuffle(rng);
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            for &u in &clusters[a] {
                for &v in &clusters[b] {
                    if rng.random_bool(cfg.lambda) {
                        edges.insert((u, v));
                    }
                }
            }
        }
    }
    edges
}

/// Draws a random SCM with exactly `kappa` non-trivial SCCs and rescales `B`
/// globally so that its spectral radius equals the regime target.
pub fn generate_scm(cfg: &GeneratorConfig, seed: u64) -> Result<ScmSpec> {
    cfg.validate()?;
    let mut rng = rng_from(&[seed, purpose::GRAPH]);
    let edges = draw_edges(cfg, &mut rng);
    let target = cfg.regime.target_radius();

    for attempt in 0..MAX_RETRIES {
        let mut wrng = rng_from(&[seed, purpose::WEIGHTS, attempt]);
        let mut b = DMatrix::zeros(cfg.d, cfg.d);
        for &(src, dst) in &edges {
            let w = wrng.random_range(cfg.weight_low..=cfg.weight_high);
            b[(dst, src)] = if wrng.random_bool(0.5) { w } else { -w };
        }
        let rho = spectral_radius(&b)?;
        if !(rho > 1e-8) {
            continue;
        }
        b *= target / rho;
        let Ok(adj) = WeightedAdjacency::new(b) else {
            continue;
        };
        let nontrivial = tarjan_scc(&adj.support())
            .clusters()
            .iter()
            .filter(|c| c.len() >= 2)
            .count();
        if nontrivial != cfg.kappa {
            return Err(Error::Infeasible(format!(
                "generated support has {nontrivial} non-trivial SCCs, expected {}",
                cfg.kappa
            )));
        }
        return Ok(ScmSpec {
            beta_min: adj.beta_min(),
            b: adj,
            noise: cfg.noise,
            regime: cfg.regime,
            seed,
        });
    }
    Err(Error::Singular { det: 0.0 })
}

/// Observations, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample value".into()));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn column_means(&self) -> DVector<f64> {
        DVector::from_fn(self.d(), |j, _| self.values.column(j).mean())
    }

    /// Sample covariance with divisor `n`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.column_means();
        let mut centered = self.values.clone();
        for (j, mut col) in centered.column_iter_mut().enumerate() {
            col.add_scalar_mut(-mean[j]);
        }
        centered.transpose() * &centered / self.n() as f64
    }
}

fn noise_matrix(scm: &ScmSpec, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from(&[seed, purpose::NOISE]);
    let d = scm.d();
    let mut e = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            e[(i, j)] = scm.noise.draw(&mut rng);
        }
    }
    e
}

/// `n` observational draws `X = (I - B)^{-1} e`.
pub fn sample(scm: &ScmSpec, n: usize, seed: u64) -> Result<SampleMatrix> {
    soft_cluster_intervention(scm, &vec![0.0; scm.d()], n, seed)
}

/// `do(X_pi = c)` for a node set `pi` that is a union of SCCs of the support.
/// `c[k]` is the value assigned to node `pi[k]`.
pub fn hard_cluster_intervention(
    scm: &ScmSpec,
    pi: &[usize],
    c: &[f64],
    n: usize,
    seed: u64,
) -> Result<SampleMatrix> {
    let d = scm.d();
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if pi.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: pi.len(),
            found: c.len(),
        });
    }
    let mut in_pi = vec![false; d];
    for &v in pi {
        if v >= d || in_pi[v] {
            return Err(Error::InvalidArgument(format!("bad intervention node {v}")));
        }
        in_pi[v] = true;
    }
    let sccs = tarjan_scc(&scm.b.support());
    for cluster in sccs.clusters() {
        let hit = cluster.iter().filter(|&&v| in_pi[v]).count();
        if hit != 0 && hit != cluster.len() {
            return Err(Error::NotUnionOfSccs);
        }
    }

    let rest: Vec<usize> = (0..d).filter(|&v| !in_pi[v]).collect();
    let b = scm.b.matrix();
    let e = noise_matrix(scm, n, seed);
    let mut x = DMatrix::zeros(n, d);
    for (k, &v) in pi.iter().enumerate() {
        x.column_mut(v).fill(c[k]);
    }
    if !rest.is_empty() {
        let r = rest.len();
        let b_rr = DMatrix::from_fn(r, r, |i, j| b[(rest[i], rest[j])]);
        let inv = inverse_i_minus(&b_rr, DET_TOLERANCE)?;
        let shift = DVector::from_fn(r, |i, _| {
            pi.iter().zip(c).map(|(&v, &cv)| b[(rest[i], v)] * cv).sum::<f64>()
        });
        let mut rhs = DMatrix::from_fn(n, r, |s, i| e[(s, rest[i])] + shift[i]);
        rhs = rhs * inv.transpose();
        for (i, &v) in rest.iter().enumerate() {
            x.set_column(v, &rhs.column(i));
        }
    }
    SampleMatrix::new(x)
}

/// Shift intervention `X = (I - B)^{-1} (e + delta)`.
pub fn soft_cluster_intervention(
    scm: &ScmSpec,
    delta: &[f64],
    n: usize,
    seed: u64,
) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if delta.len() != scm.d() {
        return Err(Error::DimensionMismatch {
            expected: scm.d(),
            found: delta.len(),
        });
    }
    if delta.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite shift".into()));
    }
    let a = scm.b.mixing()?;
    let mut e = noise_matrix(scm, n, seed);
    for (j, mut col) in e.column_iter_mut().enumerate() {
        col.add_scalar_mut(delta[j]);
    }
    SampleMatrix::new(e * a.transpose())
}
