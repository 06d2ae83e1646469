//! Experiment driver: the main grid, the threshold sweep and the
//! sample-complexity study.
//!
//! Work units are independent and seeded from their own identifiers, so they
//! run in any order on a rayon pool. Finished records are appended to the
//! results CSV as they complete; at the end the file is rewritten sorted by
//! record key. Rows already present are skipped on a rerun, which makes an
//! interrupted run resumable and a completed rerun a no-op.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ica::{fastica, IcaOptions};
use crate::io::{csv_error, write_json};
use crate::metrics::MetricsReport;
use crate::recover::{recover_condensation, recover_from_unmixing, RecoveryConfig, SelectionMode, ENUMERATION_LIMIT};
use crate::rng::{derive_seed, f64_component, purpose};
use crate::scm::{generate_scm, sample, GeneratorConfig, Noise, Regime, ScmJson, ScmSpec};

pub const CI_LEVEL: f64 = 0.95;
pub const CI_METHOD: &str =
    "normal approximation across seeds: mean +/- 1.96 * sd / sqrt(S), sd with divisor S - 1";
const Z95: f64 = 1.96;

/// Default sample sizes of the main grid.
pub const DEFAULT_SAMPLE_SIZES: [usize; 6] = [50, 200, 1000, 5000, 20_000, 100_000];

/// One row of the results CSV. Metric columns are empty when the unit failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub d: usize,
    pub kappa: usize,
    pub lambda: f64,
    pub regime: Regime,
    pub n: usize,
    pub seed: u64,
    pub tau: f64,
    pub ari: Option<f64>,
    pub cluster_f1: Option<f64>,
    pub variable_f1: Option<f64>,
    pub hamming: Option<usize>,
    pub exact_recovery: Option<bool>,
    pub pred_clusters: Option<usize>,
    pub fit_ms: Option<f64>,
    pub ica_iters: Option<usize>,
    pub error: Option<String>,
}

/// Sort and uniqueness key of a record. `lambda` and `tau` are non-negative,
/// so their bit patterns order like the numbers.
pub type RecordKey = (usize, usize, u64, u64, usize, u64, u64);
type CellKey = (usize, usize, u64, u64, usize, u64);

/// Seed of the SCM drawn for one grid or sweep cell and replicate.
pub fn scm_seed(d: usize, kappa: usize, lambda: f64, regime: Regime, seed: u64) -> u64 {
    derive_seed(&[seed, d as u64, kappa as u64, f64_component(lambda), regime.code()])
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    d: usize,
    kappa: usize,
    lambda: f64,
    regime: Regime,
}

impl Cell {
    fn key(&self, n: usize, seed: u64, tau: f64) -> RecordKey {
        (self.d, self.kappa, self.lambda.to_bits(), self.regime.code(), n, seed, tau.to_bits())
    }

    fn scm_seed(&self, seed: u64) -> u64 {
        scm_seed(self.d, self.kappa, self.lambda, self.regime, seed)
    }

    fn record(&self, n: usize, seed: u64, tau: f64) -> ExperimentRecord {
        ExperimentRecord {
            d: self.d,
            kappa: self.kappa,
            lambda: self.lambda,
            regime: self.regime,
            n,
            seed,
            tau,
            ari: None,
            cluster_f1: None,
            variable_f1: None,
            hamming: None,
            exact_recovery: None,
            pred_clusters: None,
            fit_ms: None,
            ica_iters: None,
            error: None,
        }
    }
}

impl ExperimentRecord {
    pub fn key(&self) -> RecordKey {
        (
            self.d,
            self.kappa,
            self.lambda.to_bits(),
            self.regime.code(),
            self.n,
            self.seed,
            self.tau.to_bits(),
        )
    }

    fn cell_key(&self) -> CellKey {
        (self.d, self.kappa, self.lambda.to_bits(), self.regime.code(), self.n, self.tau.to_bits())
    }

    fn fill(&mut self, m: &MetricsReport, fit_ms: f64, ica_iters: usize) {
        self.ari = Some(m.ari);
        self.cluster_f1 = Some(m.cluster_dag_f1);
        self.variable_f1 = Some(m.variable_f1);
        self.hamming = Some(m.hamming_support);
        self.exact_recovery = Some(m.exact_support_recovery());
        self.pred_clusters = Some(m.predicted_partition_size);
        self.fit_ms = Some(fit_ms);
        self.ica_iters = Some(ica_iters);
    }

    fn failed(mut self, e: &Error) -> Self {
        self.error = Some(e.to_string());
        self
    }
}

fn default_mode(d: usize) -> SelectionMode {
    if d <= ENUMERATION_LIMIT {
        SelectionMode::EnumerateFirstStable
    } else {
        SelectionMode::Hungarian
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub kappas: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub sample_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub tau: f64,
    pub eta: f64,
    pub ica_opts: IcaOptions,
    /// Defaults to enumeration for `d <= 12` and the assignment solver above.
    pub mode: Option<SelectionMode>,
    pub noise: Noise,
    pub weight_low: f64,
    pub weight_high: f64,
    pub max_candidates: usize,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        let rc = RecoveryConfig::default();
        Self {
            d: 10,
            kappas: vec![3, 4, 5],
            lambdas: vec![0.3, 0.5, 0.8],
            regimes: vec![Regime::Stable, Regime::Unstable],
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            seeds: (0..10).collect(),
            tau: rc.tau,
            eta: rc.eta,
            ica_opts: rc.ica,
            mode: None,
            noise: Noise::default(),
            weight_low: 0.5,
            weight_high: 0.95,
            max_candidates: rc.max_candidates,
            threads: None,
        }
    }
}

fn check_nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} must not be empty")));
    }
    Ok(())
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    check_nonempty("sampleSizes", sizes)?;
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("sampleSizes must be strictly increasing".into()));
    }
    Ok(())
}

fn check_unique_seeds(seeds: &[u64]) -> Result<()> {
    check_nonempty("seeds", seeds)?;
    if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
        return Err(Error::InvalidArgument("seeds must be distinct".into()));
    }
    Ok(())
}

fn check_rate(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} = {x} must be a finite value >= 0")));
    }
    Ok(())
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        check_nonempty("kappas", &self.kappas)?;
        check_nonempty("lambdas", &self.lambdas)?;
        check_nonempty("regimes", &self.regimes)?;
        check_sizes(&self.sample_sizes)?;
        check_unique_seeds(&self.seeds)?;
        for &l in &self.lambdas {
            check_rate("lambda", l)?;
        }
        check_rate("tau", self.tau)?;
        self.ica_opts.validate()
    }

    fn recovery(&self) -> RecoveryConfig {
        RecoveryConfig {
            tau: self.tau,
            eta: self.eta,
            ica: self.ica_opts,
            mode: self.mode.unwrap_or(default_mode(self.d)),
            max_candidates: self.max_candidates,
        }
    }

    fn generator(&self, cell: &Cell) -> GeneratorConfig {
        GeneratorConfig {
            weight_low: self.weight_low,
            weight_high: self.weight_high,
            noise: self.noise,
            ..GeneratorConfig::new(cell.d, cell.kappa, cell.lambda, cell.regime)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepConfig {
    pub d: usize,
    pub kappa: usize,
    pub lambda: f64,
    pub regime: Regime,
    pub taus: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub eta: f64,
    pub ica_opts: IcaOptions,
    /// Defaults to the assignment solver.
    pub mode: Option<SelectionMode>,
    pub noise: Noise,
    pub weight_low: f64,
    pub weight_high: f64,
    pub max_candidates: usize,
    pub threads: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let g = GridConfig::default();
        Self {
            d: 10,
            kappa: 4,
            lambda: 0.5,
            regime: Regime::Stable,
            taus: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
            sample_sizes: vec![1000, 5000, 20_000],
            seeds: g.seeds,
            eta: g.eta,
            ica_opts: g.ica_opts,
            mode: None,
            noise: g.noise,
            weight_low: g.weight_low,
            weight_high: g.weight_high,
            max_candidates: g.max_candidates,
            threads: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_nonempty("taus", &self.taus)?;
        for &t in &self.taus {
            check_rate("tau", t)?;
        }
        check_rate("lambda", self.lambda)?;
        check_sizes(&self.sample_sizes)?;
        check_unique_seeds(&self.seeds)?;
        self.ica_opts.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct SampleComplexityConfig {
    pub d: usize,
    pub kappa: usize,
    pub lambda: f64,
    pub regime: Regime,
    /// Selects the one ground-truth SCM.
    pub scm_seed: u64,
    /// Replicates per sample size, numbered `0..seeds`.
    pub seeds: usize,
    pub sample_sizes: Vec<usize>,
    /// Inclusive range of `n` used for the log-log fits.
    pub window: [usize; 2],
    /// Defaults to half the smallest true edge weight.
    pub tau: Option<f64>,
    pub eta: f64,
    pub ica_opts: IcaOptions,
    pub mode: Option<SelectionMode>,
    pub noise: Noise,
    pub weight_low: f64,
    pub weight_high: f64,
    pub max_candidates: usize,
    pub threads: Option<usize>,
}

impl Default for SampleComplexityConfig {
    fn default() -> Self {
        let g = GridConfig::default();
        Self {
            d: 10,
            kappa: 4,
            lambda: 0.5,
            regime: Regime::Stable,
            scm_seed: 0,
            seeds: 300,
            sample_sizes: vec![100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000],
            window: [200, 1000],
            tau: None,
            eta: g.eta,
            ica_opts: g.ica_opts,
            mode: None,
            noise: g.noise,
            weight_low: g.weight_low,
            weight_high: g.weight_high,
            max_candidates: g.max_candidates,
            threads: None,
        }
    }
}

impl SampleComplexityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::InvalidArgument("seeds must be positive".into()));
        }
        check_sizes(&self.sample_sizes)?;
        check_rate("lambda", self.lambda)?;
        if let Some(t) = self.tau {
            check_rate("tau", t)?;
        }
        if self.window[0] > self.window[1] {
            return Err(Error::InvalidArgument("window must be [low, high]".into()));
        }
        self.ica_opts.validate()
    }
}

/// Summary statistics of one metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn stat(values: &[f64]) -> Option<Stat> {
    let count = values.len();
    if count == 0 {
        return None;
    }
    let s = count as f64;
    let mean = values.iter().sum::<f64>() / s;
    let sd = if count > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if count % 2 == 1 {
        sorted[count / 2]
    } else {
        0.5 * (sorted[count / 2 - 1] + sorted[count / 2])
    };
    let half = Z95 * sd / s.sqrt();
    Some(Stat {
        count,
        mean,
        median,
        sd,
        ci_low: mean - half,
        ci_high: mean + half,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellSummary {
    pub d: usize,
    pub kappa: usize,
    pub lambda: f64,
    pub regime: Regime,
    pub n: usize,
    pub tau: f64,
    pub records: usize,
    pub errors: usize,
    pub ari: Option<Stat>,
    pub cluster_f1: Option<Stat>,
    pub variable_f1: Option<Stat>,
    pub hamming: Option<Stat>,
    pub exact_recovery: Option<Stat>,
    pub pred_clusters: Option<Stat>,
    pub fit_ms: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub ci_method: String,
    pub ci_level: f64,
    pub cells: Vec<CellSummary>,
}

/// Aggregates records per cell (every key field except the seed).
pub fn summarize(records: &[ExperimentRecord]) -> Summary {
    let mut groups: BTreeMap<CellKey, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.cell_key()).or_default().push(r);
    }
    let cells = groups
        .into_values()
        .map(|mut rs| {
            rs.sort_by_key(|r| r.key());
            let first = rs[0];
            let ok: Vec<&ExperimentRecord> = rs.iter().copied().filter(|r| r.error.is_none()).collect();
            let col = |f: &dyn Fn(&ExperimentRecord) -> Option<f64>| -> Option<Stat> {
                stat(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            CellSummary {
                d: first.d,
                kappa: first.kappa,
                lambda: first.lambda,
                regime: first.regime,
                n: first.n,
                tau: first.tau,
                records: rs.len(),
                errors: rs.len() - ok.len(),
                ari: col(&|r| r.ari),
                cluster_f1: col(&|r| r.cluster_f1),
                variable_f1: col(&|r| r.variable_f1),
                hamming: col(&|r| r.hamming.map(|h| h as f64)),
                exact_recovery: col(&|r| r.exact_recovery.map(|e| f64::from(u8::from(e)))),
                pred_clusters: col(&|r| r.pred_clusters.map(|k| k as f64)),
                fit_ms: col(&|r| r.fit_ms),
            }
        })
        .collect();
    Summary {
        ci_method: CI_METHOD.into(),
        ci_level: CI_LEVEL,
        cells,
    }
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().map(|rec| rec.map_err(csv_error)).collect()
}

/// Rows of an existing (possibly truncated) results file; unreadable rows are dropped.
fn load_existing(path: &Path) -> Result<Vec<ExperimentRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(csv_error)?;
    Ok(r.deserialize().filter_map(|rec| rec.ok()).collect())
}

fn write_sorted(path: &Path, records: &mut Vec<ExperimentRecord>) -> Result<()> {
    records.sort_by_key(|r| r.key());
    records.dedup_by_key(|r| r.key());
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp).map_err(csv_error)?;
        for r in records.iter() {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialized appender shared by the workers.
struct Appender {
    writer: Mutex<csv::Writer<File>>,
}

impl Appender {
    fn open(path: &Path, existing: &[ExperimentRecord]) -> Result<Self> {
        // normalize the file first so a truncated last line cannot corrupt appends
        let mut rows = existing.to_vec();
        write_sorted(path, &mut rows)?;
        let has_rows = !rows.is_empty();
        let file = OpenOptions::new().append(true).open(path)?;
        // an empty record list leaves an empty file; the first append writes the header
        let writer = csv::WriterBuilder::new().has_headers(!has_rows).from_writer(file);
        Ok(Self {
            writer: Mutex::new(writer),
        })
    }

    fn append(&self, records: &[ExperimentRecord]) -> Result<()> {
        let mut w = self.writer.lock().expect("appender poisoned");
        for r in records {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the units whose keys are not all present in `out`, then rewrites
/// `out` sorted by key.
fn execute<U, W>(
    units: Vec<(Vec<RecordKey>, U)>,
    out: &Path,
    threads: Option<usize>,
    work: W,
) -> Result<Vec<ExperimentRecord>>
where
    U: Send + Sync,
    W: Fn(&U) -> Vec<ExperimentRecord> + Send + Sync,
{
    let existing = load_existing(out)?;
    let done: BTreeSet<RecordKey> = existing.iter().map(ExperimentRecord::key).collect();
    let pending: Vec<&U> = units
        .iter()
        .filter(|(keys, _)| !keys.iter().all(|k| done.contains(k)))
        .map(|(_, u)| u)
        .collect();
    let appender = Appender::open(out, &existing)?;
    let produced: Vec<ExperimentRecord> = with_pool(threads, || {
        pending
            .par_iter()
            .map(|u| {
                let records: Vec<ExperimentRecord> =
                    work(u).into_iter().filter(|r| !done.contains(&r.key())).collect();
                appender.append(&records)?;
                Ok(records)
            })
            .collect::<Result<Vec<_>>>()
    })??
    .into_iter()
    .flatten()
    .collect();
    drop(appender);
    let mut all = existing;
    all.extend(produced);
    write_sorted(out, &mut all)?;
    Ok(all)
}

/// Records and their aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: Summary,
}

fn grid_unit(cfg: &GridConfig, cell: &Cell, n: usize, seed: u64) -> ExperimentRecord {
    let record = cell.record(n, seed, cfg.tau);
    let scm_seed = cell.scm_seed(seed);
    let run = || -> Result<(MetricsReport, f64, usize)> {
        let scm = generate_scm(&cfg.generator(cell), scm_seed)?;
        let x = sample(&scm, n, derive_seed(&[scm_seed, n as u64]))?;
        let mut rc = cfg.recovery();
        rc.ica.seed = derive_seed(&[scm_seed, n as u64, purpose::ICA]);
        let result = recover_condensation(&x, &rc)?;
        let m = MetricsReport::evaluate(&result.b_hat.b, scm.b.matrix())?;
        Ok((m, result.timings.total_ms, result.ica_iterations))
    };
    match run() {
        Ok((m, fit_ms, iters)) => {
            let mut r = record;
            r.fill(&m, fit_ms, iters);
            r
        }
        Err(e) => record.failed(&e),
    }
}

/// Every (kappa, lambda, regime, n, seed) combination of the grid. The SCM
/// depends on the cell and seed only, so all sample sizes of one seed share it.
pub fn run_grid(cfg: &GridConfig, out: &Path, summary_path: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    let mut units = Vec::new();
    for &kappa in &cfg.kappas {
        for &lambda in &cfg.lambdas {
            for &regime in &cfg.regimes {
                let cell = Cell {
                    d: cfg.d,
                    kappa,
                    lambda,
                    regime,
                };
                for &n in &cfg.sample_sizes {
                    for &seed in &cfg.seeds {
                        units.push((vec![cell.key(n, seed, cfg.tau)], (cell, n, seed)));
                    }
                }
            }
        }
    }
    let records = execute(units, out, cfg.threads, |(cell, n, seed)| {
        vec![grid_unit(cfg, cell, *n, *seed)]
    })?;
    let summary = summarize(&records);
    write_json(summary_path, &summary)?;
    Ok(RunOutput { records, summary })
}

fn sweep_unit(cfg: &SweepConfig, cell: &Cell, n: usize, seed: u64) -> Vec<ExperimentRecord> {
    let scm_seed = cell.scm_seed(seed);
    let generator = GeneratorConfig {
        weight_low: cfg.weight_low,
        weight_high: cfg.weight_high,
        noise: cfg.noise,
        ..GeneratorConfig::new(cell.d, cell.kappa, cell.lambda, cell.regime)
    };
    let prepared = (|| -> Result<_> {
        let scm = generate_scm(&generator, scm_seed)?;
        let x = sample(&scm, n, derive_seed(&[scm_seed, n as u64]))?;
        let ica = IcaOptions {
            seed: derive_seed(&[scm_seed, n as u64, purpose::ICA]),
            ..cfg.ica_opts
        };
        let start = std::time::Instant::now();
        let estimate = fastica(&x, &ica)?;
        Ok((scm, estimate, start.elapsed().as_secs_f64() * 1e3))
    })();
    cfg.taus
        .iter()
        .map(|&tau| {
            let record = cell.record(n, seed, tau);
            let (scm, estimate, ica_ms) = match &prepared {
                Ok(p) => p,
                Err(e) => return record.failed(e),
            };
            let rc = RecoveryConfig {
                tau,
                eta: cfg.eta,
                ica: cfg.ica_opts,
                mode: cfg.mode.unwrap_or(SelectionMode::Hungarian),
                max_candidates: cfg.max_candidates,
            };
            let scored = recover_from_unmixing(&estimate.w, &rc).and_then(|res| {
                let m = MetricsReport::evaluate(&res.b_hat.b, scm.b.matrix())?;
                Ok((m, res.timings.total_ms))
            });
            match scored {
                Ok((m, ms)) => {
                    let mut r = record;
                    r.fill(&m, ica_ms + ms, estimate.iterations);
                    r
                }
                Err(e) => record.failed(&e),
            }
        })
        .collect()
}

/// Threshold sensitivity: one ICA fit per (n, seed), thresholded at every tau.
pub fn run_threshold_sweep(cfg: &SweepConfig, out: &Path, summary_path: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    let cell = Cell {
        d: cfg.d,
        kappa: cfg.kappa,
        lambda: cfg.lambda,
        regime: cfg.regime,
    };
    let mut units = Vec::new();
    for &n in &cfg.sample_sizes {
        for &seed in &cfg.seeds {
            let keys = cfg.taus.iter().map(|&t| cell.key(n, seed, t)).collect();
            units.push((keys, (n, seed)));
        }
    }
    let records = execute(units, out, cfg.threads, |(n, seed)| sweep_unit(cfg, &cell, *n, *seed))?;
    let summary = summarize(&records);
    write_json(summary_path, &summary)?;
    Ok(RunOutput { records, summary })
}

/// Least-squares slope of `y` on `x`; needs two distinct `x`.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// A log-log fit over the cells of the transition window with a nonzero error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogLogFit {
    pub slope: Option<f64>,
    pub sample_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleComplexityPoint {
    pub n: usize,
    pub seeds: usize,
    pub errors: usize,
    pub mean_hamming: Option<f64>,
    pub recovery_rate: Option<f64>,
    pub recovery_ci: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleComplexitySummary {
    pub scm: ScmJson,
    pub beta_min: f64,
    pub tau: f64,
    pub window: [usize; 2],
    pub points: Vec<SampleComplexityPoint>,
    pub hamming_fit: LogLogFit,
    pub exact_error_fit: LogLogFit,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleComplexityOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: SampleComplexitySummary,
}

fn loglog(points: &[SampleComplexityPoint], window: [usize; 2], value: impl Fn(&SampleComplexityPoint) -> Option<f64>) -> LogLogFit {
    let used: Vec<(usize, f64)> = points
        .iter()
        .filter(|p| p.n >= window[0] && p.n <= window[1])
        .filter_map(|p| value(p).filter(|&v| v > 0.0).map(|v| (p.n, v)))
        .collect();
    let xy: Vec<(f64, f64)> = used.iter().map(|&(n, v)| ((n as f64).ln(), v.ln())).collect();
    LogLogFit {
        slope: ols_slope(&xy),
        sample_sizes: used.iter().map(|&(n, _)| n).collect(),
    }
}

/// Per-n Hamming and exact-recovery aggregates plus log-log fits.
pub fn summarize_sample_complexity(
    scm: &ScmSpec,
    tau: f64,
    window: [usize; 2],
    records: &[ExperimentRecord],
) -> SampleComplexitySummary {
    let summary = summarize(records);
    let points: Vec<SampleComplexityPoint> = summary
        .cells
        .iter()
        .map(|c| SampleComplexityPoint {
            n: c.n,
            seeds: c.records,
            errors: c.errors,
            mean_hamming: c.hamming.map(|s| s.mean),
            recovery_rate: c.exact_recovery.map(|s| s.mean),
            recovery_ci: c.exact_recovery.map(|s| [s.ci_low, s.ci_high]),
        })
        .collect();
    SampleComplexitySummary {
        scm: scm.to_json(),
        beta_min: scm.beta_min,
        tau,
        window,
        hamming_fit: loglog(&points, window, |p| p.mean_hamming),
        exact_error_fit: loglog(&points, window, |p| p.recovery_rate.map(|r| 1.0 - r)),
        points,
        summary,
    }
}

/// One fixed SCM, many replicates per sample size, thresholded at
/// `beta_min / 2` unless configured otherwise.
pub fn run_sample_complexity(
    cfg: &SampleComplexityConfig,
    out: &Path,
    summary_path: &Path,
) -> Result<SampleComplexityOutput> {
    cfg.validate()?;
    let cell = Cell {
        d: cfg.d,
        kappa: cfg.kappa,
        lambda: cfg.lambda,
        regime: cfg.regime,
    };
    let generator = GeneratorConfig {
        weight_low: cfg.weight_low,
        weight_high: cfg.weight_high,
        noise: cfg.noise,
        ..GeneratorConfig::new(cfg.d, cfg.kappa, cfg.lambda, cfg.regime)
    };
    let scm_seed = cell.scm_seed(cfg.scm_seed);
    let scm = generate_scm(&generator, scm_seed)?;
    let tau = cfg.tau.unwrap_or(scm.beta_min / 2.0);
    let rc = RecoveryConfig {
        tau,
        eta: cfg.eta,
        ica: cfg.ica_opts,
        mode: cfg.mode.unwrap_or(default_mode(cfg.d)),
        max_candidates: cfg.max_candidates,
    };
    let mut units = Vec::new();
    for &n in &cfg.sample_sizes {
        for seed in 0..cfg.seeds as u64 {
            units.push((vec![cell.key(n, seed, tau)], (n, seed)));
        }
    }
    let records = execute(units, out, cfg.threads, |&(n, seed)| {
        let record = cell.record(n, seed, tau);
        let sample_seed = derive_seed(&[scm_seed, n as u64, seed]);
        let run = || -> Result<(MetricsReport, f64, usize)> {
            let x = sample(&scm, n, sample_seed)?;
            let mut rc = rc;
            rc.ica.seed = derive_seed(&[sample_seed, purpose::ICA]);
            let result = recover_condensation(&x, &rc)?;
            let m = MetricsReport::evaluate(&result.b_hat.b, scm.b.matrix())?;
            Ok((m, result.timings.total_ms, result.ica_iterations))
        };
        vec![match run() {
            Ok((m, ms, it)) => {
                let mut r = record;
                r.fill(&m, ms, it);
                r
            }
            Err(e) => record.failed(&e),
        }]
    })?;
    let summary = summarize_sample_complexity(&scm, tau, cfg.window, &records);
    write_json(summary_path, &summary)?;
    Ok(SampleComplexityOutput { records, summary })
}

/// Sample size sufficient for exact support recovery with probability
/// `1 - delta`: `(4 / beta_min^2) * sqrt((k1 + k2) / delta)`.
pub fn sufficient_n(beta_min: f64, delta: f64, k1: f64, k2: f64) -> Result<f64> {
    if !(beta_min > 0.0 && k1 > 0.0 && k2 > 0.0 && delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(
            "need beta_min, k1, k2 > 0 and delta in (0, 1]".into(),
        ));
    }
    Ok(4.0 / (beta_min * beta_min) * ((k1 + k2) / delta).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize, seed: u64, ari: f64) -> ExperimentRecord {
        let cell = Cell {
            d: 4,
            kappa: 1,
            lambda: 0.5,
            regime: Regime::Stable,
        };
        let mut r = cell.record(n, seed, 0.1);
        r.ari = Some(ari);
        r
    }

    #[test]
    fn sufficient_n_cases() {
        assert_eq!(sufficient_n(1.0, 1.0, 0.5, 0.5).unwrap(), 4.0);
        let base = sufficient_n(0.4, 0.1, 2.0, 3.0).unwrap();
        assert!((sufficient_n(0.2, 0.1, 2.0, 3.0).unwrap() / base - 4.0).abs() < 1e-12);
        assert!((sufficient_n(0.4, 0.025, 2.0, 3.0).unwrap() / base - 2.0).abs() < 1e-12);
        assert!(sufficient_n(0.0, 0.1, 1.0, 1.0).is_err());
        assert!(sufficient_n(1.0, 1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn stat_values() {
        let s = stat(&[1.0, 2.0, 3.0, 10.0]).unwrap();
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 2.5);
        // sample sd of {1,2,3,10} is sqrt(50/3)
        assert!((s.sd - (50.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.ci_high - s.mean - 1.96 * s.sd / 2.0).abs() < 1e-12);
        assert_eq!(stat(&[7.0]).unwrap().median, 7.0);
        assert!(stat(&[]).is_none());
    }

    #[test]
    fn ols_slope_exact_on_a_line() {
        let pts: Vec<_> = [1.0, 2.0, 5.0].iter().map(|&x| (x, 3.0 - 2.0 * x)).collect();
        assert!((ols_slope(&pts).unwrap() + 2.0).abs() < 1e-12);
        assert!(ols_slope(&[(1.0, 1.0)]).is_none());
        assert!(ols_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_none());
    }

    #[test]
    fn summary_groups_by_cell_and_skips_errors() {
        let mut failed = record(10, 2, 0.0);
        failed.ari = None;
        failed.error = Some("boom".into());
        let rs = vec![record(10, 0, 1.0), record(20, 0, 0.5), record(10, 1, 0.0), failed];
        let s = summarize(&rs);
        assert_eq!(s.cells.len(), 2);
        assert_eq!(s.cells[0].n, 10);
        assert_eq!(s.cells[0].records, 3);
        assert_eq!(s.cells[0].errors, 1);
        assert_eq!(s.cells[0].ari.unwrap().mean, 0.5);
        assert_eq!(s.cells[1].ari.unwrap().count, 1);
    }

    #[test]
    fn csv_header_matches_schema() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(record(10, 0, 1.0)).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "d,kappa,lambda,regime,n,seed,tau,ari,cluster_f1,variable_f1,hamming,exact_recovery,pred_clusters,fit_ms,ica_iters,error"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "4,1,0.5,stable,10,0,0.1,1.0,,,,,,,,");
    }

    #[test]
    fn config_validation() {
        assert!(GridConfig::default().validate().is_ok());
        let bad = GridConfig {
            sample_sizes: vec![100, 50],
            ..GridConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = GridConfig {
            kappas: vec![],
            ..GridConfig::default()
        };
        assert!(bad.validate().is_err());
        let parsed: GridConfig = serde_json::from_str(r#"{"d": 6, "kappas": [2], "seeds": [0, 1]}"#).unwrap();
        assert_eq!(parsed.d, 6);
        assert_eq!(parsed.lambdas, vec![0.3, 0.5, 0.8]);
        assert!(serde_json::from_str::<GridConfig>(r#"{"dd": 6}"#).is_err());
        assert!(SweepConfig::default().validate().is_ok());
        assert!(SampleComplexityConfig::default().validate().is_ok());
    }
}
