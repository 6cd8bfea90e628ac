//! Seeded experiment drivers: τ sensitivity, kernel comparison and label
//! noise resilience. Every table is a pure function of its `BenchSpec` and seeds.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::{
    inject_label_noise, load_csv, make_blobs, make_crossplanes, make_two_moons, stratified_split, DatasetError, FeatureDataset,
    LabelMap,
};
use crate::kernel::KernelKind;
use crate::modelselect::{accuracy, grid_search, mean_std, powers_of_two, GridSpec, ModelSelectError};
use crate::pingtsvm::{train, PinGtsvmParams};
use crate::qp::QpSettings;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown scenario `{0}` (expected tau-sweep, kernel-compare or noise-resilience)")]
    UnknownScenario(String),
    #[error("invalid bench spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Select(#[from] ModelSelectError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    TauSweep,
    KernelCompare,
    NoiseResilience,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::TauSweep, Scenario::KernelCompare, Scenario::NoiseResilience];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::TauSweep => "tau-sweep",
            Scenario::KernelCompare => "kernel-compare",
            Scenario::NoiseResilience => "noise-resilience",
        })
    }
}

impl FromStr for Scenario {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.to_string() == s)
            .ok_or_else(|| BenchError::UnknownScenario(s.to_string()))
    }
}

/// Where each seed's dataset comes from. Generators are reseeded per seed;
/// a CSV file is fixed and only its split varies.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Blobs { n_per_class: usize, d: usize, separation: f64, sigma: f64 },
    Crossplanes { n_per_class: usize, noise_sigma: f64 },
    TwoMoons { n_per_class: usize, noise_sigma: f64 },
    Csv { path: PathBuf, labels: LabelMap },
}

impl DataSource {
    pub fn name(&self) -> String {
        match self {
            DataSource::Blobs { .. } => "blobs".into(),
            DataSource::Crossplanes { .. } => "crossplanes".into(),
            DataSource::TwoMoons { .. } => "two-moons".into(),
            DataSource::Csv { path, .. } => path.display().to_string(),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<FeatureDataset<f64>, DatasetError> {
        match self {
            &DataSource::Blobs { n_per_class, d, separation, sigma } => make_blobs(n_per_class, d, separation, sigma, seed),
            &DataSource::Crossplanes { n_per_class, noise_sigma } => make_crossplanes(n_per_class, noise_sigma, seed),
            &DataSource::TwoMoons { n_per_class, noise_sigma } => make_two_moons(n_per_class, noise_sigma, seed),
            DataSource::Csv { path, labels } => load_csv(path, labels),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub scenario: Scenario,
    pub source: DataSource,
    pub seeds: Vec<u64>,
    /// Kernel for the τ and noise scenarios; kernel-compare runs both.
    pub kernel: KernelKind,
    pub taus: Vec<f64>,
    /// Label flip rates swept by noise-resilience.
    pub noise_rates: Vec<f64>,
    /// Flip rate applied to training rows in the τ sweep.
    pub label_noise: f64,
    pub test_fraction: f64,
    pub folds: usize,
    /// Tuning grid; its τ list is replaced per scenario.
    pub grid: GridSpec<f64>,
    /// Seed of the dataset the tuning grid search runs on.
    pub tune_seed: u64,
}

pub fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}

impl BenchSpec {
    pub fn default_for(scenario: Scenario) -> Self {
        let crossplanes = DataSource::Crossplanes { n_per_class: 50, noise_sigma: 0.1 };
        let base = BenchSpec {
            scenario,
            source: crossplanes,
            seeds: default_seeds(),
            kernel: KernelKind::Linear,
            taus: vec![0.0, 0.5, 0.8, 1.0],
            noise_rates: vec![0.0, 0.05, 0.1, 0.2],
            label_noise: 0.1,
            test_fraction: 0.3,
            folds: 5,
            grid: GridSpec::default_for(KernelKind::Linear),
            tune_seed: 1000,
        };
        match scenario {
            Scenario::TauSweep => base,
            Scenario::NoiseResilience => BenchSpec { taus: vec![0.0, 0.5], label_noise: 0.0, ..base },
            Scenario::KernelCompare => BenchSpec {
                source: DataSource::TwoMoons { n_per_class: 50, noise_sigma: 0.1 },
                taus: vec![0.5],
                label_noise: 0.0,
                grid: GridSpec {
                    c_values: vec![0.0625, 0.25, 1.0, 4.0, 16.0],
                    sigma_values: powers_of_two(-2, 1),
                    ..GridSpec::default_for(KernelKind::Gaussian)
                },
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Spec(msg));
        if self.seeds.is_empty() {
            return bad("need at least one seed".into());
        }
        if self.taus.is_empty() || self.taus.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return bad(format!("tau values {:?} must be nonempty and in [0, 1]", self.taus));
        }
        if self.scenario == Scenario::NoiseResilience && self.noise_rates.is_empty() {
            return bad("need at least one noise rate".into());
        }
        for &r in self.noise_rates.iter().chain([&self.label_noise]) {
            if !(0.0..=0.5).contains(&r) {
                return bad(format!("label noise rate {r} not in [0, 0.5]"));
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test fraction {} not in (0, 1)", self.test_fraction));
        }
        if self.folds < 2 {
            return bad(format!("need at least 2 folds, got {}", self.folds));
        }
        self.grid.validate()?;
        Ok(())
    }

    fn split(&self, seed: u64) -> Result<(FeatureDataset<f64>, FeatureDataset<f64>), BenchError> {
        let ds = self.source.generate(seed)?;
        Ok(stratified_split(&ds, self.test_fraction, seed)?)
    }

    /// Best `(c, kernel)` from a grid search at fixed `tau` on the clean
    /// training split of the tuning dataset.
    fn tune(&self, kind: KernelKind, tau: f64) -> Result<PinGtsvmParams<f64>, BenchError> {
        let (fit, _) = self.split(self.tune_seed)?;
        let grid = GridSpec { tau_values: vec![tau], kernel_kind: kind, ..self.grid.clone() };
        let ranked = grid_search(&fit, &grid, self.folds, self.tune_seed)?;
        Ok(ranked[0].params)
    }

    /// Test accuracy for one seed, training on labels flipped at `rate`.
    /// A failed training scores as the constant `+1` classifier.
    fn run_cell(&self, params: &PinGtsvmParams<f64>, rate: f64, seed: u64) -> Result<(f64, bool), BenchError> {
        let (fit, test) = self.split(seed)?;
        let fit = if rate > 0.0 { inject_label_noise(&fit, rate, seed.wrapping_add(0x5eed))? } else { fit };
        Ok(match train(&fit, params, &QpSettings::default()).and_then(|m| m.predict(test.features())) {
            Ok(pred) => (accuracy(test.labels(), &pred), false),
            Err(_) => (accuracy(test.labels(), &vec![1; test.n()]), true),
        })
    }

    fn sweep(&self, params: &PinGtsvmParams<f64>, rate: f64) -> Result<Summary, BenchError> {
        let mut accuracies = Vec::with_capacity(self.seeds.len());
        let mut failed = 0;
        for &seed in &self.seeds {
            let (acc, fail) = self.run_cell(params, rate, seed)?;
            accuracies.push(acc);
            failed += fail as usize;
        }
        Ok(Summary::new(accuracies, failed))
    }
}

/// Per-seed accuracies of one table cell, in seed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Seeds whose training failed.
    pub failed: usize,
}

impl Summary {
    fn new(accuracies: Vec<f64>, failed: usize) -> Self {
        let (mean, std) = mean_std(&accuracies);
        Self { accuracies, mean, std, failed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauRow {
    pub dataset: String,
    pub tau: f64,
    pub params: PinGtsvmParams<f64>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub dataset: String,
    pub kernel: KernelKind,
    pub summary: Summary,
    /// Best cross-validation accuracy, averaged over seeds.
    pub mean_cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub noise_rate: f64,
    pub tau: f64,
    pub params: PinGtsvmParams<f64>,
    pub summary: Summary,
    /// Mean over seeds of `accuracy(τ) − accuracy(reference τ)`; the
    /// reference is the first τ in the spec.
    pub paired_diff: f64,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

pub fn run_tau_sweep(spec: &BenchSpec) -> Result<Vec<TauRow>, BenchError> {
    spec.validate()?;
    let tuned = spec.tune(spec.kernel, 0.5)?;
    spec.taus
        .iter()
        .map(|&tau| {
            let params = PinGtsvmParams { tau1: tau, tau2: tau, ..tuned };
            Ok(TauRow { dataset: spec.source.name(), tau, params, summary: spec.sweep(&params, spec.label_noise)? })
        })
        .collect()
}

/// Grid-searches each kernel on every seed's training split and scores the
/// winner on the held-out split.
pub fn run_kernel_compare(spec: &BenchSpec) -> Result<Vec<KernelRow>, BenchError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for kind in [KernelKind::Linear, KernelKind::Gaussian] {
        let grid = GridSpec { tau_values: spec.taus.clone(), kernel_kind: kind, ..spec.grid.clone() };
        let mut accuracies = Vec::new();
        let mut cv = Vec::new();
        let mut failed = 0;
        for &seed in &spec.seeds {
            let (fit, _) = spec.split(seed)?;
            let best = grid_search(&fit, &grid, spec.folds, seed)?.swap_remove(0);
            cv.push(best.mean_accuracy);
            let (acc, fail) = spec.run_cell(&best.params, spec.label_noise, seed)?;
            accuracies.push(acc);
            failed += fail as usize;
        }
        rows.push(KernelRow {
            dataset: spec.source.name(),
            kernel: kind,
            summary: Summary::new(accuracies, failed),
            mean_cv_accuracy: mean_std(&cv).0,
        });
    }
    Ok(rows)
}

/// Sweeps label flip rates × τ, with `c` (and width) tuned per τ on clean data.
pub fn run_noise_resilience(spec: &BenchSpec) -> Result<Vec<NoiseRow>, BenchError> {
    spec.validate()?;
    let tuned: Vec<PinGtsvmParams<f64>> = spec.taus.iter().map(|&tau| spec.tune(spec.kernel, tau)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for &rate in &spec.noise_rates {
        let cells: Vec<Summary> = tuned.iter().map(|p| spec.sweep(p, rate)).collect::<Result<_, _>>()?;
        let reference = &cells[0].accuracies;
        for ((&tau, params), summary) in spec.taus.iter().zip(&tuned).zip(cells.iter()) {
            let diffs: Vec<f64> = summary.accuracies.iter().zip(reference).map(|(a, b)| a - b).collect();
            rows.push(NoiseRow {
                noise_rate: rate,
                tau,
                params: *params,
                summary: summary.clone(),
                paired_diff: mean_std(&diffs).0,
                wins: diffs.iter().filter(|&&d| d > 0.0).count(),
                ties: diffs.iter().filter(|&&d| d == 0.0).count(),
                losses: diffs.iter().filter(|&&d| d < 0.0).count(),
            });
        }
    }
    Ok(rows)
}

/// One rendered value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Real(f64),
    Count(u64),
    Missing,
}

/// Column names plus rows, rendered by the CLI as a table, CSV or JSON lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

fn width_cell(p: &PinGtsvmParams<f64>) -> Cell {
    match p.kernel.kind {
        KernelKind::Linear => Cell::Missing,
        KernelKind::Gaussian => Cell::Real(p.kernel.sigma),
    }
}

impl From<&[TauRow]> for Table {
    fn from(rows: &[TauRow]) -> Self {
        Table {
            columns: vec!["dataset", "tau", "c", "sigma", "mean_accuracy", "std_accuracy", "failed"],
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Text(r.dataset.clone()),
                        Cell::Real(r.tau),
                        Cell::Real(r.params.c1),
                        width_cell(&r.params),
                        Cell::Real(r.summary.mean),
                        Cell::Real(r.summary.std),
                        Cell::Count(r.summary.failed as u64),
                    ]
                })
                .collect(),
        }
    }
}

impl From<&[KernelRow]> for Table {
    fn from(rows: &[KernelRow]) -> Self {
        Table {
            columns: vec!["dataset", "kernel", "mean_accuracy", "std_accuracy", "mean_cv_accuracy", "failed"],
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Text(r.dataset.clone()),
                        Cell::Text(r.kernel.to_string()),
                        Cell::Real(r.summary.mean),
                        Cell::Real(r.summary.std),
                        Cell::Real(r.mean_cv_accuracy),
                        Cell::Count(r.summary.failed as u64),
                    ]
                })
                .collect(),
        }
    }
}

impl From<&[NoiseRow]> for Table {
    fn from(rows: &[NoiseRow]) -> Self {
        Table {
            columns: vec![
                "noise_rate", "tau", "c", "sigma", "mean_accuracy", "std_accuracy", "failed", "paired_diff", "wins", "ties", "losses",
            ],
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Real(r.noise_rate),
                        Cell::Real(r.tau),
                        Cell::Real(r.params.c1),
                        width_cell(&r.params),
                        Cell::Real(r.summary.mean),
                        Cell::Real(r.summary.std),
                        Cell::Count(r.summary.failed as u64),
                        Cell::Real(r.paired_diff),
                        Cell::Count(r.wins as u64),
                        Cell::Count(r.ties as u64),
                        Cell::Count(r.losses as u64),
                    ]
                })
                .collect(),
        }
    }
}

/// Runs `spec.scenario` and tabulates it.
pub fn run(spec: &BenchSpec) -> Result<Table, BenchError> {
    Ok(match spec.scenario {
        Scenario::TauSweep => Table::from(run_tau_sweep(spec)?.as_slice()),
        Scenario::KernelCompare => Table::from(run_kernel_compare(spec)?.as_slice()),
        Scenario::NoiseResilience => Table::from(run_noise_resilience(spec)?.as_slice()),
    })
}
