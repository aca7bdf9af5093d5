//! The empirical protocol: generate instances, compute shares, solve for θ,
//! and summarize θ by quartiles per share kind (and per Δ for EFS^Δ).

use std::io::Write;
use std::path::PathBuf;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{optimal_theta, Theta};
use crate::error::{Error, Result};
use crate::forge::{gen_bernoulli, gen_intrinsic_with, gen_uniform_partition, load_csv, DEFAULT_TOTAL};
use crate::lp::Mode;
use crate::model::{Instance, ShareKind};
use crate::num::{format_rational, int, serde_rational, to_f64, Rational};
use crate::shares::{all_shares, DeltaSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    UniformPartition { total: u64 },
    Bernoulli { p: f64 },
    IntrinsicValue { alpha_max: f64, beta_max: f64 },
    /// One instance per file; `n`, `m` and `instances` come from the files.
    Csv { files: Vec<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub n: usize,
    pub m: usize,
    pub instances: usize,
    pub kinds: Vec<ShareKind>,
    #[serde(with = "serde_rational::vec")]
    pub delta_grid: Vec<Rational>,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Uniform integer partitions summing to 1000, `n = 25`, `m = 75`,
    /// 200 instances, 20 hidden-set samples per Δ.
    pub fn preset(name: &str) -> Result<Self> {
        let model = match name {
            "uniform" => Model::UniformPartition { total: DEFAULT_TOTAL },
            "bernoulli" => Model::Bernoulli { p: 0.5 },
            "intrinsic" => Model::IntrinsicValue { alpha_max: 1.0, beta_max: 0.3 },
            other => return Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
        };
        let mut kinds = vec![ShareKind::Prop, ShareKind::Ccs, ShareKind::Efs];
        if name == "uniform" {
            kinds.push(ShareKind::EfsDelta);
        }
        Ok(ExperimentConfig {
            model,
            n: 25,
            m: 75,
            instances: 200,
            kinds,
            delta_grid: [1, 2, 4, 8, 25].into_iter().map(int).collect(),
            samples: 20,
            seed: 0,
            output: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let Model::Csv { files } = &self.model {
            if files.is_empty() {
                return Err(Error::InvalidArgument("csv model needs at least one file".into()));
            }
        } else if self.instances == 0 || self.n == 0 || self.m == 0 {
            return Err(Error::InvalidArgument("instances, n and m must be positive".into()));
        }
        if self.kinds.is_empty() {
            return Err(Error::InvalidArgument("no share kinds requested".into()));
        }
        if self.kinds.contains(&ShareKind::EfsDelta) {
            if self.delta_grid.is_empty() {
                return Err(Error::InvalidArgument("EFS_DELTA needs a nonempty delta grid".into()));
            }
            if let Some(d) = self.delta_grid.iter().find(|d| **d < int(1)) {
                return Err(Error::InvalidArgument(format!("delta {} is below 1", format_rational(d))));
            }
            if self.samples == 0 {
                return Err(Error::InvalidArgument("samples must be positive".into()));
            }
        }
        Ok(())
    }

    fn instance_count(&self) -> usize {
        match &self.model {
            Model::Csv { files } => files.len(),
            _ => self.instances,
        }
    }

    /// Seed of instance `index`, independent of how many instances run.
    pub fn instance_seed(&self, index: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng.next_u64()
    }

    pub fn instance(&self, index: usize) -> Result<Instance> {
        let seed = self.instance_seed(index);
        match &self.model {
            Model::UniformPartition { total } => gen_uniform_partition(self.n, self.m, *total, seed),
            Model::Bernoulli { p } => gen_bernoulli(self.n, self.m, *p, seed),
            Model::IntrinsicValue { alpha_max, beta_max } => {
                gen_intrinsic_with(self.n, self.m, *alpha_max, *beta_max, seed)
            }
            Model::Csv { files } => load_csv(&files[index]),
        }
    }

    /// `(kind, Δ)` pairs in output order.
    fn series(&self) -> Vec<(ShareKind, Option<Rational>)> {
        let mut out = Vec::new();
        for &kind in &self.kinds {
            if kind == ShareKind::EfsDelta {
                out.extend(self.delta_grid.iter().map(|d| (kind, Some(d.clone()))));
            } else {
                out.push((kind, None));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub instance: usize,
    pub seed: u64,
    pub kind: ShareKind,
    #[serde(with = "serde_rational::option")]
    pub delta: Option<Rational>,
    /// `None` for failed rows or an all-zero share vector.
    pub theta: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub kind: ShareKind,
    #[serde(with = "serde_rational::option")]
    pub delta: Option<Rational>,
    pub count: usize,
    pub failures: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub rows: Vec<ExperimentRow>,
    pub summary: Vec<SeriesSummary>,
}

impl ExperimentOutput {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn series(&self, kind: ShareKind, delta: Option<&Rational>) -> Option<&SeriesSummary> {
        self.summary.iter().find(|s| s.kind == kind && s.delta.as_ref() == delta)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["instance", "seed", "kind", "delta", "theta", "error"])?;
        for r in &self.rows {
            csv.write_record([
                r.instance.to_string(),
                r.seed.to_string(),
                r.kind.to_string(),
                r.delta.as_ref().map(format_rational).unwrap_or_default(),
                r.theta.map(|t| t.to_string()).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Median and interquartile range per series, ready for plotting.
    pub fn plot_spec(&self) -> serde_json::Value {
        let series: Vec<serde_json::Value> = self
            .summary
            .iter()
            .map(|s| {
                serde_json::json!({
                    "label": match &s.delta {
                        Some(d) => format!("{} delta={}", s.kind, format_rational(d)),
                        None => s.kind.to_string(),
                    },
                    "kind": s.kind,
                    "delta": s.delta.as_ref().map(to_f64),
                    "median": s.median,
                    "q1": s.q1,
                    "q3": s.q3,
                    "mean": s.mean,
                })
            })
            .collect();
        serde_json::json!({ "y": "theta", "series": series })
    }
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarize(kind: ShareKind, delta: Option<Rational>, rows: &[&ExperimentRow]) -> SeriesSummary {
    let mut values: Vec<f64> = rows.iter().filter_map(|r| r.theta).collect();
    values.sort_by(f64::total_cmp);
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    let mean = if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    SeriesSummary {
        kind,
        delta,
        count: values.len(),
        failures,
        min: values.first().copied().unwrap_or(f64::NAN),
        q1: quantile(&values, 0.25),
        median: quantile(&values, 0.5),
        q3: quantile(&values, 0.75),
        max: values.last().copied().unwrap_or(f64::NAN),
        mean,
    }
}

fn run_instance(config: &ExperimentConfig, index: usize, mode: Mode) -> Vec<ExperimentRow> {
    let seed = config.instance_seed(index);
    let series = config.series();
    let row = |kind, delta, theta, error| ExperimentRow { instance: index, seed, kind, delta, theta, error };
    let inst = match config.instance(index) {
        Ok(inst) => inst,
        Err(e) => {
            return series
                .into_iter()
                .map(|(kind, delta)| row(kind, delta, None, Some(e.to_string())))
                .collect();
        }
    };
    series
        .into_iter()
        .map(|(kind, delta)| {
            let theta = || -> Result<Option<f64>> {
                let spec = match &delta {
                    Some(d) => Some(DeltaSpec::new(d.clone(), config.samples, seed)?),
                    None => None,
                };
                let shares = all_shares(&inst, kind, spec.as_ref(), mode)?;
                Ok(match optimal_theta(&inst, &shares, mode)?.theta {
                    Theta::Value(t) => Some(to_f64(&t)),
                    Theta::Unconstrained => None,
                })
            };
            match theta() {
                Ok(t) => row(kind, delta, t, None),
                Err(e) => row(kind, delta, None, Some(e.to_string())),
            }
        })
        .collect()
}

/// Runs every instance (in parallel) and returns rows ordered by instance.
pub fn run_experiment(config: &ExperimentConfig, mode: Mode) -> Result<ExperimentOutput> {
    config.validate()?;
    let rows: Vec<ExperimentRow> = (0..config.instance_count())
        .into_par_iter()
        .map(|index| run_instance(config, index, mode))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let summary = config
        .series()
        .into_iter()
        .map(|(kind, delta)| {
            let matching: Vec<&ExperimentRow> =
                rows.iter().filter(|r| r.kind == kind && r.delta == delta).collect();
            summarize(kind, delta, &matching)
        })
        .collect();
    Ok(ExperimentOutput { config: config.clone(), rows, summary })
}
