//! Seeded Monte Carlo harness and tabular export.
//!
//! Trial `t` of an experiment draws its channels from
//! [`trial_seed`]`(master_seed, t)`, so any single row can be replayed from
//! the master seed and the trial index alone. Trials run in parallel and are
//! merged back in trial order; the output is a pure function of the config.
//!
//! Config files are flat `key = value` text. Keys match the field names of
//! [`ExperimentConfig`] and [`SystemParams`]; `#` starts a comment; list
//! values (`beta_grid`, `schemes`) are comma separated.

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{
    benchmark_average_over, beta_sweep, default_beta_grid, max_min_order, BenchmarkMode, Scheme,
};
use crate::orders::{policy_order_with, OrderSets, SizeLimit, SortDirection};
use crate::system::{power_allocation, sample_channels, Link, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

impl Aggregation {
    pub fn apply(self, values: &[f64]) -> f64 {
        if values.is_empty() {
            return f64::NAN;
        }
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let mid = sorted.len() / 2;
                if sorted.len().is_multiple_of(2) {
                    (sorted[mid - 1] + sorted[mid]) / 2.0
                } else {
                    sorted[mid]
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub trials: u64,
    pub master_seed: u64,
    pub beta_grid: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub aggregation: Aggregation,
    pub benchmark_mode: BenchmarkMode,
    pub allow_large_n: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            trials: 1000,
            master_seed: 0,
            beta_grid: default_beta_grid(),
            schemes: Scheme::ALL.to_vec(),
            output_path: None,
            output_format: OutputFormat::Csv,
            aggregation: Aggregation::Mean,
            benchmark_mode: BenchmarkMode::IncludeInfeasible,
            allow_large_n: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = '{value}'")))
}

pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| parse_value(key, v))
        .collect()
}

impl ExperimentConfig {
    /// Sets one field from its textual config form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.params;
        match key {
            "n_users" => p.n_users = parse_value(key, value)?,
            "pt_dbm" => p.pt_dbm = parse_value(key, value)?,
            "noise_dbm" => p.noise_dbm = parse_value(key, value)?,
            "zeta" => p.zeta = parse_value(key, value)?,
            "field_len_m" => p.field_len_m = parse_value(key, value)?,
            "path_loss_const" => p.path_loss_const = parse_value(key, value)?,
            "path_loss_exp" => p.path_loss_exp = parse_value(key, value)?,
            "min_dist_m" => p.min_dist_m = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "master_seed" => self.master_seed = parse_value(key, value)?,
            "beta_grid" => self.beta_grid = parse_list(key, value)?,
            "schemes" => {
                self.schemes = value
                    .split(',')
                    .filter(|v| !v.trim().is_empty())
                    .map(Scheme::from_str)
                    .collect::<Result<_>>()?
            }
            "output_path" => {
                let v = value.trim();
                self.output_path = (!v.is_empty()).then(|| PathBuf::from(v));
            }
            "output_format" => self.output_format = value.parse()?,
            "aggregation" => {
                self.aggregation = match value.trim() {
                    "mean" => Aggregation::Mean,
                    "median" => Aggregation::Median,
                    other => return Err(Error::Config(format!("unknown aggregation '{other}'"))),
                }
            }
            "benchmark_mode" => {
                self.benchmark_mode = match value.trim() {
                    "include-infeasible" => BenchmarkMode::IncludeInfeasible,
                    "feasible-only" => BenchmarkMode::FeasibleOnly,
                    other => {
                        return Err(Error::Config(format!("unknown benchmark_mode '{other}'")))
                    }
                }
            }
            "allow_large_n" => self.allow_large_n = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn size_limit(&self) -> SizeLimit {
        if self.allow_large_n {
            SizeLimit::Override
        } else {
            SizeLimit::Capped
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.beta_grid.is_empty() {
            return Err(Error::Config("beta_grid must not be empty".into()));
        }
        if let Some(&beta) = self.beta_grid.iter().find(|b| !(-1.0..=1.0).contains(*b)) {
            return Err(Error::InvalidBeta(beta));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        if self.schemes.iter().any(|s| s.needs_enumeration()) {
            self.size_limit().check(self.params.n_users)?;
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(master_seed ^ splitmix64(trial))`, where `splitmix64` is the
/// standard SplitMix64 output function applied to a single state step.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(trial))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub trial: u64,
    pub beta: f64,
    pub scheme: Scheme,
    pub order_id: Option<u128>,
    pub min_secrecy_rate: f64,
    pub per_user_rates: Vec<f64>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    run_trials(config, 0..config.trials)
}

/// Runs the given slice of trial indices. Concatenating adjacent ranges gives
/// the same records as one call over their union.
pub fn run_trials(config: &ExperimentConfig, trials: Range<u64>) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let params = &config.params;
    let sets = if config.schemes.iter().any(|s| s.needs_enumeration()) {
        Some(OrderSets::build(params.n_users, config.size_limit())?)
    } else {
        None
    };
    let per_trial: Vec<Vec<ResultRecord>> = trials
        .into_par_iter()
        .map(|trial| {
            let channels = sample_channels(params, trial_seed(config.master_seed, trial))?;
            let mut records = Vec::with_capacity(config.schemes.len() * config.beta_grid.len());
            for &scheme in &config.schemes {
                let rows = beta_sweep(scheme, &config.beta_grid, &channels, params, sets.as_ref())?;
                records.extend(rows.into_iter().map(|row| ResultRecord {
                    trial,
                    beta: row.beta,
                    scheme,
                    order_id: row.order_id.map(|id| id.0),
                    min_secrecy_rate: row.value,
                    per_user_rates: row.per_user_rates,
                }));
            }
            Ok(records)
        })
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Per-trial summary behind the policy-versus-benchmark comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u64,
    /// Best minimum secrecy rate of either policy order over the beta grid.
    pub policy_value: f64,
    pub policy_beta: f64,
    pub policy_scheme: Scheme,
    /// Best max-min value over the favourable set, over the beta grid.
    pub optimal_value: f64,
    /// Benchmark average, itself averaged over the beta grid.
    pub benchmark_value: f64,
    /// Sum over grid points of (beta-matched policy / optimal-L) where the
    /// optimum is positive, and the number of such points.
    pub matched_ratio_sum: f64,
    pub matched_points: u64,
}

pub fn summarize_trials(
    config: &ExperimentConfig,
    sets: &OrderSets,
    trials: Range<u64>,
) -> Result<Vec<TrialSummary>> {
    let params = &config.params;
    let n = params.n_users;
    let policies = [
        (
            Scheme::PolicyLpwu,
            policy_order_with(n, SortDirection::WeakToStrong)?,
        ),
        (
            Scheme::PolicyLpsu,
            policy_order_with(n, SortDirection::StrongToWeak)?,
        ),
    ];
    trials
        .into_par_iter()
        .map(|trial| {
            let channels = sample_channels(params, trial_seed(config.master_seed, trial))?;
            let mut policy_best = (f64::NEG_INFINITY, 0.0, Scheme::PolicyLpwu);
            let mut optimal_value = 0.0f64;
            let mut bench_sum = 0.0;
            let mut matched_ratio_sum = 0.0;
            let mut matched_points = 0;
            for &beta in &config.beta_grid {
                let alpha = power_allocation(&channels, beta)?;
                let link = Link::new(&channels, &alpha, params)?;
                for (scheme, order) in &policies {
                    let value = link.min_secrecy(order);
                    if value > policy_best.0 {
                        policy_best = (value, beta, *scheme);
                    }
                }
                let best = max_min_order(&sets.favourable, &channels, &alpha, params)?;
                optimal_value = optimal_value.max(best.best_value);
                if best.best_value > 0.0 {
                    let matched = match SortDirection::for_beta(beta) {
                        SortDirection::WeakToStrong => &policies[0].1,
                        SortDirection::StrongToWeak => &policies[1].1,
                    };
                    matched_ratio_sum += link.min_secrecy(matched) / best.best_value;
                    matched_points += 1;
                }
                bench_sum += benchmark_average_over(
                    &sets.secure,
                    &channels,
                    &alpha,
                    params,
                    config.benchmark_mode,
                )?;
            }
            Ok(TrialSummary {
                trial,
                policy_value: policy_best.0,
                policy_beta: policy_best.1,
                policy_scheme: policy_best.2,
                optimal_value,
                benchmark_value: bench_sum / config.beta_grid.len() as f64,
                matched_ratio_sum,
                matched_points,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub n_users: usize,
    pub mean_policy_value: f64,
    pub mean_benchmark_value: f64,
    pub gain_percent: f64,
    pub mean_optimal_value: f64,
    /// Mean of policy / optimal over trials with a feasible favourable order.
    pub policy_accuracy: f64,
    pub accuracy_trials: u64,
    /// Mean of (beta-matched policy / optimal-L) over every feasible
    /// (trial, beta) point: W-S order for beta < 0, S-W otherwise.
    pub matched_accuracy: f64,
}

/// Policy-versus-benchmark comparison for each user count.
pub fn gain_vs_users(config: &ExperimentConfig, user_counts: &[usize]) -> Result<Vec<GainRow>> {
    let mut rows = Vec::with_capacity(user_counts.len());
    for &n_users in user_counts {
        if !(2..=4).contains(&n_users) {
            return Err(Error::Config(format!(
                "user counts must lie in 2..=4, got {n_users}"
            )));
        }
        let mut cfg = config.clone();
        cfg.params.n_users = n_users;
        cfg.validate()?;
        let sets = OrderSets::build(n_users, SizeLimit::Capped)?;
        let summaries = summarize_trials(&cfg, &sets, 0..cfg.trials)?;
        let policy: Vec<f64> = summaries.iter().map(|s| s.policy_value).collect();
        let bench: Vec<f64> = summaries.iter().map(|s| s.benchmark_value).collect();
        let optimal: Vec<f64> = summaries.iter().map(|s| s.optimal_value).collect();
        let ratios: Vec<f64> = summaries
            .iter()
            .filter(|s| s.optimal_value > 0.0)
            .map(|s| s.policy_value / s.optimal_value)
            .collect();
        let matched_points: u64 = summaries.iter().map(|s| s.matched_points).sum();
        let matched_sum: f64 = summaries.iter().map(|s| s.matched_ratio_sum).sum();
        let a = cfg.aggregation.apply(&policy);
        let b = cfg.aggregation.apply(&bench);
        rows.push(GainRow {
            n_users,
            mean_policy_value: a,
            mean_benchmark_value: b,
            gain_percent: 100.0 * (a - b) / b,
            mean_optimal_value: cfg.aggregation.apply(&optimal),
            policy_accuracy: cfg.aggregation.apply(&ratios),
            accuracy_trials: ratios.len() as u64,
            matched_accuracy: matched_sum / matched_points as f64,
        });
    }
    Ok(rows)
}

/// Decimal text with 12 significant digits.
pub fn format_number(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{value:.11e}");
    let exponent: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .expect("rust exponent format");
    let decimals = (11 - exponent).max(0) as usize;
    let rounded: f64 = sci.parse().expect("rust exponent format");
    format!("{rounded:.decimals$}")
}

/// Value as it survives a trip through [`format_number`].
pub fn round_sig12(value: f64) -> f64 {
    if value.is_finite() {
        format!("{value:.11e}")
            .parse()
            .expect("rust exponent format")
    } else {
        value
    }
}

fn rate_width(records: &[ResultRecord]) -> usize {
    records
        .iter()
        .map(|r| r.per_user_rates.len())
        .max()
        .unwrap_or(0)
}

pub fn write_csv<W: Write>(records: &[ResultRecord], mut out: W) -> std::io::Result<()> {
    let width = rate_width(records);
    let mut header = String::from("trial,beta,scheme,order_id,min_secrecy_rate");
    for u in 1..=width {
        header.push_str(&format!(",rate_{u}"));
    }
    writeln!(out, "{header}")?;
    for r in records {
        let mut line = format!(
            "{},{},{},{},{}",
            r.trial,
            format_number(r.beta),
            r.scheme,
            r.order_id.map(|id| id.to_string()).unwrap_or_default(),
            format_number(r.min_secrecy_rate)
        );
        for u in 0..width {
            line.push(',');
            if let Some(rate) = r.per_user_rates.get(u) {
                line.push_str(&format_number(*rate));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// JSON array of records, numbers rounded exactly as in the CSV form.
pub fn write_json<W: Write>(records: &[ResultRecord], mut out: W) -> Result<()> {
    let rounded: Vec<ResultRecord> = records
        .iter()
        .map(|r| ResultRecord {
            beta: round_sig12(r.beta),
            min_secrecy_rate: round_sig12(r.min_secrecy_rate),
            per_user_rates: r.per_user_rates.iter().copied().map(round_sig12).collect(),
            ..r.clone()
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rounded)?;
    out.write_all(b"\n")
        .map_err(|e| Error::io("<json output>", e))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV input".into()))?;
    let columns = header.split(',').count();
    if columns < 5 {
        return Err(Error::Config(format!("unexpected CSV header '{header}'")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != columns {
                return Err(Error::Config(format!(
                    "CSV row {} has {} fields",
                    i + 1,
                    fields.len()
                )));
            }
            let per_user_rates = fields[5..]
                .iter()
                .filter(|f| !f.is_empty())
                .map(|f| parse_value("rate", f))
                .collect::<Result<_>>()?;
            Ok(ResultRecord {
                trial: parse_value("trial", fields[0])?,
                beta: parse_value("beta", fields[1])?,
                scheme: fields[2].parse()?,
                order_id: if fields[3].is_empty() {
                    None
                } else {
                    Some(parse_value("order_id", fields[3])?)
                },
                min_secrecy_rate: parse_value("min_secrecy_rate", fields[4])?,
                per_user_rates,
            })
        })
        .collect()
}

pub fn export(records: &[ResultRecord], path: &Path, format: OutputFormat) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(records, &mut buf).map_err(|e| Error::io(path, e))?,
        OutputFormat::Json => write_json(records, &mut buf)?,
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_gain_csv<W: Write>(rows: &[GainRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "n_users,mean_policy_value,mean_benchmark_value,gain_percent,mean_optimal_value,policy_accuracy,accuracy_trials,matched_accuracy"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n_users,
            format_number(r.mean_policy_value),
            format_number(r.mean_benchmark_value),
            format_number(r.gain_percent),
            format_number(r.mean_optimal_value),
            format_number(r.policy_accuracy),
            r.accuracy_trials,
            format_number(r.matched_accuracy)
        )?;
    }
    Ok(())
}

pub fn export_gain(rows: &[GainRow], path: &Path, format: OutputFormat) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_gain_csv(rows, &mut buf).map_err(|e| Error::io(path, e))?,
        OutputFormat::Json => {
            let rounded: Vec<GainRow> = rows
                .iter()
                .map(|r| GainRow {
                    mean_policy_value: round_sig12(r.mean_policy_value),
                    mean_benchmark_value: round_sig12(r.mean_benchmark_value),
                    gain_percent: round_sig12(r.gain_percent),
                    mean_optimal_value: round_sig12(r.mean_optimal_value),
                    policy_accuracy: round_sig12(r.policy_accuracy),
                    matched_accuracy: round_sig12(r.matched_accuracy),
                    ..r.clone()
                })
                .collect();
            serde_json::to_writer_pretty(&mut buf, &rounded)?;
            buf.push(b'\n');
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
