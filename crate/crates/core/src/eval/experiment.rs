use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binomial::binomial_win_test;
use super::metrics::{u_accuracy, u_balanced_accuracy, u_positive_count};
use crate::error::{PuError, Result};
use crate::estimators::{
    fit_pair, prophet_pair, semi_prophet_pair, Component, EmHyper, EstimatorPair, LogisticHyper,
};
use crate::model::PuDataset;
use crate::rng::derive_seed;
use crate::rules::{decide_db, decide_db_pu_estimated, Decision};
use crate::stats::summarize;
use crate::synth::{build_scenario, sample_dataset, LabelingStrategy, Variant, VariantSpec};

/// A prediction method evaluated on the test stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Augmented rule with exact `y` and `s`.
    SProphet,
    /// Feature-only rule with exact `y`.
    YProphet,
    #[serde(rename = "Fitted_dB")]
    FittedDb,
    #[serde(rename = "Fitted_dBPU")]
    FittedDbPu,
    /// Augmented rule with exact `y` and fitted `ŝ`.
    SemiProphetY,
    /// Augmented rule with fitted `ŷ` and exact `s`.
    SemiProphetS,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::SProphet,
        Method::YProphet,
        Method::FittedDb,
        Method::FittedDbPu,
        Method::SemiProphetY,
        Method::SemiProphetS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SProphet => "SProphet",
            Method::YProphet => "YProphet",
            Method::FittedDb => "Fitted_dB",
            Method::FittedDbPu => "Fitted_dBPU",
            Method::SemiProphetY => "SemiProphetY",
            Method::SemiProphetS => "SemiProphetS",
        }
    }

    pub fn parse(name: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == name)
    }

    fn needs_fit(self) -> bool {
        !matches!(self, Method::SProphet | Method::YProphet)
    }

    /// For augmented-rule methods, the feature-only method using the same `ŷ`.
    pub fn feature_only_counterpart(self) -> Option<Method> {
        match self {
            Method::SProphet | Method::SemiProphetY => Some(Method::YProphet),
            Method::FittedDbPu | Method::SemiProphetS => Some(Method::FittedDb),
            Method::YProphet | Method::FittedDb => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const METRICS: [&str; 3] = ["u_accuracy", "u_balanced_accuracy", "u_positives"];

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}
fn default_c_grid() -> Vec<f64> {
    vec![0.02, 0.1, 0.3, 0.5, 0.7, 0.9]
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}
fn default_n_train() -> usize {
    5_000
}
fn default_n_test() -> usize {
    10_000
}

/// A `(variant × c × method × seed)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    /// Template for every variant; `variant` and `target_c` are overwritten per cell.
    #[serde(default = "default_template")]
    pub scenario: VariantSpec,
    #[serde(default = "default_labeling")]
    pub labeling: LabelingStrategy,
    #[serde(default)]
    pub em: EmHyper,
    #[serde(default)]
    pub s_model: LogisticHyper,
}

fn default_template() -> VariantSpec {
    VariantSpec::new(Variant::V1, 0.5)
}
fn default_labeling() -> LabelingStrategy {
    LabelingStrategy::Probabilistic
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            variants: default_variants(),
            c_grid: default_c_grid(),
            methods: default_methods(),
            seeds: default_seeds(),
            n_train: default_n_train(),
            n_test: default_n_test(),
            scenario: default_template(),
            labeling: default_labeling(),
            em: EmHyper::default(),
            s_model: LogisticHyper::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |field, reason: &str| {
            Err(PuError::InvalidConfig {
                field,
                reason: reason.into(),
            })
        };
        if self.variants.is_empty() {
            return invalid("variants", "must not be empty");
        }
        if self.c_grid.is_empty() {
            return invalid("c_grid", "must not be empty");
        }
        if self.methods.is_empty() {
            return invalid("methods", "must not be empty");
        }
        if self.seeds.is_empty() {
            return invalid("seeds", "must not be empty");
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return invalid("seeds", "must be distinct");
        }
        if self.n_test == 0 {
            return invalid("n_test", "must be at least 1");
        }
        if self.n_train == 0 && self.methods.iter().any(|m| m.needs_fit()) {
            return invalid("n_train", "must be at least 1 for fitted methods");
        }
        for &v in &self.variants {
            for &c in &self.c_grid {
                self.spec(v, c).validate()?;
            }
        }
        Ok(())
    }

    pub fn spec(&self, variant: Variant, c: f64) -> VariantSpec {
        VariantSpec {
            variant,
            target_c: c,
            ..self.scenario.clone()
        }
    }
}

/// Mean, standard error and standard deviation of one metric across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    pub std_error: f64,
    pub std_dev: f64,
    /// `(seed, value)` in configuration seed order.
    pub per_seed: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub seed: u64,
    pub message: String,
}

/// Results of one `(variant, c, method)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub variant: Variant,
    pub c: f64,
    pub method: Method,
    pub metrics: Vec<MetricSummary>,
    pub errors: Vec<CellError>,
}

impl CellResult {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == name)
    }
}

/// Head-to-head comparison of two methods over all `(variant, c)` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub first: Method,
    pub second: Method,
    pub metric: String,
    pub first_wins: u64,
    pub second_wins: u64,
    pub ties: u64,
    /// `P(Bin(first_wins + second_wins, 1/2) ≥ first_wins)`; 1 when every cell tied.
    pub p_value_first_better: f64,
    pub p_value_second_better: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
    pub comparisons: Vec<PairComparison>,
}

#[derive(Debug, Clone, Copy)]
struct SeedMetrics {
    values: [f64; 3],
}

type UnitOutcome = Vec<std::result::Result<SeedMetrics, String>>;

fn predict(method: Method, test: &PuDataset, pair: &EstimatorPair) -> Vec<Decision> {
    test.observable()
        .features()
        .iter()
        .zip(test.observable().labels())
        .map(|(x, s_label)| {
            if s_label {
                return Decision::Positive;
            }
            let y = pair.y(x);
            match method {
                Method::YProphet | Method::FittedDb => decide_db(y),
                _ => decide_db_pu_estimated(y, pair.s(x), false),
            }
        })
        .collect()
}

fn evaluate(predictions: &[Decision], test: &PuDataset) -> Result<SeedMetrics> {
    Ok(SeedMetrics {
        values: [
            u_accuracy(predictions, test)?,
            u_balanced_accuracy(predictions, test)?,
            u_positive_count(predictions, test)? as f64,
        ],
    })
}

fn run_unit(config: &ExperimentConfig, variant: Variant, c: f64, seed: u64) -> UnitOutcome {
    let fail_all = |e: PuError| config.methods.iter().map(|_| Err(e.to_string())).collect();
    let unit_seed = derive_seed(seed, &[variant as u64, c.to_bits()]);
    let scenario = match build_scenario(&config.spec(variant, c), derive_seed(unit_seed, &[0])) {
        Ok(s) => s,
        Err(e) => return fail_all(e),
    };
    let test = match sample_dataset(
        &scenario,
        config.n_test,
        derive_seed(unit_seed, &[1]),
        &config.labeling,
    ) {
        Ok(d) => d,
        Err(e) => return fail_all(e),
    };
    let fitted = config.methods.iter().any(|m| m.needs_fit()).then(|| {
        let train = sample_dataset(
            &scenario,
            config.n_train,
            derive_seed(unit_seed, &[2]),
            &config.labeling,
        )?;
        fit_pair(train.observable(), &config.em, &config.s_model).map(|p| p.to_pair())
    });
    let prophet = prophet_pair(&scenario);
    config
        .methods
        .iter()
        .map(|&method| {
            let pair = match method {
                Method::SProphet | Method::YProphet => prophet.clone(),
                _ => {
                    let fitted = match fitted.as_ref().expect("fit requested for fitted methods") {
                        Ok(p) => p,
                        Err(e) => return Err(e.to_string()),
                    };
                    match method {
                        Method::SemiProphetY => semi_prophet_pair(&scenario, fitted, Component::Y),
                        Method::SemiProphetS => semi_prophet_pair(&scenario, fitted, Component::S),
                        _ => fitted.clone(),
                    }
                }
            };
            evaluate(&predict(method, &test, &pair), &test).map_err(|e| e.to_string())
        })
        .collect()
}

/// Run every cell of the grid. Work is spread over the current rayon pool;
/// the result does not depend on its size. Failures are recorded per cell.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let units: Vec<(Variant, f64, u64)> = config
        .variants
        .iter()
        .flat_map(|&v| {
            config
                .c_grid
                .iter()
                .flat_map(move |&c| config.seeds.iter().map(move |&s| (v, c, s)))
        })
        .collect();
    let outcomes: Vec<UnitOutcome> = units
        .par_iter()
        .map(|&(v, c, seed)| run_unit(config, v, c, seed))
        .collect();

    let n_seeds = config.seeds.len();
    let mut cells = Vec::new();
    for (block, chunk) in outcomes.chunks(n_seeds).enumerate() {
        let (variant, c, _) = units[block * n_seeds];
        for (mi, &method) in config.methods.iter().enumerate() {
            let mut errors = Vec::new();
            let mut per_seed: Vec<(u64, SeedMetrics)> = Vec::new();
            for (si, unit) in chunk.iter().enumerate() {
                let seed = config.seeds[si];
                match &unit[mi] {
                    Ok(m) => per_seed.push((seed, *m)),
                    Err(message) => errors.push(CellError {
                        seed,
                        message: message.clone(),
                    }),
                }
            }
            let metrics = if per_seed.is_empty() {
                Vec::new()
            } else {
                METRICS
                    .iter()
                    .enumerate()
                    .map(|(k, name)| {
                        let values: Vec<(u64, f64)> =
                            per_seed.iter().map(|(s, m)| (*s, m.values[k])).collect();
                        let raw: Vec<f64> = values.iter().map(|v| v.1).collect();
                        let (mean, std_dev, std_error) = summarize(&raw);
                        MetricSummary {
                            metric: (*name).to_string(),
                            mean,
                            std_error,
                            std_dev,
                            per_seed: values,
                        }
                    })
                    .collect()
            };
            cells.push(CellResult {
                variant,
                c,
                method,
                metrics,
                errors,
            });
        }
    }
    let comparisons = compare_methods(config, &cells, "u_accuracy")?;
    Ok(ExperimentResult {
        config: config.clone(),
        cells,
        comparisons,
    })
}

fn compare_methods(
    config: &ExperimentConfig,
    cells: &[CellResult],
    metric: &str,
) -> Result<Vec<PairComparison>> {
    let mut out = Vec::new();
    let methods = &config.methods;
    for (i, &first) in methods.iter().enumerate() {
        for &second in &methods[i + 1..] {
            let (mut w1, mut w2, mut ties) = (0u64, 0u64, 0u64);
            for v in &config.variants {
                for c in &config.c_grid {
                    let mean_of = |m: Method| {
                        cells
                            .iter()
                            .find(|cell| cell.variant == *v && cell.c == *c && cell.method == m)
                            .and_then(|cell| cell.metric(metric))
                            .map(|s| s.mean)
                    };
                    if let (Some(a), Some(b)) = (mean_of(first), mean_of(second)) {
                        match a.partial_cmp(&b) {
                            Some(std::cmp::Ordering::Greater) => w1 += 1,
                            Some(std::cmp::Ordering::Less) => w2 += 1,
                            _ => ties += 1,
                        }
                    }
                }
            }
            let trials = w1 + w2;
            out.push(PairComparison {
                first,
                second,
                metric: metric.to_string(),
                first_wins: w1,
                second_wins: w2,
                ties,
                p_value_first_better: binomial_win_test(w1, trials)?.unwrap_or(1.0),
                p_value_second_better: binomial_win_test(w2, trials)?.unwrap_or(1.0),
            });
        }
    }
    Ok(out)
}

/// A seed where an augmented-rule method predicted more positives on the
/// S=0 stratum than its feature-only counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservativenessViolation {
    pub variant: Variant,
    pub c: f64,
    pub method: Method,
    pub seed: u64,
    pub positives: f64,
    pub counterpart_positives: f64,
}

impl ExperimentResult {
    pub fn cell(&self, variant: Variant, c: f64, method: Method) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|cell| cell.variant == variant && cell.c == c && cell.method == method)
    }

    pub fn all_cells_completed(&self) -> bool {
        self.cells.iter().all(|c| c.errors.is_empty())
    }

    pub fn errors(&self) -> Vec<(Variant, f64, Method, CellError)> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.errors
                    .iter()
                    .map(move |e| (c.variant, c.c, c.method, e.clone()))
            })
            .collect()
    }

    /// Per-seed check that no augmented-rule method predicts more
    /// positives on the unlabeled stratum than its counterpart.
    pub fn conservativeness_violations(&self) -> Vec<ConservativenessViolation> {
        let mut out = Vec::new();
        for cell in &self.cells {
            let Some(other) = cell.method.feature_only_counterpart() else {
                continue;
            };
            let (Some(mine), Some(theirs)) = (
                cell.metric("u_positives"),
                self.cell(cell.variant, cell.c, other)
                    .and_then(|o| o.metric("u_positives")),
            ) else {
                continue;
            };
            for &(seed, pos) in &mine.per_seed {
                if let Some(&(_, cpos)) = theirs.per_seed.iter().find(|(s, _)| *s == seed) {
                    if pos > cpos {
                        out.push(ConservativenessViolation {
                            variant: cell.variant,
                            c: cell.c,
                            method: cell.method,
                            seed,
                            positives: pos,
                            counterpart_positives: cpos,
                        });
                    }
                }
            }
        }
        out
    }

    /// Long format: `variant,c,method,metric,seed,value`.
    pub fn write_long_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["variant", "c", "method", "metric", "seed", "value"])?;
        for cell in &self.cells {
            for m in &cell.metrics {
                for (seed, value) in &m.per_seed {
                    w.write_record([
                        cell.variant.name().to_string(),
                        format!("{:?}", cell.c),
                        cell.method.name().to_string(),
                        m.metric.clone(),
                        seed.to_string(),
                        format!("{value:?}"),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Wide table: one row per `(c, method)`, one column per variant,
    /// entries `mean ± SE` in percent.
    pub fn table(&self, metric: &str) -> String {
        let cfg = &self.config;
        let mut s = String::new();
        let _ = write!(s, "{:<6} {:<13}", "c", "method");
        for v in &cfg.variants {
            let _ = write!(s, " {:>16}", v.name());
        }
        s.push('\n');
        for &c in &cfg.c_grid {
            for &m in &cfg.methods {
                let _ = write!(s, "{:<6} {:<13}", format!("{c:.2}"), m.name());
                for &v in &cfg.variants {
                    let entry = match self.cell(v, c, m).and_then(|cell| cell.metric(metric)) {
                        Some(sum) if metric == "u_positives" => {
                            format!("{:.1} ± {:.1}", sum.mean, sum.std_error)
                        }
                        Some(sum) => {
                            format!("{:.2} ± {:.2}", 100.0 * sum.mean, 100.0 * sum.std_error)
                        }
                        None => "failed".to_string(),
                    };
                    let _ = write!(s, " {entry:>16}");
                }
                s.push('\n');
            }
        }
        s
    }
}
