use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use augpu_core::estimators::{fit_pair, EmHyper, FittedPair, LogisticHyper};
use augpu_core::eval::{run_experiment, ExperimentConfig, Method, METRICS};
use augpu_core::risk::{
    excess_from_report, mc_bayes_risk, probit_closed_form, ExcessRisk, RiskReport,
};
use augpu_core::rules::{likely_positive_score, rank_top_k};
use augpu_core::synth::{build_scenario, sample_dataset, LabelingStrategy, VariantSpec};
use augpu_core::{PuDataset, Scenario};
use serde::{Deserialize, Serialize};

use crate::output::{read_config, resolve_out_dir, Staging};

/// Exit code when the run finished but some experiment cells failed.
const PARTIAL_FAILURE: u8 = 2;
const DEFAULT_N_MC: usize = 1_000_000;

fn default_labeling() -> LabelingStrategy {
    LabelingStrategy::Probabilistic
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenConfig {
    scenario: VariantSpec,
    n: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_labeling")]
    labeling: LabelingStrategy,
}

pub fn gen(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<ExitCode> {
    let mut config: GenConfig = read_config(config_path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config
        .scenario
        .validate()
        .with_context(|| format!("invalid config {}", config_path.display()))?;
    let out = resolve_out_dir(out, "gen");
    let mut staging = Staging::new(&out)?;
    let scenario = build_scenario(&config.scenario, config.seed)?;
    let data = sample_dataset(&scenario, config.n, config.seed, &config.labeling)?;
    data.save(&staging.path("dataset.csv"))?;
    staging.record("dataset.csv");
    staging.record("dataset.json");
    let seeds = vec![config.seed];
    let dir = staging.commit("gen", &config, seeds)?;
    println!("{}", dir.join("dataset.csv").display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct ProbitOutput {
    a: f64,
    l_star: f64,
    l_star_pu: f64,
    excess: f64,
    p_s1: f64,
    p_s0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<RiskReport>,
}

#[derive(Debug, Serialize)]
struct ScenarioRiskOutput {
    scenario: VariantSpec,
    #[serde(flatten)]
    report: RiskReport,
    /// `|stratum form - w form|` of `L*_PU` in combined standard errors.
    l_star_pu_discrepancy_se: f64,
    excess_risk: ExcessRisk,
}

#[derive(Debug, Serialize)]
struct RiskManifestConfig<'a> {
    probit: Option<f64>,
    scenario: Option<&'a VariantSpec>,
    n_mc: Option<usize>,
    seed: u64,
}

pub fn risk(
    probit: Option<f64>,
    config_path: Option<&Path>,
    n_mc: Option<usize>,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let (json, spec) = match (probit, config_path) {
        (Some(a), _) => {
            if !a.is_finite() {
                bail!("--probit must be finite, got {a}");
            }
            let exact = probit_closed_form(a);
            let monte_carlo = n_mc
                .map(|n| mc_bayes_risk(&Scenario::probit(a)?, n, seed))
                .transpose()?;
            let report = ProbitOutput {
                a,
                l_star: exact.l_star,
                l_star_pu: exact.l_star_pu,
                excess: exact.excess,
                p_s1: exact.p_s1,
                p_s0: exact.p_s0,
                monte_carlo,
            };
            (serde_json::to_string_pretty(&report)?, None)
        }
        (None, Some(path)) => {
            let spec: VariantSpec = read_config(path)?;
            spec.validate()
                .with_context(|| format!("invalid config {}", path.display()))?;
            let scenario = build_scenario(&spec, seed)?;
            let report = mc_bayes_risk(&scenario, n_mc.unwrap_or(DEFAULT_N_MC), seed)?;
            let output = ScenarioRiskOutput {
                l_star_pu_discrepancy_se: report.l_star_pu_discrepancy(),
                excess_risk: excess_from_report(&report),
                scenario: spec.clone(),
                report,
            };
            (serde_json::to_string_pretty(&output)?, Some(spec))
        }
        (None, None) => bail!("either --probit or --config is required"),
    };
    println!("{json}");
    if let Some(out) = out {
        let mut staging = Staging::new(&out)?;
        staging.write("risk.json", format!("{json}\n").as_bytes())?;
        let echo = RiskManifestConfig {
            probit,
            scenario: spec.as_ref(),
            n_mc,
            seed,
        };
        staging.commit("risk", &echo, vec![seed])?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct ErrorRecord {
    variant: String,
    c: f64,
    method: String,
    seed: u64,
    message: String,
}

pub fn experiment(
    config_path: Option<&Path>,
    out: Option<PathBuf>,
    parallelism: Option<usize>,
    methods: Option<Vec<String>>,
    table: Option<String>,
) -> Result<ExitCode> {
    let mut config: ExperimentConfig = match config_path {
        Some(p) => read_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(names) = methods {
        config.methods = names
            .iter()
            .map(|n| {
                Method::parse(n.trim()).ok_or_else(|| {
                    let known: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                    anyhow!("unknown method `{n}`; expected one of {}", known.join(", "))
                })
            })
            .collect::<Result<_>>()?;
    }
    if let Some(metric) = &table {
        if !METRICS.contains(&metric.as_str()) {
            bail!(
                "unknown metric `{metric}`; expected one of {}",
                METRICS.join(", ")
            );
        }
    }
    config.validate().context("invalid experiment config")?;
    if parallelism == Some(0) {
        bail!("--parallelism must be at least 1");
    }
    let out = resolve_out_dir(out, "experiment");
    let mut staging = Staging::new(&out)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = parallelism {
        pool = pool.num_threads(n);
    }
    let result = pool.build()?.install(|| run_experiment(&config))?;

    let mut csv = Vec::new();
    result.write_long_csv(&mut csv)?;
    staging.write("results.csv", &csv)?;
    staging.write_json("summary.json", &result)?;
    let metric = table.as_deref().unwrap_or("u_accuracy");
    let rendered = result.table(metric);
    staging.write(&format!("table_{metric}.txt"), rendered.as_bytes())?;
    let errors: Vec<ErrorRecord> = result
        .errors()
        .into_iter()
        .map(|(v, c, m, e)| ErrorRecord {
            variant: v.name().to_string(),
            c,
            method: m.name().to_string(),
            seed: e.seed,
            message: e.message,
        })
        .collect();
    if !errors.is_empty() {
        staging.write_json("errors.json", &errors)?;
    }
    let dir = staging.commit("experiment", &config, config.seeds.clone())?;
    if table.is_some() {
        print!("{rendered}");
    }
    let violations = result.conservativeness_violations();
    if !violations.is_empty() {
        eprintln!("warning: {} conservativeness violations", violations.len());
    }
    eprintln!("results written to {}", dir.display());
    if errors.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} seed runs failed; see errors.json", errors.len());
        Ok(ExitCode::from(PARTIAL_FAILURE))
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitConfig {
    #[serde(default)]
    em: EmHyper,
    #[serde(default)]
    s_model: LogisticHyper,
}

pub fn fit(dataset: &Path, config_path: Option<&Path>, out: &Path) -> Result<ExitCode> {
    let config: FitConfig = match config_path {
        Some(p) => read_config(p)?,
        None => FitConfig::default(),
    };
    let data = PuDataset::load(dataset)?;
    let pair = fit_pair(data.observable(), &config.em, &config.s_model)?;
    let mut text = serde_json::to_string_pretty(&pair)?;
    text.push('\n');
    let parent = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(out).map_err(|e| e.error)?;
    println!("{}", out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn rank(dataset: &Path, model: &Path, k: usize) -> Result<ExitCode> {
    let data = PuDataset::load(dataset)?;
    let pair: FittedPair = read_config(model)?;
    if pair.dims() != data.dims() {
        bail!(
            "model has {} features but the dataset has {}",
            pair.dims(),
            data.dims()
        );
    }
    let estimator = pair.to_pair();
    let view = data.observable();
    let candidates: Vec<(u64, f64, f64)> = (0..view.len())
        .filter(|&i| !view.s(i))
        .map(|i| {
            let x = view.x(i);
            let y = estimator.y(x);
            (i as u64, y, estimator.s(x).min(y))
        })
        .collect();
    let top = rank_top_k(&candidates, k)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "rank,record,score")?;
    for (r, id) in top.iter().enumerate() {
        let (_, y, s) = candidates
            .iter()
            .find(|c| c.0 == *id)
            .expect("ranked id is a candidate");
        writeln!(w, "{},{},{:?}", r + 1, id, likely_positive_score(*y, *s)?)?;
    }
    Ok(ExitCode::SUCCESS)
}
