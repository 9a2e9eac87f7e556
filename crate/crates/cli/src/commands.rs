use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lfdr_core::ingest::{load_abundance_csv, load_pvalues_csv, shift_log_transform, two_sample_t_pvalues};
use lfdr_core::lfdr::{bh_lfdr_link, lfdr_estimates};
use lfdr_core::numfmt::fmt12;
use lfdr_core::seeds::derive_seed;
use lfdr_core::simkit::{exact_small_n_coverage, run_grid, MetricPooling};
use lfdr_core::{CapPlacement, Estimator, EstimatorKind, LfdrOptions, MeanMethod, MeanOptions, SimulationConfig};
use serde_json::{json, Value};

use crate::manifest;
use crate::{
    BhArgs, CapArg, CoverageArgs, EstimatorArg, LfdrArgs, OutputArgs, PoolingArg, SimulateArgs, TransformArg,
    TtestArgs,
};

#[derive(Debug)]
pub enum CliError {
    Clap(clap::Error),
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Clap(_) | CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "{m}"),
            CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl From<lfdr_core::Error> for CliError {
    fn from(e: lfdr_core::Error) -> Self {
        match e {
            lfdr_core::Error::Numeric(_) | lfdr_core::Error::Range { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// A command's output before it is written anywhere.
pub struct Rendered {
    pub text: Vec<u8>,
    pub json: Value,
    pub params: Value,
    pub seeds: Value,
    pub inputs: Vec<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_weight(w: Option<f64>) -> Result<(), CliError> {
    match w {
        Some(w) if !(0.0..=1.0).contains(&w) => Err(usage(format!("--weight {w} not in [0, 1]"))),
        _ => Ok(()),
    }
}

fn build_estimator(kind: EstimatorArg, weight: Option<f64>, mc_draws: usize, seed: u64) -> Result<Estimator, CliError> {
    check_weight(weight)?;
    if mc_draws == 0 {
        return Err(usage("--mc-draws must be at least 1"));
    }
    Ok(match kind {
        EstimatorArg::Mle => Estimator::Mle,
        EstimatorArg::Corrected => Estimator::CorrectedMedian {
            weight: weight.unwrap_or(1.0),
        },
        EstimatorArg::Mean => Estimator::PosteriorMean(MeanOptions {
            weight: weight.unwrap_or(0.5),
            method: MeanMethod::MonteCarlo { draws: mc_draws, seed },
            cap: CapPlacement::PerDraw,
        }),
    })
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

pub fn lfdr(a: &LfdrArgs) -> Result<Rendered, CliError> {
    let mc_seed = derive_seed(a.seed, &[1]);
    let estimator = build_estimator(a.estimator, a.weight, a.mc_draws, mc_seed)?;
    let pvals = load_pvalues_csv(&a.input, a.seed)?;
    let opts = LfdrOptions {
        estimator,
        enforce_monotone: !a.no_monotone,
    };
    let result = lfdr_estimates(&pvals, &opts)?;
    let text = csv_bytes(
        &["id", "p", "rank", "raw_lfdr", "monotone_lfdr"],
        result.rows.iter().map(|r| {
            vec![
                r.id.clone(),
                fmt12(r.p),
                r.rank.to_string(),
                fmt12(r.raw_estimate),
                fmt12(r.monotone_estimate),
            ]
        }),
    )?;
    Ok(Rendered {
        text,
        json: serde_json::to_value(&result).expect("serializable"),
        params: json!({ "estimator": opts.estimator, "enforce_monotone": opts.enforce_monotone }),
        seeds: json!({ "tie_break": a.seed, "monte_carlo": mc_seed }),
        inputs: vec![a.input.clone()],
    })
}

pub fn bh(a: &BhArgs) -> Result<Rendered, CliError> {
    if !(a.q > 0.0 && a.q < 1.0) {
        return Err(usage(format!("--q {} not in (0, 1)", a.q)));
    }
    let pvals = load_pvalues_csv(&a.input, a.seed)?;
    let link = bh_lfdr_link(&pvals, a.q)?;
    let r = &link.rejection;
    let mut text = String::new();
    text.push_str(&format!("q: {}\n", fmt12(r.q)));
    text.push_str(&format!("threshold_rank: {}\n", r.threshold_rank));
    text.push_str(&format!("threshold_p: {}\n", r.threshold_p.map(fmt12).unwrap_or_default()));
    text.push_str(&format!("rejected: {}\n", r.rejected.join(",")));
    match &link.median {
        Some(m) => text.push_str(&format!(
            "median_rejected: rank {} id {} p {} mle_lfdr {} monotone {} at controlled level {}\n",
            m.rank,
            m.id,
            fmt12(m.p),
            fmt12(m.lfdr_mle),
            fmt12(m.lfdr_mle_monotone),
            fmt12(r.q)
        )),
        None => text.push_str("median_rejected: not applicable (no rejections)\n"),
    }
    Ok(Rendered {
        text: text.into_bytes(),
        json: serde_json::to_value(&link).expect("serializable"),
        params: json!({ "q": a.q }),
        seeds: json!({ "tie_break": a.seed }),
        inputs: vec![a.input.clone()],
    })
}

fn kind_of(e: EstimatorArg) -> EstimatorKind {
    match e {
        EstimatorArg::Mle => EstimatorKind::Mle,
        EstimatorArg::Corrected => EstimatorKind::CorrectedMedian,
        EstimatorArg::Mean => EstimatorKind::PosteriorMean,
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<Rendered, CliError> {
    let config = SimulationConfig {
        pi0_grid: a.pi0_grid.clone(),
        n_grid: a.n_grid.clone(),
        delta: a.delta,
        replicates: a.reps,
        seed: a.seed,
        estimators: a.estimators.iter().map(|&e| kind_of(e)).collect(),
        mc_draws: a.mc_draws,
        pooling: match a.pooling {
            PoolingArg::Pooled => MetricPooling::Pooled,
            PoolingArg::PerReplicate => MetricPooling::PerReplicate,
        },
        mean_cap: match a.mean_cap {
            CapArg::PerDraw => CapPlacement::PerDraw,
            CapArg::FinalMean => CapPlacement::FinalMean,
        },
        ..SimulationConfig::default()
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let rows = run_grid(&config)?;
    let text = csv_bytes(
        &["pi0", "n", "estimator", "rmse", "conservatism_proportion", "bias", "replicate_count"],
        rows.iter().map(|r| {
            vec![
                fmt12(r.pi0),
                r.n.to_string(),
                r.estimator.as_str().to_string(),
                fmt12(r.rmse),
                fmt12(r.conservatism_proportion),
                fmt12(r.bias),
                r.replicate_count.to_string(),
            ]
        }),
    )?;
    Ok(Rendered {
        text,
        json: serde_json::to_value(&rows).expect("serializable"),
        params: serde_json::to_value(&config).expect("serializable"),
        seeds: json!({ "base": a.seed }),
        inputs: Vec::new(),
    })
}

fn default_pis(alpha: f64) -> Vec<f64> {
    (0..)
        .map(|k| alpha + 0.05 * k as f64)
        .take_while(|p| *p <= 1.0 + 1e-12)
        .map(|p| p.min(1.0))
        .collect()
}

pub fn coverage_exact(a: &CoverageArgs) -> Result<Rendered, CliError> {
    let estimator = build_estimator(a.estimator, a.weight, a.mc_draws, a.seed)?;
    for &alpha in &a.alpha_grid {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(usage(format!("alpha {alpha} not in (0, 1]")));
        }
    }
    if let Some(pis) = &a.pi_grid {
        if let Some(p) = pis.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(usage(format!("pi {p} not in [0, 1]")));
        }
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &alpha in &a.alpha_grid {
        let pis = a.pi_grid.clone().unwrap_or_else(|| default_pis(alpha));
        for pi in pis {
            let coverage = if pi < alpha {
                None
            } else {
                Some(exact_small_n_coverage(a.n, alpha, pi, &estimator)?)
            };
            rows.push(vec![fmt12(alpha), fmt12(pi), coverage.map(fmt12).unwrap_or_default()]);
            records.push(json!({ "alpha": alpha, "pi": pi, "coverage": coverage }));
        }
    }
    Ok(Rendered {
        text: csv_bytes(&["alpha", "pi", "coverage"], rows)?,
        json: Value::Array(records),
        params: json!({ "n": a.n, "estimator": estimator }),
        seeds: json!({ "monte_carlo": a.seed }),
        inputs: Vec::new(),
    })
}

pub fn ttest(a: &TtestArgs) -> Result<Rendered, CliError> {
    let raw = load_abundance_csv(&a.input)?;
    let m = match a.transform {
        TransformArg::ShiftLog => shift_log_transform(&raw)?,
        TransformArg::None => raw,
    };
    let report = two_sample_t_pvalues(&m)?;
    for w in report.warnings() {
        eprintln!("lfdr: warning: feature {} has zero pooled variance; p set to 1", w.feature);
    }
    let text = csv_bytes(
        &["id", "p"],
        report.tests.iter().map(|t| vec![t.feature.clone(), fmt12(t.p)]),
    )?;
    Ok(Rendered {
        text,
        json: serde_json::to_value(&report).expect("serializable"),
        params: json!({
            "transform": match a.transform { TransformArg::ShiftLog => "shift-log", TransformArg::None => "none" }
        }),
        seeds: Value::Null,
        inputs: vec![a.input.clone()],
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Writes the rendered output, its JSON mirror and, for file output, the
/// manifest sidecar.
pub fn emit(command: &str, argv: &[String], r: &Rendered, out: &OutputArgs) -> Result<(), CliError> {
    match &out.out {
        Some(path) => write_file(path, &r.text)?,
        None => std::io::stdout().write_all(&r.text)?,
    }
    if let Some(path) = &out.json {
        let body = serde_json::to_vec_pretty(&r.json).expect("serializable");
        write_file(path, &body)?;
    }
    if let Some(path) = &out.out {
        let m = manifest::Manifest::new(command, argv, r, path)?;
        write_file(&manifest::sidecar(path), &serde_json::to_vec_pretty(&m).expect("serializable"))?;
    }
    Ok(())
}
