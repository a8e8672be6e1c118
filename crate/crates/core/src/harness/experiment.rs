//! Training from a config and evaluating every configured method over a
//! test split.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::dataset::{examples, load_split, Clip};
use super::metrics::{box_stats, score, BoxStats, Scores};
use crate::error::{Error, Result};
use crate::metric_recovery::{linear_grid, sample_metric_curve, MetricCurve};
use crate::seeding::rng_for;
use crate::solvers::{admm_pr, griffin_lim, random_phase_init, QuadraticProx};
use crate::transforms::{Complex, Measurements, Signal, StftOperator};
use crate::unfolded::{train, uadmm_apply, Checkpoint, TrainingMetadata, UnfoldedModel};

/// Trains a quadratically initialized network on the configured train and
/// validation splits.
pub fn train_from_config(cfg: &ExperimentConfig, tied: bool) -> Result<Checkpoint> {
    let train_dir = cfg.require_dir(&cfg.data.train_dir, "train_dir")?;
    let val_dir = cfg.require_dir(&cfg.data.val_dir, "val_dir")?;
    let mut sets = Vec::new();
    for (dir, limit) in [
        (train_dir, cfg.data.train_items),
        (val_dir, cfg.data.val_items),
    ] {
        let split = load_split(dir, limit, &cfg.data)?;
        if let Some((file, e)) = split.failures.into_iter().next() {
            return Err(Error::Config(format!("{file}: {e}")));
        }
        sets.push(examples(&split.clips, cfg.stft)?);
    }
    let model =
        UnfoldedModel::quadratic(cfg.model.layers, cfg.model.segments, tied, cfg.model.rho)?;
    let tc = cfg.train_config();
    let (best, history) = train(&model, &sets[0], &sets[1], &tc)?;
    Ok(Checkpoint {
        model: best,
        training: Some(TrainingMetadata {
            config: tc,
            history,
            train_items: sets[0].len(),
            val_items: sets[1].len(),
        }),
    })
}

/// A trained network and the method name it is reported under.
#[derive(Clone, Debug)]
pub struct LabeledModel {
    pub label: String,
    pub checkpoint: Checkpoint,
}

/// Labels checkpoints `uadmm-tied` / `uadmm-untied`, numbering repeats.
pub fn label_models(checkpoints: Vec<Checkpoint>) -> Vec<LabeledModel> {
    let mut out: Vec<LabeledModel> = Vec::new();
    for ck in checkpoints {
        let base = if ck.model.tied {
            "uadmm-tied"
        } else {
            "uadmm-untied"
        };
        let n = out.iter().filter(|m| m.label.starts_with(base)).count();
        let label = if n == 0 {
            base.to_string()
        } else {
            format!("{base}-{}", n + 1)
        };
        out.push(LabeledModel {
            label,
            checkpoint: ck,
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: String,
    pub budgets: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub label: String,
    pub layers: usize,
    pub segments: usize,
    pub tied: bool,
    pub rho: f64,
    pub train_items: Option<usize>,
    pub val_items: Option<usize>,
    pub trained_epochs: Option<usize>,
    pub best_epoch: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub seed: u64,
    pub sample_rate: u32,
    pub window_length: usize,
    pub crop_seconds: f64,
    /// Configured per-split caps.
    pub split_limits: SplitSizes,
    pub test_signals: usize,
    pub methods: Vec<MethodSpec>,
    pub models: Vec<ModelInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub signal: String,
    pub method: String,
    pub budget: usize,
    #[serde(flatten)]
    pub scores: Scores,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub signal: Option<String>,
    pub method: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub method: String,
    pub budget: usize,
    #[serde(flatten)]
    pub stats: BoxStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCurves {
    pub model: String,
    pub curves: Vec<MetricCurve>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub header: ReportHeader,
    pub results: Vec<ResultRow>,
    pub failures: Vec<FailureRow>,
    pub summaries: Vec<SummaryRow>,
    pub curves: Vec<ModelCurves>,
}

pub const METRICS: [&str; 3] = ["stoi", "si_sdr", "spectral_distance"];

impl Report {
    pub fn summary(&self, metric: &str, method: &str, budget: usize) -> Option<&SummaryRow> {
        self.summaries
            .iter()
            .find(|s| s.metric == metric && s.method == method && s.budget == budget)
    }
}

/// Wall-clock figures, kept apart from [`Report`] so reports stay
/// reproducible byte for byte.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    /// Per method, summed over signals.
    pub method_seconds: Vec<(String, f64)>,
}

fn sorted_budgets(b: &[usize]) -> Vec<usize> {
    let mut v = b.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn method_specs(cfg: &ExperimentConfig, models: &[LabeledModel]) -> Vec<MethodSpec> {
    let mut out = vec![
        MethodSpec {
            method: "gla".into(),
            budgets: sorted_budgets(&cfg.solvers.gla_budgets),
        },
        MethodSpec {
            method: "admm".into(),
            budgets: sorted_budgets(&cfg.solvers.admm_budgets),
        },
    ];
    for m in models {
        let t = m.checkpoint.model.layers_count;
        out.push(MethodSpec {
            method: m.label.clone(),
            budgets: sorted_budgets(&cfg.solvers.uadmm_repeats)
                .iter()
                .map(|k| k * t)
                .collect(),
        });
    }
    out.retain(|m| !m.budgets.is_empty());
    out
}

struct ClipOutcome {
    rows: Vec<ResultRow>,
    failures: Vec<FailureRow>,
    seconds: Vec<(String, f64)>,
}

/// Estimates after each budget, in increasing budget order.
pub type Estimates = Vec<(usize, Signal)>;

/// A reconstruction method together with what it needs besides the
/// measurements.
#[derive(Clone, Copy, Debug)]
pub enum Method<'a> {
    Gla,
    Admm {
        rho: f64,
    },
    /// Budgets must be multiples of the layer count; the network is applied
    /// `budget / T` times, carrying `(x, λ)` between applications.
    Uadmm(&'a UnfoldedModel),
}

/// Runs `method` from `x0`, returning the estimate at every budget. Work is
/// shared between budgets; a budget of `b` means exactly `b` iterations
/// from `x0`.
pub fn reconstruct(
    method: Method<'_>,
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    budgets: &[usize],
) -> Result<Estimates> {
    let budgets = sorted_budgets(budgets);
    let mut out = Vec::with_capacity(budgets.len());
    let mut x = x0.clone();
    let mut lambda = vec![Complex::default(); op.coeff_len()];
    let mut done = 0;
    for b in budgets {
        match method {
            Method::Gla => x = griffin_lim(op, r, &x, b - done)?.0,
            Method::Admm { rho } => {
                let (state, _) = admm_pr(op, r, &x, &lambda, rho, &QuadraticProx, b - done)?;
                x = state.x;
                lambda = state.lambda;
            }
            Method::Uadmm(model) => {
                let t = model.layers_count;
                if t == 0 || b % t != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "budget {b} is not a multiple of the layer count {t}"
                    )));
                }
                for _ in done / t..b / t {
                    (x, lambda) = uadmm_apply(model, op, r, &x, &lambda)?;
                }
            }
        }
        done = b;
        out.push((b, x.clone()));
    }
    Ok(out)
}

/// Magnitudes of `signal` and the seeded random-phase starting point used
/// for it by [`run_experiment`]. `name` is usually the file name.
pub fn prepare(
    cfg: &ExperimentConfig,
    name: &str,
    signal: &Signal,
) -> Result<(StftOperator, Measurements, Signal)> {
    let op = StftOperator::new(cfg.stft, signal.len())?;
    let r = Measurements {
        r: op
            .forward(&signal.samples)?
            .iter()
            .map(|c| c.norm())
            .collect(),
    };
    let mut rng = rng_for(cfg.seed, name);
    let x0 = random_phase_init(&op, &r, signal.sample_rate, &mut rng)?;
    Ok((op, r, x0))
}

fn evaluate_clip(
    cfg: &ExperimentConfig,
    specs: &[MethodSpec],
    models: &[LabeledModel],
    clip: &Clip,
) -> ClipOutcome {
    let mut outcome = ClipOutcome {
        rows: Vec::new(),
        failures: Vec::new(),
        seconds: Vec::new(),
    };
    let fail = |method: Option<&str>, e: Error| FailureRow {
        signal: Some(clip.name.clone()),
        method: method.map(str::to_string),
        message: e.to_string(),
    };
    let (op, r, x0) = match prepare(cfg, &clip.name, &clip.signal) {
        Ok(v) => v,
        Err(e) => {
            outcome.failures.push(fail(None, e));
            return outcome;
        }
    };
    for spec in specs {
        let start = Instant::now();
        let method = match spec.method.as_str() {
            "gla" => Method::Gla,
            "admm" => Method::Admm {
                rho: cfg.solvers.admm_rho,
            },
            label => Method::Uadmm(
                &models
                    .iter()
                    .find(|m| m.label == label)
                    .expect("method spec built from the model list")
                    .checkpoint
                    .model,
            ),
        };
        let estimates = reconstruct(method, &op, &r, &x0, &spec.budgets);
        let scored = estimates.and_then(|est| {
            est.into_iter()
                .map(|(budget, x)| {
                    Ok(ResultRow {
                        signal: clip.name.clone(),
                        method: spec.method.clone(),
                        budget,
                        scores: score(&op, &r, &clip.signal, &x)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        });
        match scored {
            Ok(rows) => outcome.rows.extend(rows),
            Err(e) => outcome.failures.push(fail(Some(&spec.method), e)),
        }
        outcome
            .seconds
            .push((spec.method.clone(), start.elapsed().as_secs_f64()));
    }
    outcome
}

fn summarize(specs: &[MethodSpec], rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for metric in METRICS {
        for spec in specs {
            for &budget in &spec.budgets {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.method == spec.method && r.budget == budget)
                    .filter_map(|r| match metric {
                        "stoi" => r.scores.stoi,
                        "si_sdr" => r.scores.si_sdr,
                        _ => Some(r.scores.spectral_distance),
                    })
                    .collect();
                if let Some(stats) = box_stats(&values) {
                    out.push(SummaryRow {
                        metric: metric.to_string(),
                        method: spec.method.clone(),
                        budget,
                        stats,
                    });
                }
            }
        }
    }
    out
}

fn model_info(m: &LabeledModel) -> ModelInfo {
    let model = &m.checkpoint.model;
    let t = m.checkpoint.training.as_ref();
    ModelInfo {
        label: m.label.clone(),
        layers: model.layers_count,
        segments: model.segments,
        tied: model.tied,
        rho: model.rho,
        train_items: t.map(|t| t.train_items),
        val_items: t.map(|t| t.val_items),
        trained_epochs: t.map(|t| t.history.epochs.len().saturating_sub(1)),
        best_epoch: t.map(|t| t.history.best_epoch),
    }
}

/// Evaluates GLA, ADMM and every model on the configured test split.
/// Per-signal failures are recorded in the report and skipped.
pub fn run_experiment(cfg: &ExperimentConfig, models: &[LabeledModel]) -> Result<(Report, Timing)> {
    cfg.validate()?;
    let start = Instant::now();
    let test_dir = cfg.require_dir(&cfg.data.test_dir, "test_dir")?;
    let split = load_split(test_dir, cfg.data.test_items, &cfg.data)?;
    let specs = method_specs(cfg, models);

    let outcomes: Vec<ClipOutcome> = split
        .clips
        .par_iter()
        .map(|clip| evaluate_clip(cfg, &specs, models, clip))
        .collect();

    let mut failures: Vec<FailureRow> = split
        .failures
        .into_iter()
        .map(|(file, e)| FailureRow {
            signal: Some(file),
            method: None,
            message: e.to_string(),
        })
        .collect();
    let mut results = Vec::new();
    let mut timing = Timing::default();
    for o in outcomes {
        results.extend(o.rows);
        failures.extend(o.failures);
        for (method, secs) in o.seconds {
            match timing.method_seconds.iter_mut().find(|(m, _)| *m == method) {
                Some(entry) => entry.1 += secs,
                None => timing.method_seconds.push((method, secs)),
            }
        }
    }

    let grid = linear_grid(cfg.metric.ymin, cfg.metric.ymax, cfg.metric.points)?;
    let mut curves = Vec::new();
    for m in models {
        let mut all = Vec::new();
        for &rv in &cfg.metric.r_values {
            match sample_metric_curve(&m.checkpoint.model, rv, &grid) {
                Ok(c) => all.extend(c),
                Err(e) => failures.push(FailureRow {
                    signal: None,
                    method: Some(m.label.clone()),
                    message: format!("metric recovery at r = {rv}: {e}"),
                }),
            }
        }
        curves.push(ModelCurves {
            model: m.label.clone(),
            curves: all,
        });
    }

    let report = Report {
        header: ReportHeader {
            seed: cfg.seed,
            sample_rate: cfg.data.sample_rate,
            window_length: cfg.stft.window_length,
            crop_seconds: cfg.data.crop_seconds,
            split_limits: SplitSizes {
                train: cfg.data.train_items,
                val: cfg.data.val_items,
                test: cfg.data.test_items,
            },
            test_signals: split.clips.len(),
            methods: specs.clone(),
            models: models.iter().map(model_info).collect(),
        },
        summaries: summarize(&specs, &results),
        results,
        failures,
        curves,
    };
    timing.total_seconds = start.elapsed().as_secs_f64();
    Ok((report, timing))
}
