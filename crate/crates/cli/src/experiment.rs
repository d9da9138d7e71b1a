use std::path::Path;

use distpred::json::{self, Object};
use distpred::learners::{kfold_indices, Dataset, FitOptions, PredictedBatch, ProbEstimator};
use distpred::meta::{diagnostics, diagnostics_csv};
use distpred::seeds;
use distpred::validation::{compare_models, kfold_cv_losses, Aggregation, CvOutcome, ResultCell, ResultTable, TestKind};
use distpred::Loss;
use rayon::prelude::*;

use crate::config::{parse_loss, parse_std_denominator, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::grammar::parse_model_spec;
use crate::ingest::load_csv;

/// A model whose fit failed on some fold of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub dataset: String,
    pub model: String,
    pub error: String,
}

/// Cross-validation outcomes of one model on one dataset, one per loss.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub dataset: String,
    pub model: String,
    pub outcomes: Result<Vec<CvOutcome>, String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// The configuration as run, in normal form.
    pub config: ExperimentConfig,
    pub table: ResultTable,
    pub runs: Vec<CellRun>,
    pub failures: Vec<Failure>,
    pub datasets: Vec<PreparedDataset>,
}

/// Seed for the fold split of a dataset; it does not depend on the models.
pub fn split_seed(seed: u64, dataset: &str) -> u64 {
    seeds::derive(seeds::derive(seed, dataset), "folds")
}

/// Seed for fitting one model on one dataset; fold `i` uses `derive_index(.., i)`.
pub fn fit_seed(seed: u64, dataset: &str, model: &str) -> u64 {
    seeds::derive(seeds::derive(seed, dataset), model)
}

/// A loaded dataset with its test folds.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub name: String,
    pub data: Dataset,
    pub folds: Vec<Vec<usize>>,
}

/// Cross-validates every model on every dataset under every loss.
///
/// Each reported mean is an estimate of the expected loss of the strategy
/// trained on `(K − 1)/K` of the data, averaged over training sets; it is not
/// the loss of the model fitted on the full dataset. Fit failures mark the
/// affected cells as failed instead of aborting.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentOutput> {
    let cfg = cfg.normalize()?;
    let losses: Vec<Loss> = cfg.losses.iter().map(|l| parse_loss(l)).collect::<CliResult<_>>()?;
    let std_denominator = parse_std_denominator(&cfg.std_denominator)?;
    let mut prepared = Vec::new();
    for entry in &cfg.datasets {
        let name = entry.display_name();
        let data = load_csv(&entry.path, &entry.target)?;
        let folds = kfold_indices(data.n_rows(), cfg.folds, split_seed(cfg.seed, &name))?;
        prepared.push(PreparedDataset { name, data, folds });
    }
    let mut models = Vec::new();
    for m in &cfg.models {
        let spec = parse_model_spec(m)?;
        let extra = cfg.grid_for(m)?;
        let tuned = spec.is_tuned() || !extra.is_empty();
        models.push((m.clone(), spec.build_with(extra), tuned));
    }

    let jobs: Vec<(usize, usize)> =
        (0..prepared.len()).flat_map(|d| (0..models.len()).map(move |m| (d, m))).collect();
    let runs: Vec<CellRun> = jobs
        .par_iter()
        .map(|&(d, m)| {
            let p = &prepared[d];
            let (name, est, _) = &models[m];
            let opts = FitOptions { std_denominator, ..FitOptions::new(fit_seed(cfg.seed, &p.name, name)) };
            let outcomes = kfold_cv_losses(est, &p.data, &p.folds, &losses, &opts).map_err(|e| e.to_string());
            if let Err(e) = &outcomes {
                log::warn!("{name} failed on {}: {e}", p.name);
            }
            CellRun { dataset: p.name.clone(), model: name.clone(), outcomes }
        })
        .collect();

    let aggregation = if cfg.pooled_se { Aggregation::Pooled } else { Aggregation::MeanOfFolds };
    let tasks: Vec<String> =
        prepared.iter().flat_map(|p| cfg.losses.iter().map(move |l| format!("{}/{l}", p.name))).collect();
    let mut cells = vec![Vec::with_capacity(tasks.len()); models.len()];
    let mut failures = Vec::new();
    for (run, &(_, m)) in runs.iter().zip(&jobs) {
        match &run.outcomes {
            Ok(outs) => cells[m].extend(outs.iter().map(|o| {
                let (mean, se) = o.aggregate(aggregation);
                ResultCell::ok(mean, se)
            })),
            Err(e) => {
                cells[m].extend(std::iter::repeat_n(ResultCell::failed(), losses.len()));
                failures.push(Failure { dataset: run.dataset.clone(), model: run.model.clone(), error: e.clone() });
            }
        }
    }
    let table = ResultTable {
        models: models.iter().map(|m| m.0.clone()).collect(),
        tuned: models.iter().map(|m| m.2).collect(),
        tasks,
        cells,
    };
    Ok(ExperimentOutput { config: cfg, table, runs, failures, datasets: prepared })
}

impl ExperimentOutput {
    /// `results.json`: the normalized configuration, one record per model and
    /// task, and the failures. Byte-identical across reruns of one config.
    pub fn results_json(&self) -> String {
        let failures: Vec<String> = self
            .failures
            .iter()
            .map(|f| Object::new().str("dataset", &f.dataset).str("model", &f.model).str("error", &f.error).render())
            .collect();
        let models: Vec<String> = self.config.models.iter().map(|m| json::string(m)).collect();
        let losses: Vec<String> = self.config.losses.iter().map(|l| json::string(l)).collect();
        let datasets: Vec<String> = self.datasets.iter().map(|d| json::string(&d.name)).collect();
        Object::new()
            .raw("seed", self.config.seed.to_string())
            .raw("folds", self.config.folds.to_string())
            .str("aggregation", if self.config.pooled_se { "pooled" } else { "mean_of_folds" })
            .str("std_denominator", &self.config.std_denominator)
            .raw("datasets", format!("[{}]", datasets.join(",")))
            .raw("models", format!("[{}]", models.join(",")))
            .raw("losses", format!("[{}]", losses.join(",")))
            .raw("results", self.table.to_json())
            .raw("failures", format!("[{}]", failures.join(",")))
            .render()
            + "\n"
    }

    pub fn results_md(&self) -> String {
        let mut out = self.table.to_markdown();
        out.push_str(&format!(
            "\n{}-fold cross-validation, seed {}. Cells show (rank) mean±stderr; `*` marks models with tuned parameters.\n",
            self.config.folds, self.config.seed
        ));
        for f in &self.failures {
            out.push_str(&format!("\nFailed: `{}` on {}: {}\n", f.model, f.dataset, f.error));
        }
        out
    }

    /// Pairwise two-sided Wilcoxon tests on out-of-fold losses, per task.
    /// Models that failed on a dataset are left out of its comparisons.
    pub fn comparisons_json(&self) -> CliResult<String> {
        let mut tasks = Vec::new();
        for dataset in self.datasets.iter().map(|d| &d.name) {
            for (j, loss) in self.config.losses.iter().enumerate() {
                let ok: Vec<(&String, &Vec<f64>)> = self
                    .runs
                    .iter()
                    .filter(|r| &r.dataset == dataset)
                    .filter_map(|r| r.outcomes.as_ref().ok().map(|o| (&r.model, &o[j].row_losses)))
                    .collect();
                let losses: Vec<Vec<f64>> = ok.iter().map(|(_, l)| (*l).clone()).collect();
                let matrix = compare_models(&losses, TestKind::Wilcoxon)?;
                let mut pairs = Vec::new();
                for (a, row) in matrix.iter().enumerate() {
                    for (b, r) in row.iter().enumerate() {
                        if a == b {
                            continue;
                        }
                        pairs.push(
                            Object::new()
                                .str("model", ok[a].0)
                                .str("other", ok[b].0)
                                .num("statistic", r.statistic)
                                .num("p_value", r.p_value)
                                .raw("direction", r.direction.to_string())
                                .raw("n", r.n.to_string())
                                .render(),
                        );
                    }
                }
                tasks.push(
                    Object::new().str("task", &format!("{dataset}/{loss}")).raw("pairs", format!("[{}]", pairs.join(","))).render(),
                );
            }
        }
        Ok(format!("[{}]\n", tasks.join(",")))
    }

    /// Per-row diagnostics of the out-of-fold predictions under the first
    /// loss, with the loss zeroed against the uninformed normal baseline.
    /// Returns `(file name, csv)` pairs.
    pub fn diagnostics(&self) -> CliResult<Vec<(String, String)>> {
        let loss = parse_loss(&self.config.losses[0])?;
        let std_denominator = parse_std_denominator(&self.config.std_denominator)?;
        let several = self.datasets.len() > 1;
        let mut files = Vec::new();
        for PreparedDataset { name, data, folds } in &self.datasets {
            let opts = FitOptions {
                std_denominator,
                ..FitOptions::new(fit_seed(self.config.seed, name, "baseline"))
            };
            let baseline = &kfold_cv_losses(&ProbEstimator::normal_baseline(), data, folds, std::slice::from_ref(&loss), &opts)?[0];
            let base_batch = PredictedBatch { dists: baseline.predictions.clone(), estimator: "baseline".into(), seed: opts.seed };
            let resolved = loss.resolve(&data.y)?;
            for (i, run) in self.runs.iter().filter(|r| &r.dataset == name).enumerate() {
                let Ok(outs) = &run.outcomes else { continue };
                let batch = PredictedBatch { dists: outs[0].predictions.clone(), estimator: run.model.clone(), seed: self.config.seed };
                let rows = diagnostics(&batch, &data.y, &resolved, Some(&base_batch))?;
                let stem = if several { format!("{name}-{}", slug(i, &run.model)) } else { slug(i, &run.model) };
                files.push((format!("{stem}.csv"), diagnostics_csv(&rows)));
            }
        }
        Ok(files)
    }
}

/// File-name-safe form of a model specification, prefixed by its position.
pub fn slug(index: usize, model: &str) -> String {
    let mut s = String::new();
    for c in model.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c);
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    format!("{index:02}_{}", s.trim_matches('_'))
}

/// Writes `contents` to `dir/name`, creating directories as needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, contents).map_err(CliError::from)
}
