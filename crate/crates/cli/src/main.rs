use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use distpred::independence::{predictive_independence_test, two_sample_test, TwoSampleOptions};
use distpred::json::Object;
use distpred::learners::{Dataset, FitOptions, ProbEstimator};
use distpred::validation::{ComparisonResult, TestKind};
use distpred::{seeds, Loss};
use distpred_cli::config::{parse_loss, parse_std_denominator, split_top_level, DatasetEntry};
use distpred_cli::experiment::write_file;
use distpred_cli::{load_csv, parse_model_spec, run_experiment, CliError, CliResult, ExperimentConfig};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;

#[derive(Parser)]
#[command(name = "distpred", version, about = "Cross-validated benchmarks and tests for probabilistic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate models and write results.json and results.md.
    Cv(RunArgs),
    /// Like `cv`, also writing pairwise Wilcoxon tests to comparisons.json.
    Compare(RunArgs),
    /// Write per-row diagnostics of out-of-fold predictions to diagnostics/<model>.csv.
    Diagnose(RunArgs),
    /// Test whether the target depends on the features.
    Indep(TestArgs),
    /// Test whether the rows of the two groups in `--target` share a distribution.
    Twosample(TestArgs),
    /// Parse model specifications and print their normal form.
    ParseCheck {
        #[arg(long)]
        models: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated model specifications.
    #[arg(long)]
    models: Option<String>,
    /// Comma-separated loss identifiers.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    pooled_se: bool,
    /// `n` or `n-1`.
    #[arg(long)]
    std_denominator: Option<String>,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    data: PathBuf,
    /// Label column for `indep`, group column for `twosample`.
    #[arg(long)]
    target: String,
    /// Informed model, optionally followed by the uninformed one (`indep` only).
    #[arg(long, default_value = "N(p=LR, s=RE(p, C(mean(y))))")]
    models: String,
    #[arg(long, default_value = "log")]
    loss: String,
    #[arg(long)]
    seed: u64,
    /// Share of rows used for training.
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// `wilcoxon` or `paired_t`.
    #[arg(long, default_value = "wilcoxon")]
    test: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    std_denominator: Option<String>,
}

fn config_from(args: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&std::fs::read_to_string(path)?)
            .map_err(|e| CliError::Config(e.to_string()))?,
        None => {
            let seed = args.seed.ok_or_else(|| CliError::Config("`--seed` is required".into()))?;
            ExperimentConfig {
                datasets: Vec::new(),
                models: Vec::new(),
                losses: vec!["log".into()],
                folds: 5,
                seed,
                out: None,
                pooled_se: false,
                std_denominator: "n".into(),
                compare: false,
                grids: Default::default(),
            }
        }
    };
    if let Some(data) = &args.data {
        let target = args.target.clone().ok_or_else(|| CliError::Config("`--data` needs `--target`".into()))?;
        cfg.datasets = vec![DatasetEntry { path: data.clone(), target, name: None }];
    } else if let Some(target) = &args.target {
        cfg.datasets.iter_mut().for_each(|d| d.target = target.clone());
    }
    if let Some(m) = &args.models {
        cfg.models = split_top_level(m);
    }
    if let Some(l) = &args.loss {
        cfg.losses = split_top_level(l);
    }
    if let Some(k) = args.folds {
        cfg.folds = k;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if args.pooled_se {
        cfg.pooled_se = true;
    }
    if let Some(d) = &args.std_denominator {
        cfg.std_denominator = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

enum Mode {
    Cv,
    Compare,
    Diagnose,
}

fn run(args: &RunArgs, mode: Mode) -> CliResult<ExitCode> {
    let mut cfg = config_from(args)?;
    if matches!(mode, Mode::Compare) {
        cfg.compare = true;
    }
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let result = run_experiment(&cfg)?;
    match mode {
        Mode::Diagnose => {
            for (name, csv) in result.diagnostics()? {
                write_file(&out_dir, &format!("diagnostics/{name}"), &csv)?;
            }
        }
        Mode::Cv | Mode::Compare => {
            write_file(&out_dir, "results.json", &result.results_json())?;
            write_file(&out_dir, "results.md", &result.results_md())?;
            if result.config.compare {
                write_file(&out_dir, "comparisons.json", &result.comparisons_json()?)?;
            }
            print!("{}", result.results_md());
        }
    }
    Ok(if result.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn decision_json(r: &ComparisonResult, alpha: f64, extra: Object) -> String {
    extra
        .num("statistic", r.statistic)
        .num("p_value", r.p_value)
        .raw("n", r.n.to_string())
        .str("test", r.test.name())
        .str("alpha_decision", if r.p_value < alpha { "reject" } else { "retain" })
        .num("alpha", alpha)
        .render()
        + "\n"
}

fn emit(out: &Option<PathBuf>, file: &str, text: &str) -> CliResult<()> {
    print!("{text}");
    match out {
        Some(dir) => write_file(dir, file, text),
        None => Ok(()),
    }
}

/// Random train/test split of the rows with the given training share.
fn split_rows(data: &Dataset, frac: f64, seed: u64) -> CliResult<(Dataset, Dataset)> {
    let n = data.n_rows();
    let m = (frac * n as f64).round() as usize;
    if m < 2 || n - m < 2 {
        return Err(CliError::Config(format!("split {frac} leaves fewer than two rows on one side of {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeds::rng(seed));
    let (mut train, mut test) = (idx[..m].to_vec(), idx[m..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.subset(&train), data.subset(&test)))
}

fn indep(args: &TestArgs) -> CliResult<ExitCode> {
    let data = load_csv(&args.data, &args.target)?;
    let specs = split_top_level(&args.models);
    let (informed, uninformed) = match specs.as_slice() {
        [a] => (parse_model_spec(a)?.build(), ProbEstimator::normal_baseline()),
        [a, b] => (parse_model_spec(a)?.build(), parse_model_spec(b)?.build()),
        _ => return Err(CliError::Config("`--models` takes an informed and optionally an uninformed model".into())),
    };
    let loss: Loss = parse_loss(&args.loss)?;
    let test: TestKind = args.test.parse()?;
    let std_denominator = parse_std_denominator(args.std_denominator.as_deref().unwrap_or("n"))?;
    let (train, held_out) = split_rows(&data, args.split, seeds::derive(args.seed, "split"))?;
    let opts = FitOptions { std_denominator, ..FitOptions::new(seeds::derive(args.seed, "fit")) };
    let report = predictive_independence_test(&train, &held_out, &informed, &uninformed, &loss, test, &opts)?;
    let text = decision_json(&report.comparison, args.alpha, Object::new().str("informed", &informed.to_string()).str("uninformed", &uninformed.to_string()));
    emit(&args.out, "indep.json", &text)?;
    Ok(ExitCode::SUCCESS)
}

fn twosample(args: &TestArgs) -> CliResult<ExitCode> {
    let data = load_csv(&args.data, &args.target)?;
    let mut groups: Vec<f64> = data.y.clone();
    groups.sort_by(f64::total_cmp);
    groups.dedup();
    let [first, _] = groups[..] else {
        return Err(CliError::Config(format!("`{}` must take exactly two values, found {}", args.target, groups.len())));
    };
    let rows = |g: bool| -> DMatrix<f64> {
        let idx: Vec<usize> = (0..data.n_rows()).filter(|&i| (data.y[i] == first) == g).collect();
        data.subset(&idx).x
    };
    let opts = TwoSampleOptions { split: args.split, test: args.test.parse()?, ..TwoSampleOptions::new(args.seed) };
    let report = two_sample_test(&rows(true), &rows(false), &opts)?;
    let mut extra = Object::new().num("entropy", report.entropy);
    if let Some(k) = report.k {
        extra = extra.raw("k", k.to_string());
    }
    emit(&args.out, "twosample.json", &decision_json(&report.comparison, args.alpha, extra))?;
    Ok(ExitCode::SUCCESS)
}

fn parse_check(models: &str) -> ExitCode {
    let mut ok = true;
    for spec in split_top_level(models) {
        match parse_model_spec(&spec) {
            Ok(tree) => println!("{tree}"),
            Err(e) => {
                ok = false;
                eprintln!("{}", e.pointer(&spec).unwrap_or_else(|| e.to_string()));
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Cv(a) => run(a, Mode::Cv),
        Command::Compare(a) => run(a, Mode::Compare),
        Command::Diagnose(a) => run(a, Mode::Diagnose),
        Command::Indep(a) => indep(a),
        Command::Twosample(a) => twosample(a),
        Command::ParseCheck { models } => return parse_check(models),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
