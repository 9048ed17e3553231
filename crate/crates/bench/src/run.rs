//! Experiment execution.
//!
//! Each (activation, repetition) pair is one training job. Jobs run one after
//! another in configuration order. Seeds are derived from the root seed:
//! substream 1 builds the data, substream `100 + rep` draws initial weights
//! and substream `200 + rep` drives shuffling and RReLU noise, so every
//! activation in a repetition starts from the same weights and batch order.

use std::path::{Path, PathBuf};
use std::time::Instant;

use wendland_core::datasets::{load_idx, make_circles, make_moons, sample_sine, subsample, Dataset};
use wendland_core::nn::{train, Divergence, EpochRecord, LossKind, Network, Samples, TrainConfig};
use wendland_core::{ActivationSpec, Rng, Tensor};

use crate::config::{DataSpec, ExperimentConfig, ExperimentKind};
use crate::output::{float, optional, preamble, seconds, write_csv};
use crate::BenchError;

const DATA_STREAM: u64 = 1;
const INIT_STREAM: u64 = 100;
const TRAIN_STREAM: u64 = 200;

pub const IDX_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

#[derive(Debug, Clone)]
pub struct JobResult {
    pub activation: usize,
    pub repetition: usize,
    pub records: Vec<EpochRecord>,
    pub divergence: Option<Divergence>,
    pub network: Network,
}

impl JobResult {
    pub fn final_record(&self) -> Option<&EpochRecord> {
        if self.divergence.is_some() {
            None
        } else {
            self.records.last()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub jobs: Vec<JobResult>,
    /// `activation rep N: reason` for every job that stopped early.
    pub diverged: Vec<String>,
}

impl RunSummary {
    /// Final test metric (accuracy for classification, loss otherwise) of
    /// each job, `None` if it diverged.
    pub fn final_metric(&self, activation: usize, repetition: usize, classification: bool) -> Option<f64> {
        let job = self
            .jobs
            .iter()
            .find(|j| j.activation == activation && j.repetition == repetition)?;
        let rec = job.final_record()?;
        if classification {
            rec.test_accuracy
        } else {
            rec.test_loss
        }
    }
}

struct Prepared {
    train: Samples,
    test: Option<Samples>,
    loss: LossKind,
    provenance: String,
}

fn split_samples(ds: Dataset, train_fraction: f64, rng: &mut Rng) -> Result<(Samples, Option<Samples>, String), BenchError> {
    let provenance = ds.provenance.clone();
    let ds = ds.split_random(train_fraction, rng)?;
    let (train, test) = ds.train_test()?;
    let provenance = format!("{provenance}; split(train_fraction={train_fraction:?})");
    Ok((train, test, provenance))
}

fn idx_paths(dir: &Path) -> Result<[PathBuf; 4], BenchError> {
    let paths = IDX_FILES.map(|f| dir.join(f));
    if let Some(missing) = paths.iter().find(|p| !p.is_file()) {
        return Err(BenchError::Config(format!(
            "IDX file {} not found (expected {} in {})",
            missing.display(),
            IDX_FILES.join(", "),
            dir.display()
        )));
    }
    Ok(paths)
}

fn prepare(cfg: &ExperimentConfig, root: &Rng) -> Result<Prepared, BenchError> {
    let mut rng = root.substream(DATA_STREAM);
    match &cfg.data {
        DataSpec::Sine {
            samples,
            range,
            noise_sd,
            train_fraction,
            ..
        } => {
            let ds = sample_sine(*samples, *range, *noise_sd, &mut rng)?;
            let (train, test, provenance) = split_samples(ds, *train_fraction, &mut rng)?;
            Ok(Prepared { train, test, loss: LossKind::Mse, provenance })
        }
        DataSpec::Toy {
            samples,
            noise_sd,
            factor,
            train_fraction,
        } => {
            let ds = if cfg.experiment == ExperimentKind::Moons {
                make_moons(*samples, *noise_sd, &mut rng)?
            } else {
                make_circles(*samples, *noise_sd, *factor, &mut rng)?
            };
            let (train, test, provenance) = split_samples(ds, *train_fraction, &mut rng)?;
            Ok(Prepared {
                train,
                test,
                loss: LossKind::SoftmaxCrossEntropy,
                provenance,
            })
        }
        DataSpec::Idx {
            dir,
            train_samples,
            test_samples,
            stratified,
        } => {
            let [ti, tl, ei, el] = idx_paths(dir)?;
            let train_all = load_idx(&ti, &tl)?;
            let test_all = load_idx(&ei, &el)?;
            let train_ds = subsample(&train_all, *train_samples, 0, *stratified, &mut rng)?;
            drop(train_all);
            let test_ds = subsample(&test_all, *test_samples, 0, *stratified, &mut rng)?;
            let provenance = format!("train: {}; test: {}", train_ds.provenance, test_ds.provenance);
            let train = train_ds.train_test()?.0;
            let test = if *test_samples > 0 { Some(test_ds.train_test()?.0) } else { None };
            Ok(Prepared {
                train,
                test,
                loss: LossKind::SoftmaxCrossEntropy,
                provenance,
            })
        }
    }
}

fn run_job(
    cfg: &ExperimentConfig,
    data: &Prepared,
    root: &Rng,
    activation: usize,
    repetition: usize,
) -> Result<JobResult, BenchError> {
    let spec = &cfg.activations[activation];
    let mut init = root.substream(INIT_STREAM + repetition as u64);
    let mut network = Network::mlp(&cfg.widths, spec, &mut init).map_err(|e| BenchError::Config(e.to_string()))?;
    let tc = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        loss: data.loss,
        optimizer: cfg.optimizer,
    };
    let mut rng = root.substream(TRAIN_STREAM + repetition as u64);
    let report = train(&mut network, &data.train, data.test.as_ref(), &tc, &mut rng)
        .map_err(|e| BenchError::Numerical(format!("{spec} repetition {repetition}: {e}")))?;
    Ok(JobResult {
        activation,
        repetition,
        records: report.records,
        divergence: report.divergence,
        network,
    })
}

fn metrics_rows(cfg: &ExperimentConfig, jobs: &[JobResult]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for job in jobs {
        let name = cfg.activations[job.activation].to_string();
        for r in &job.records {
            let params: Vec<String> = r.activation_params.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
            rows.push(vec![
                cfg.experiment.name().to_string(),
                name.clone(),
                job.repetition.to_string(),
                r.epoch.to_string(),
                "ok".to_string(),
                float(r.train_loss),
                optional(r.test_loss),
                optional(r.test_accuracy),
                seconds(r.wall_seconds),
                params.join(";"),
            ]);
        }
        if let Some(d) = &job.divergence {
            rows.push(vec![
                cfg.experiment.name().to_string(),
                name.clone(),
                job.repetition.to_string(),
                d.epoch.to_string(),
                format!("diverged: {}", d.reason),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
    }
    rows
}

const METRIC_COLUMNS: [&str; 10] = [
    "experiment",
    "activation",
    "repetition",
    "epoch",
    "status",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "epoch_wall_seconds",
    "activation_params",
];

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// Table-1 style name when unambiguous in this run, otherwise the full encoding.
fn display_names(specs: &[ActivationSpec]) -> Vec<String> {
    specs
        .iter()
        .map(|s| {
            let same = specs.iter().filter(|o| o.kind() == s.kind()).count();
            if same == 1 {
                s.kind().label().to_string()
            } else {
                s.to_string()
            }
        })
        .collect()
}

fn summary_rows(cfg: &ExperimentConfig, jobs: &[JobResult]) -> Vec<Vec<String>> {
    (0..cfg.activations.len())
        .map(|a| {
            let mine: Vec<&JobResult> = jobs.iter().filter(|j| j.activation == a).collect();
            let finals: Vec<&EpochRecord> = mine.iter().filter_map(|j| j.final_record()).collect();
            let acc: Vec<f64> = finals.iter().filter_map(|r| r.test_accuracy).collect();
            let loss: Vec<f64> = finals.iter().filter_map(|r| r.test_loss).collect();
            let secs: Vec<f64> = mine
                .iter()
                .filter(|j| j.divergence.is_none())
                .map(|j| j.records.iter().map(|r| r.wall_seconds).sum())
                .collect();
            let (am, asd) = mean_sd(&acc);
            let (lm, lsd) = mean_sd(&loss);
            let (tm, tsd) = mean_sd(&secs);
            let failed = mine.len() - finals.len();
            vec![
                cfg.activations[a].to_string(),
                mine.len().to_string(),
                if failed == 0 { "ok".to_string() } else { format!("diverged in {failed}") },
                optional(am),
                optional(asd),
                optional(lm),
                optional(lsd),
                tm.map(seconds).unwrap_or_default(),
                tsd.map(seconds).unwrap_or_default(),
            ]
        })
        .collect()
}

fn prediction_rows(jobs: &[JobResult], grid: &Tensor) -> Result<Vec<Vec<String>>, BenchError> {
    let mut columns: Vec<Vec<String>> = Vec::new();
    for job in jobs.iter().filter(|j| j.repetition == 0) {
        let col = match job.divergence {
            Some(_) => vec![String::new(); grid.rows()],
            None => job
                .network
                .predict(grid)
                .map_err(|e| BenchError::Numerical(e.to_string()))?
                .data()
                .iter()
                .map(|&v| float(v))
                .collect(),
        };
        columns.push(col);
    }
    Ok(grid
        .data()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut row = vec![float(x), float(x.sin())];
            row.extend(columns.iter().map(|c| c[i].clone()));
            row
        })
        .collect())
}

/// Runs every job of `cfg` and writes its CSV files into the output
/// directory. Divergent jobs are recorded and do not stop the run.
pub fn run_experiment(cfg: &ExperimentConfig, verbose: bool) -> Result<RunSummary, BenchError> {
    let root = Rng::new(cfg.seed);
    let data = prepare(cfg, &root)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| BenchError::Io {
        path: cfg.output_dir.display().to_string(),
        source,
    })?;

    let mut jobs = Vec::new();
    let mut diverged = Vec::new();
    for a in 0..cfg.activations.len() {
        for rep in 0..cfg.repetitions {
            let start = Instant::now();
            let job = run_job(cfg, &data, &root, a, rep)?;
            let name = &cfg.activations[a];
            if let Some(d) = &job.divergence {
                diverged.push(format!("{name} rep {rep}: epoch {}: {}", d.epoch, d.reason));
            }
            if verbose {
                let last = job.records.last();
                eprintln!(
                    "[{}] {name} rep {rep}: {} test_loss={} test_accuracy={} ({:.1} s)",
                    cfg.experiment.name(),
                    job.divergence.as_ref().map_or("ok".to_string(), |d| format!("diverged at epoch {}", d.epoch)),
                    optional(last.and_then(|r| r.test_loss)),
                    optional(last.and_then(|r| r.test_accuracy)),
                    start.elapsed().as_secs_f64()
                );
            }
            jobs.push(job);
        }
    }

    let comments = preamble(cfg, &data.provenance);
    let mut files = Vec::new();
    let metrics = cfg.output_dir.join("metrics.csv");
    write_csv(&metrics, &comments, &METRIC_COLUMNS, &metrics_rows(cfg, &jobs))?;
    files.push(metrics);

    match (&cfg.data, cfg.experiment) {
        (DataSpec::Sine { range: (lo, hi), grid_points, .. }, _) => {
            let n = *grid_points;
            let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
            let grid = Tensor::new(&[n, 1], xs).map_err(|e| BenchError::Config(e.to_string()))?;
            let mut columns = vec!["x".to_string(), "sin_x".to_string()];
            columns.extend(cfg.activations.iter().map(|a| a.to_string()));
            let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
            let mut c = comments.clone();
            c.push("predictions of repetition 0 on an evenly spaced grid".into());
            let path = cfg.output_dir.join("predictions.csv");
            write_csv(&path, &c, &cols, &prediction_rows(&jobs, &grid)?)?;
            files.push(path);
        }
        (_, ExperimentKind::Moons | ExperimentKind::Circles) => {
            let path = cfg.output_dir.join("summary.csv");
            let cols = [
                "activation",
                "repetitions",
                "status",
                "test_accuracy_mean",
                "test_accuracy_sd",
                "test_loss_mean",
                "test_loss_sd",
                "mean_train_seconds",
                "sd_train_seconds",
            ];
            let mut c = comments.clone();
            c.push("final-epoch test metrics; sd is the sample standard deviation over repetitions".into());
            write_csv(&path, &c, &cols, &summary_rows(cfg, &jobs))?;
            files.push(path);
        }
        _ => {
            let names = display_names(&cfg.activations);
            let mut order: Vec<usize> = (0..cfg.activations.len()).collect();
            order.sort_by_key(|&a| cfg.activations[a].kind().table_order().unwrap_or(usize::MAX));
            let rows: Vec<Vec<String>> = order
                .iter()
                .map(|&a| {
                    let acc: Vec<f64> = (0..cfg.repetitions)
                        .filter_map(|r| {
                            jobs.iter()
                                .find(|j| j.activation == a && j.repetition == r)
                                .and_then(|j| j.final_record())
                                .and_then(|rec| rec.test_accuracy)
                        })
                        .collect();
                    let value = if acc.len() == cfg.repetitions { mean_sd(&acc).0 } else { None };
                    vec![names[a].clone(), optional(value)]
                })
                .collect();
            let mut c = comments.clone();
            c.push("final test accuracy (mean over repetitions), rows in Table 1 order; blank if a run diverged".into());
            let path = cfg.output_dir.join("accuracy.csv");
            write_csv(&path, &c, &["activation", "accuracy"], &rows)?;
            files.push(path);
        }
    }
    Ok(RunSummary { files, jobs, diverged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[7.0]), (Some(7.0), None));
        assert_eq!(mean_sd(&[]), (None, None));
    }

    #[test]
    fn names_fall_back_to_encoding() {
        let specs: Vec<ActivationSpec> = ["relu", "ewend", "ewend(alpha=2.0)"].iter().map(|s| s.parse().unwrap()).collect();
        let names = display_names(&specs);
        assert_eq!(names[0], "ReLU");
        assert!(names[1].starts_with("ewend(") && names[2].contains("alpha=2.0"));
    }
}
