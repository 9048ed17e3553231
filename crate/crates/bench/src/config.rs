//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::Spanned;
use wendland_core::datasets::{CIRCLES_FACTOR, CIRCLES_NOISE, MOONS_NOISE, TOY_SAMPLES, TOY_TRAIN_FRACTION};
use wendland_core::nn::OptimizerKind;
use wendland_core::ActivationSpec;

use crate::BenchError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Sine,
    Moons,
    Circles,
    Mnist,
    Fashion,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [Self::Sine, Self::Moons, Self::Circles, Self::Mnist, Self::Fashion];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sine => "sine",
            Self::Moons => "moons",
            Self::Circles => "circles",
            Self::Mnist => "mnist",
            Self::Fashion => "fashion",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name.to_ascii_lowercase())
    }

    pub fn is_classification(self) -> bool {
        self != Self::Sine
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Sine {
        samples: usize,
        range: (f64, f64),
        noise_sd: f64,
        train_fraction: f64,
        grid_points: usize,
    },
    Toy {
        samples: usize,
        noise_sd: f64,
        /// Inner radius; circles only.
        factor: f64,
        train_fraction: f64,
    },
    Idx {
        dir: PathBuf,
        train_samples: usize,
        test_samples: usize,
        stratified: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub repetitions: usize,
    pub activations: Vec<ActivationSpec>,
    pub widths: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub output_dir: PathBuf,
    pub data: DataSpec,
    /// SHA-256 of the configuration text, hex encoded.
    pub digest: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    experiment: ExperimentKind,
    seed: u64,
    repetitions: usize,
    activations: Vec<Spanned<String>>,
    widths: Vec<usize>,
    epochs: usize,
    batch_size: usize,
    output_dir: PathBuf,
    optimizer: RawOptimizer,
    #[serde(default)]
    data: RawData,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawOptimizer {
    Sgd {
        lr: f64,
        #[serde(default)]
        momentum: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    samples: Option<usize>,
    range: Option<[f64; 2]>,
    noise_sd: Option<f64>,
    factor: Option<f64>,
    train_fraction: Option<f64>,
    grid_points: Option<usize>,
    dir: Option<PathBuf>,
    train_samples: Option<usize>,
    test_samples: Option<usize>,
    stratified: Option<bool>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn config_error(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

impl RawData {
    fn reject(&self, experiment: ExperimentKind, keys: &[(&str, bool)]) -> Result<(), BenchError> {
        match keys.iter().find(|(_, present)| *present) {
            Some((key, _)) => Err(config_error(format!(
                "data.{key} does not apply to the {} experiment",
                experiment.name()
            ))),
            None => Ok(()),
        }
    }

    fn resolve(self, experiment: ExperimentKind) -> Result<DataSpec, BenchError> {
        let fraction = |f: Option<f64>| -> Result<f64, BenchError> {
            let f = f.unwrap_or(TOY_TRAIN_FRACTION);
            if f > 0.0 && f < 1.0 {
                Ok(f)
            } else {
                Err(config_error(format!("data.train_fraction must lie in (0, 1), got {f}")))
            }
        };
        let idx_keys = [
            ("dir", self.dir.is_some()),
            ("train_samples", self.train_samples.is_some()),
            ("test_samples", self.test_samples.is_some()),
            ("stratified", self.stratified.is_some()),
        ];
        match experiment {
            ExperimentKind::Sine => {
                self.reject(experiment, &idx_keys)?;
                self.reject(experiment, &[("factor", self.factor.is_some())])?;
                let [lo, hi] = self.range.unwrap_or(SINE_RANGE);
                Ok(DataSpec::Sine {
                    samples: self.samples.unwrap_or(SINE_SAMPLES),
                    range: (lo, hi),
                    noise_sd: self.noise_sd.unwrap_or(0.0),
                    train_fraction: fraction(self.train_fraction)?,
                    grid_points: self.grid_points.unwrap_or(SINE_GRID_POINTS).max(2),
                })
            }
            ExperimentKind::Moons | ExperimentKind::Circles => {
                self.reject(experiment, &idx_keys)?;
                self.reject(
                    experiment,
                    &[("range", self.range.is_some()), ("grid_points", self.grid_points.is_some())],
                )?;
                let moons = experiment == ExperimentKind::Moons;
                if moons {
                    self.reject(experiment, &[("factor", self.factor.is_some())])?;
                }
                Ok(DataSpec::Toy {
                    samples: self.samples.unwrap_or(TOY_SAMPLES),
                    noise_sd: self.noise_sd.unwrap_or(if moons { MOONS_NOISE } else { CIRCLES_NOISE }),
                    factor: self.factor.unwrap_or(CIRCLES_FACTOR),
                    train_fraction: fraction(self.train_fraction)?,
                })
            }
            ExperimentKind::Mnist | ExperimentKind::Fashion => {
                self.reject(
                    experiment,
                    &[
                        ("samples", self.samples.is_some()),
                        ("range", self.range.is_some()),
                        ("noise_sd", self.noise_sd.is_some()),
                        ("factor", self.factor.is_some()),
                        ("train_fraction", self.train_fraction.is_some()),
                        ("grid_points", self.grid_points.is_some()),
                    ],
                )?;
                let default_dir = if experiment == ExperimentKind::Mnist { "data/mnist" } else { "data/fashion" };
                Ok(DataSpec::Idx {
                    dir: self.dir.unwrap_or_else(|| PathBuf::from(default_dir)),
                    train_samples: self.train_samples.unwrap_or(MNIST_TRAIN),
                    test_samples: self.test_samples.unwrap_or(MNIST_TEST),
                    stratified: self.stratified.unwrap_or(true),
                })
            }
        }
    }
}

const SINE_RANGE: [f64; 2] = [-std::f64::consts::PI, std::f64::consts::PI];
const SINE_SAMPLES: usize = 1000;
const SINE_GRID_POINTS: usize = 201;
const MNIST_TRAIN: usize = 10_000;
const MNIST_TEST: usize = 2_000;

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_error(e.to_string().trim_end().to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(config_error(format!(
                "unsupported schema_version {} (this build reads version {SCHEMA_VERSION})",
                raw.schema_version
            )));
        }
        if raw.repetitions == 0 {
            return Err(config_error("repetitions must be at least 1"));
        }
        if raw.batch_size == 0 {
            return Err(config_error("batch_size must be at least 1"));
        }
        if raw.activations.is_empty() {
            return Err(config_error("activations must list at least one activation"));
        }
        let mut activations = Vec::with_capacity(raw.activations.len());
        for entry in &raw.activations {
            let spec: ActivationSpec = entry.get_ref().parse().map_err(|e| {
                config_error(format!("line {}: {e}", line_of(text, entry.span().start)))
            })?;
            activations.push(spec);
        }
        let experiment = raw.experiment;
        let (inputs, outputs) = match experiment {
            ExperimentKind::Sine => (1, 1),
            ExperimentKind::Moons | ExperimentKind::Circles => (2, 2),
            ExperimentKind::Mnist | ExperimentKind::Fashion => (784, 10),
        };
        if raw.widths.len() < 2 || raw.widths.contains(&0) {
            return Err(config_error(format!("widths must hold at least two positive entries, got {:?}", raw.widths)));
        }
        if raw.widths[0] != inputs || raw.widths[raw.widths.len() - 1] != outputs {
            return Err(config_error(format!(
                "widths {:?} must start with {inputs} and end with {outputs} for the {} experiment",
                raw.widths,
                experiment.name()
            )));
        }
        let optimizer = match raw.optimizer {
            RawOptimizer::Sgd { lr, momentum } => OptimizerKind::Sgd { lr, momentum },
            RawOptimizer::Adam { lr, beta1, beta2, eps } => OptimizerKind::Adam { lr, beta1, beta2, eps },
        };
        optimizer.validate().map_err(|e| config_error(e.to_string()))?;
        let data = raw.data.resolve(experiment)?;
        Ok(Self {
            experiment,
            seed: raw.seed,
            repetitions: raw.repetitions,
            activations,
            widths: raw.widths,
            epochs: raw.epochs,
            batch_size: raw.batch_size,
            optimizer,
            output_dir: raw.output_dir,
            data,
            digest: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            BenchError::Config(msg) => config_error(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Commented starter configuration for `experiment`.
pub fn default_config_text(experiment: ExperimentKind) -> String {
    let (activations, widths, epochs, batch, lr, data) = match experiment {
        ExperimentKind::Sine => (
            vec!["ewend(alpha=1.0,k=4,lambda=0.1,beta=1.0,eps=0.01,mode=elem)", "tanh", "relu", "sigmoid"],
            "[1, 64, 64, 1]",
            600,
            256,
            "1e-3",
            format!(
                "# 1-D regression of y = sin(x) + noise with x uniform on `range`.\n\
                 samples = {SINE_SAMPLES}\n\
                 range = [-3.141592653589793, 3.141592653589793]\n\
                 noise_sd = 0.0\n\
                 train_fraction = {TOY_TRAIN_FRACTION:?}\n\
                 # evenly spaced points on `range` for predictions.csv\n\
                 grid_points = {SINE_GRID_POINTS}\n"
            ),
        ),
        ExperimentKind::Moons | ExperimentKind::Circles => {
            let moons = experiment == ExperimentKind::Moons;
            let mut data = format!(
                "samples = {TOY_SAMPLES}\nnoise_sd = {:?}\ntrain_fraction = {TOY_TRAIN_FRACTION:?}\n",
                if moons { MOONS_NOISE } else { CIRCLES_NOISE }
            );
            if !moons {
                data.push_str(&format!("# radius of the inner circle, in (0, 1)\nfactor = {CIRCLES_FACTOR:?}\n"));
            }
            (
                vec!["ewend(alpha=1.0,k=4,lambda=0.1,beta=1.0,eps=0.01,mode=elem)", "relu", "tanh"],
                "[2, 32, 32, 2]",
                200,
                32,
                "1e-3",
                data,
            )
        }
        ExperimentKind::Mnist | ExperimentKind::Fashion => (
            vec![
                "relu",
                "relu6",
                "lrelu",
                "rrelu",
                "elu",
                "celu",
                "swish",
                "prelu",
                "srelu",
                "ewend(alpha=0.5,k=4,lambda=0.1,beta=1.0,eps=0.01,mode=elem,train=all)",
            ],
            "[784, 256, 10]",
            5,
            32,
            "1e-3",
            format!(
                "# directory holding train-images-idx3-ubyte, train-labels-idx1-ubyte,\n\
                 # t10k-images-idx3-ubyte and t10k-labels-idx1-ubyte\n\
                 dir = \"{}\"\n\
                 # drawn from the training files and the t10k files respectively\n\
                 train_samples = {MNIST_TRAIN}\n\
                 test_samples = {MNIST_TEST}\n\
                 stratified = true\n",
                if experiment == ExperimentKind::Mnist { "data/mnist" } else { "data/fashion" }
            ),
        ),
    };
    let list: Vec<String> = activations.iter().map(|a| format!("  \"{a}\",")).collect();
    format!(
        "# wendbench configuration for the {name} experiment.\n\
         schema_version = {SCHEMA_VERSION}\n\
         experiment = \"{name}\"\n\
         seed = 7\n\
         # independent trainings per activation; summaries use the sample standard deviation\n\
         repetitions = 1\n\
         # activation text encodings, see `wendbench list-activations`\n\
         activations = [\n{list}\n]\n\
         # layer widths; every hidden layer uses the activation under test\n\
         widths = {widths}\n\
         epochs = {epochs}\n\
         batch_size = {batch}\n\
         output_dir = \"out/{name}\"\n\
         \n\
         [optimizer]\n\
         # \"adam\" (lr, beta1, beta2, eps) or \"sgd\" (lr, momentum)\n\
         kind = \"adam\"\n\
         lr = {lr}\n\
         beta1 = 0.9\n\
         beta2 = 0.999\n\
         eps = 1e-8\n\
         \n\
         [data]\n\
         {data}",
        name = experiment.name(),
        list = list.join("\n"),
    )
}
