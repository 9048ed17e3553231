//! Synthetic generators for the toy tasks and an IDX (MNIST format) loader.
//!
//! Every [`Dataset`] carries a provenance string naming its generator and
//! seed, or the SHA-256 digests of the files it was read from.

mod idx;
mod synthetic;

use thiserror::Error;

use crate::nn::{NnError, Samples, Targets};
use crate::rng::Rng;
use crate::tensor::{Tensor, TensorError};

pub use idx::{
    encode_idx_images, encode_idx_labels, load_idx, parse_idx_images, parse_idx_labels, IdxImages, IMAGES_MAGIC, LABELS_MAGIC,
};
pub use synthetic::{
    circles_point, make_circles, make_moons, moons_point, sample_sine, CIRCLES_FACTOR, CIRCLES_NOISE, MOONS_NOISE,
    TOY_SAMPLES, TOY_TRAIN_FRACTION,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {reason} at byte offset {offset}")]
    Parse { path: String, offset: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Train/test row indices. The two sets are disjoint and together cover
/// every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Tensor,
    pub labels: Targets,
    pub split: Option<Split>,
    pub provenance: String,
    /// Row indices in the dataset this one was drawn from, if any.
    pub source_rows: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(features: Tensor, labels: Targets, provenance: impl Into<String>) -> Result<Self, DatasetError> {
        if features.rank() != 2 || features.rows() != labels.len() {
            return Err(DatasetError::Config(format!(
                "{} labels for features of shape {:?}",
                labels.len(),
                features.shape()
            )));
        }
        Ok(Self {
            features,
            labels,
            split: None,
            provenance: provenance.into(),
            source_rows: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of classes (largest label + 1); `None` for regression targets.
    pub fn num_classes(&self) -> Option<usize> {
        match &self.labels {
            Targets::Classes(c) => Some(c.iter().max().map_or(0, |m| m + 1)),
            Targets::Values(_) => None,
        }
    }

    /// Replaces the split with the given one after checking it partitions the rows.
    pub fn with_split(mut self, split: Split) -> Result<Self, DatasetError> {
        let mut seen = vec![false; self.len()];
        for &i in split.train.iter().chain(&split.test) {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(DatasetError::Config(format!("split index {i} is out of range or repeated")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(DatasetError::Config("split does not cover every row".into()));
        }
        self.split = Some(split);
        Ok(self)
    }

    /// Seeded random split with `round(train_fraction * n)` training rows.
    pub fn split_random(self, train_fraction: f64, rng: &mut Rng) -> Result<Self, DatasetError> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(DatasetError::Config(format!(
                "train fraction must lie in [0, 1], got {train_fraction}"
            )));
        }
        let mut order = rng.permutation(self.len());
        let n_train = (train_fraction * self.len() as f64).round() as usize;
        let test = order.split_off(n_train);
        self.with_split(Split { train: order, test })
    }

    /// The given rows as training samples.
    pub fn rows(&self, indices: &[usize]) -> Result<Samples, DatasetError> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(DatasetError::Config(format!("row {bad} out of range for {} rows", self.len())));
        }
        Ok(Samples {
            features: self.features.select_rows(indices)?,
            targets: self.labels.select(indices).map_err(nn_config)?,
        })
    }

    /// Training and test samples according to the split.
    pub fn train_test(&self) -> Result<(Samples, Option<Samples>), DatasetError> {
        let split = self
            .split
            .as_ref()
            .ok_or_else(|| DatasetError::Config("dataset has no train/test split".into()))?;
        let test = if split.test.is_empty() { None } else { Some(self.rows(&split.test)?) };
        Ok((self.rows(&split.train)?, test))
    }
}

fn nn_config(e: NnError) -> DatasetError {
    DatasetError::Config(e.to_string())
}

/// Largest-remainder allocation of `total` items across groups of the given
/// sizes, proportional to size. Ties go to the lower group index.
fn allocate(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let mut quota: Vec<usize> = sizes.iter().map(|&s| s * total / n).collect();
    let mut rest: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(i, &s)| (s * total % n, i)).collect();
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut missing = total - quota.iter().sum::<usize>();
    for &(_, i) in &rest {
        if missing == 0 {
            break;
        }
        if quota[i] < sizes[i] {
            quota[i] += 1;
            missing -= 1;
        }
    }
    quota
}

/// Draws `n_train + n_test` distinct rows. The result holds the training
/// rows first, then the test rows, with the split recorded accordingly and
/// the original indices in [`Dataset::source_rows`]. With `stratified`, each
/// class contributes to both parts in proportion to its frequency.
pub fn subsample(
    ds: &Dataset,
    n_train: usize,
    n_test: usize,
    stratified: bool,
    rng: &mut Rng,
) -> Result<Dataset, DatasetError> {
    let n = ds.len();
    if n_train + n_test > n {
        return Err(DatasetError::Config(format!(
            "cannot draw {n_train} + {n_test} rows from a dataset of {n}"
        )));
    }
    let (mut train, mut test) = if stratified {
        let Targets::Classes(classes) = &ds.labels else {
            return Err(DatasetError::Config("stratified sampling needs class labels".into()));
        };
        let k = ds.num_classes().unwrap_or(0);
        let mut pools: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &c) in classes.iter().enumerate() {
            pools[c].push(i);
        }
        let sizes: Vec<usize> = pools.iter().map(Vec::len).collect();
        let train_quota = allocate(&sizes, n_train);
        let left: Vec<usize> = sizes.iter().zip(&train_quota).map(|(s, q)| s - q).collect();
        let test_quota = allocate(&left, n_test);
        let (mut train, mut test) = (Vec::with_capacity(n_train), Vec::with_capacity(n_test));
        for ((pool, &a), &b) in pools.iter_mut().zip(&train_quota).zip(&test_quota) {
            rng.shuffle(pool);
            train.extend_from_slice(&pool[..a]);
            test.extend_from_slice(&pool[a..a + b]);
        }
        (train, test)
    } else {
        let order = rng.permutation(n);
        (order[..n_train].to_vec(), order[n_train..n_train + n_test].to_vec())
    };
    rng.shuffle(&mut train);
    rng.shuffle(&mut test);
    let mut source = train;
    source.append(&mut test);
    let features = ds.features.select_rows(&source)?;
    let labels = ds.labels.select(&source).map_err(nn_config)?;
    let provenance = format!(
        "{}; subsample(train={n_train}, test={n_test}, stratified={stratified}, seed={})",
        ds.provenance,
        rng.seed()
    );
    let mut out = Dataset::new(features, labels, provenance)?.with_split(Split {
        train: (0..n_train).collect(),
        test: (n_train..n_train + n_test).collect(),
    })?;
    out.source_rows = Some(source);
    Ok(out)
}
