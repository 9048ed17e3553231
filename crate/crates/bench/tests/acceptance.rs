//! Acceptance suite. Every criterion runs inside one test so the report comes
//! out as a single block of PASS/FAIL lines; the test fails if any line does.
//!
//! The MNIST criteria read the four IDX files from `$MNIST_DIR`, falling back
//! to `data/mnist` at the workspace root.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use wendland_bench::gradcheck::run_suite;
use wendland_bench::output::strip_timing;
use wendland_bench::{default_config_text, run_experiment, DataSpec, ExperimentConfig, ExperimentKind, RunSummary};
use wendland_core::activation::{enhanced_forward, enhanced_radial, enhanced_radial_dr, radial_parts, wendland_c0, wendland_c2, wendland_c4};
use wendland_core::datasets::{encode_idx_images, encode_idx_labels, load_idx, DatasetError, IMAGES_MAGIC};
use wendland_core::{ActivationKind, ActivationSpec, EnhancedWendlandParams, NormMode, Rng, Tensor};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn within(limit: Duration, started: Instant, detail: &mut String) -> bool {
    let took = started.elapsed();
    let _ = write!(detail, " [{:.1} s, limit {} s]", took.as_secs_f64(), limit.as_secs());
    took < limit
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn config(kind: ExperimentKind, out: &Path, edit: impl Fn(String) -> String) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(&edit(default_config_text(kind))).expect("config parses");
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn position(cfg: &ExperimentConfig, kind: ActivationKind) -> usize {
    cfg.activations.iter().position(|a| a.kind() == kind).expect("activation present")
}

fn gradient_fidelity() -> Outcome {
    let started = Instant::now();
    let lines = run_suite(20240, 1000);
    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.name.as_str()).collect();
    let worst = lines.iter().map(|l| l.max_rel_error).fold(0.0, f64::max);
    let covered = ActivationKind::ALL
        .iter()
        .all(|k| lines.iter().any(|l| l.name.contains(&ActivationSpec::default_for(*k).to_string())));
    let mut detail = format!("{} checks, worst relative error {worst:.2e}, failed {failed:?}", lines.len());
    let fast = within(Duration::from_secs(60), started, &mut detail);
    Outcome::new(failed.is_empty() && covered && fast, detail)
}

fn enhanced_structure() -> Outcome {
    let mut rng = Rng::new(2);
    let mut problems = Vec::new();
    for trial in 0..400 {
        let alpha = rng.uniform_in(0.25, 4.0);
        let k = [2, 3, 4, 6][rng.index(4)];
        let lambda = rng.uniform_in(0.0, 0.5);
        let eps = rng.uniform_in(0.0, 0.1);
        let beta = rng.uniform_in(0.1, 3.0);
        let p = EnhancedWendlandParams::new(alpha, k, lambda, beta, eps).expect("valid");
        let edge = 1.0 / p.alpha();

        for r in [edge, edge * (1.0 + 1e-12), edge + rng.uniform_in(0.0, 10.0), 1e6] {
            let parts = radial_parts(r, &p);
            if parts.wendland != 0.0 || parts.total() != parts.linear + parts.tail {
                problems.push(format!("trial {trial}: support leak at r={r}"));
            }
        }
        if enhanced_radial(0.0, &p).unwrap() != 1.0 + eps {
            problems.push(format!("trial {trial}: g(0) != 1+eps"));
        }

        let x = Tensor::new(&[3, 4], (0..12).map(|_| rng.uniform_in(-3.0 * edge, 3.0 * edge)).collect()).unwrap();
        let neg = Tensor::new(&[3, 4], x.data().iter().map(|v| -v).collect()).unwrap();
        let y = enhanced_forward(&x, &p.clone().with_mode(NormMode::Elementwise)).unwrap();
        let y_neg = enhanced_forward(&neg, &p.clone().with_mode(NormMode::Elementwise)).unwrap();
        if y.data().iter().zip(y_neg.data()).any(|(a, b)| *a != -*b) {
            problems.push(format!("trial {trial}: not odd"));
        }

        let delta = 1e-9 * edge;
        let inside = enhanced_radial_dr(edge - delta, &p).unwrap();
        let outside = enhanced_radial_dr(edge + delta, &p).unwrap();
        if (inside - outside).abs() > 1e-6 {
            problems.push(format!("trial {trial}: derivative jump {:.2e} at alpha={alpha} k={k}", inside - outside));
        }
    }
    Outcome::new(problems.is_empty(), format!("400 random parameter sets, problems {problems:?}"))
}

fn classical_values() -> Outcome {
    // Direct evaluation of the closed forms.
    let oracle: [fn(f64) -> f64; 3] = [
        |r: f64| (1.0 - r).powi(2),
        |r: f64| (1.0 - r).powi(4) * (4.0 * r + 1.0),
        |r: f64| (1.0 - r).powi(6) * (35.0 * r * r + 18.0 * r + 3.0) / 3.0,
    ];
    let functions: [fn(f64) -> Result<f64, _>; 3] = [wendland_c0, wendland_c2, wendland_c4];
    let expected_half = [0.25, 0.1875, 0.108_072_916_666_666_67];
    let mut ok = true;
    let mut detail = String::new();
    for i in 0..3 {
        let at_half = functions[i](0.5).unwrap();
        ok &= (at_half - expected_half[i]).abs() < 1e-12 && (at_half - oracle[i](0.5)).abs() < 1e-12;
        ok &= functions[i](0.0).unwrap() == 1.0;
        ok &= [1.0, 1.5, 7.0, 1e9].iter().all(|&r| functions[i](r).unwrap() == 0.0);
        let _ = write!(detail, "phi{}(0.5)={at_half:.10} ", i);
    }
    Outcome::new(ok, detail.trim_end().to_string())
}

/// Window-`w` trailing moving average.
fn smoothed(values: &[f64], w: usize) -> Vec<f64> {
    values.windows(w).map(|s| s.iter().sum::<f64>() / w as f64).collect()
}

fn sine(out: &Path) -> (Outcome, Outcome) {
    let started = Instant::now();
    let cfg = config(ExperimentKind::Sine, out, |t| t);
    let summary = match run_experiment(&cfg, false) {
        Ok(s) => s,
        Err(e) => {
            let o = Outcome::new(false, format!("run failed: {e}"));
            return (o, Outcome::new(false, "no run"));
        }
    };
    let mse = |kind| summary.final_metric(position(&cfg, kind), 0, false);
    let ewend = mse(ActivationKind::EnhancedWendland);
    let tanh = mse(ActivationKind::Tanh);
    let completes = |kind| summary.jobs[position(&cfg, kind)].divergence.is_none();
    let ok = ewend.is_some_and(|m| m < 1e-2)
        && tanh.is_some_and(|m| m < 1e-2)
        && completes(ActivationKind::Relu)
        && completes(ActivationKind::Sigmoid);
    let mut detail = format!("test MSE ewend {ewend:?}, tanh {tanh:?}; relu and sigmoid completed");
    let fast = within(Duration::from_secs(120), started, &mut detail);
    let predictions = cfg.output_dir.join("predictions.csv").exists();

    let losses: Vec<f64> = summary.jobs[position(&cfg, ActivationKind::EnhancedWendland)]
        .records
        .iter()
        .take(200)
        .map(|r| r.train_loss)
        .collect();
    let s = smoothed(&losses, 10);
    let rises = s.windows(2).filter(|w| w[1] >= w[0]).count();
    let monotone = Outcome::new(
        losses.len() == 200 && rises == 0,
        format!("{} smoothed points over {} epochs, {rises} non-decreasing steps", s.len(), losses.len()),
    );
    (Outcome::new(ok && fast && predictions, detail), monotone)
}

fn toy(out: &Path) -> Outcome {
    let started = Instant::now();
    let moons = config(ExperimentKind::Moons, &out.join("moons"), |t| t);
    let mut detail = String::new();
    let mut ok = match run_experiment(&moons, false) {
        Ok(summary) => [ActivationKind::Relu, ActivationKind::Tanh, ActivationKind::EnhancedWendland]
            .into_iter()
            .all(|kind| {
                let acc = summary.final_metric(position(&moons, kind), 0, true);
                let _ = write!(detail, "moons {}={acc:?} ", kind.token());
                acc.is_some_and(|a| a >= 0.95)
            }),
        Err(e) => {
            let _ = write!(detail, "moons failed: {e} ");
            false
        }
    };

    let every: Vec<String> = ActivationKind::ALL.iter().map(|k| format!("  \"{}\",", ActivationSpec::default_for(*k))).collect();
    let circles = config(ExperimentKind::Circles, &out.join("circles"), |t| {
        let start = t.find("activations = [").unwrap();
        let end = start + t[start..].find(']').unwrap();
        format!("{}activations = [\n{}\n{}", &t[..start], every.join("\n"), &t[end..]).replace("noise_sd = 0.1", "noise_sd = 0.0")
    });
    assert!(matches!(circles.data, DataSpec::Toy { noise_sd, .. } if noise_sd == 0.0));
    match run_experiment(&circles, false) {
        Ok(summary) => {
            let short: Vec<&str> = (0..circles.activations.len())
                .filter(|&i| summary.final_metric(i, 0, true) != Some(1.0))
                .map(|i| circles.activations[i].kind().token())
                .collect();
            let _ = write!(detail, "circles below 100%: {short:?}");
            ok &= short.is_empty() && circles.activations.len() == ActivationKind::ALL.len();
        }
        Err(e) => {
            let _ = write!(detail, "circles failed: {e}");
            ok = false;
        }
    }
    let fast = within(Duration::from_secs(180), started, &mut detail);
    Outcome::new(ok && fast, detail)
}

fn mnist_config(out: &Path) -> ExperimentConfig {
    let dir = mnist_dir();
    config(ExperimentKind::Mnist, out, |t| {
        t.replace("dir = \"data/mnist\"", &format!("dir = {:?}", dir.display().to_string()))
    })
}

fn mnist(out: &Path) -> Outcome {
    let started = Instant::now();
    let cfg = mnist_config(out);
    let summary: RunSummary = match run_experiment(&cfg, false) {
        Ok(s) => s,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    let relu = summary.final_metric(position(&cfg, ActivationKind::Relu), 0, true);
    let ewend = summary.final_metric(position(&cfg, ActivationKind::EnhancedWendland), 0, true);
    let accuracy_ok = match (relu, ewend) {
        (Some(r), Some(w)) => r >= 0.94 && w >= 0.94 && (r - w).abs() <= 0.02,
        _ => false,
    };
    let table = std::fs::read_to_string(cfg.output_dir.join("accuracy.csv")).unwrap_or_default();
    let rows = strip_timing(&table).map(|r| r.len().saturating_sub(1)).unwrap_or(0);
    let all_rows = rows == 10 && summary.diverged.is_empty();
    let mut detail = format!("relu {relu:?}, ewend {ewend:?}, {rows} table rows");
    let fast = within(Duration::from_secs(15 * 60), started, &mut detail);
    Outcome::new(accuracy_ok && all_rows && fast, detail)
}

fn run_twice(cfg: &ExperimentConfig, base: &Path) -> Result<bool, String> {
    let mut outputs = Vec::new();
    for pass in ["a", "b"] {
        let mut c = cfg.clone();
        c.output_dir = base.join(pass);
        let summary = run_experiment(&c, false).map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for f in &summary.files {
            let text = std::fs::read_to_string(f).map_err(|e| e.to_string())?;
            files.push((f.file_name().unwrap().to_owned(), strip_timing(&text).map_err(|e| e.to_string())?));
        }
        outputs.push(files);
    }
    Ok(!outputs[0].is_empty() && outputs[0] == outputs[1])
}

fn determinism(out: &Path) -> Outcome {
    let acts = "activations = [\"ewend(alpha=1.0,k=4,lambda=0.1,beta=1.0,eps=0.01,mode=elem)\", \"rrelu\", \"prelu\"]";
    let shrink = |t: String, epochs: &str| {
        let start = t.find("activations = [").unwrap();
        let end = start + t[start..].find(']').unwrap() + 1;
        format!("{}{acts}{}", &t[..start], &t[end..])
            .replace("repetitions = 1", "repetitions = 2")
            .lines()
            .map(|l| if l.starts_with("epochs =") { format!("epochs = {epochs}") } else { l.to_string() })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut cases = vec![
        ("sine", config(ExperimentKind::Sine, out, |t| shrink(t, "15"))),
        ("moons", config(ExperimentKind::Moons, out, |t| shrink(t, "10"))),
    ];
    if mnist_dir().join("train-images-idx3-ubyte").exists() {
        let mut m = mnist_config(out);
        m.activations.truncate(4);
        m.epochs = 1;
        if let DataSpec::Idx { train_samples, test_samples, .. } = &mut m.data {
            *train_samples = 500;
            *test_samples = 200;
        }
        cases.push(("mnist", m));
    }
    let mut detail = String::new();
    let mut ok = true;
    for (name, cfg) in &cases {
        let same = run_twice(cfg, &out.join(name));
        let _ = write!(detail, "{name}: {same:?} ");
        ok &= same == Ok(true);
    }
    Outcome::new(ok, detail.trim_end().to_string())
}

fn idx_loader(out: &Path) -> Outcome {
    let dir = mnist_dir();
    let mut detail = String::new();
    let mut ok = true;
    for (images, labels, n) in [
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte", 60000),
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", 10000),
    ] {
        match load_idx(&dir.join(images), &dir.join(labels)) {
            Ok(ds) => {
                let _ = write!(detail, "{images}: {:?} ", ds.features.shape());
                ok &= ds.features.shape() == [n, 784] && ds.len() == n && ds.num_classes() == Some(10);
            }
            Err(e) => {
                let _ = write!(detail, "{images}: {e} ");
                ok = false;
            }
        }
    }

    let mut bad = encode_idx_images(2, 2, &[0, 64, 128, 255, 1, 2, 3, 4]);
    bad[3] = 0x01;
    let images = out.join("bad-images");
    let labels = out.join("labels");
    std::fs::write(&images, &bad).unwrap();
    std::fs::write(&labels, encode_idx_labels(&[3, 7])).unwrap();
    match load_idx(&images, &labels) {
        Err(DatasetError::Parse { offset: 0, reason, .. }) if reason.contains(&format!("{IMAGES_MAGIC:08x}")) => {
            let _ = write!(detail, "corrupted magic rejected: {reason}");
        }
        other => {
            let _ = write!(detail, "corrupted magic gave {other:?}");
            ok = false;
        }
    }
    Outcome::new(ok, detail)
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let (sine_outcome, sine_monotone) = sine(&root.join("sine"));
    let results = [
        ("1 gradient fidelity", gradient_fidelity()),
        ("2 enhanced Wendland structure", enhanced_structure()),
        ("3 classical Wendland values", classical_values()),
        ("4 sine regression", sine_outcome),
        ("4a sine smoothed training loss decreases", sine_monotone),
        ("5 toy classification", toy(&root.join("toy"))),
        ("6 MNIST-like study", mnist(&root.join("mnist"))),
        ("7 determinism", determinism(&root.join("det"))),
        ("8 IDX loader", idx_loader(root)),
    ];
    for (name, o) in &results {
        println!("{} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.passed).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
