//! Activation descriptors and their canonical text encoding.
//!
//! Grammar (whitespace around tokens is ignored, names are case-insensitive):
//!
//! ```text
//! spec   := name | name "(" [ param { "," param } ] ")"
//! param  := key "=" value
//! ```
//!
//! Omitted parameters take their defaults. The enhanced Wendland kind also
//! accepts `mode=elem | chan:<axis>` and `train=<coef>{+<coef>} | none | all`
//! with coefficients `alpha`, `lambda`, `beta`, `eps`. [`fmt::Display`] writes
//! the canonical form, for example
//! `ewend(alpha=1.0,k=4,lambda=0.1,beta=1.0,eps=0.01,mode=elem)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::enhanced::{EnhancedWendlandParams, NormMode, TrainableMask};
use super::ActivationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActivationKind {
    WendlandC0,
    WendlandC2,
    WendlandC4,
    EnhancedWendland,
    Relu,
    Relu6,
    LeakyRelu,
    Prelu,
    Rrelu,
    Elu,
    Celu,
    Swish,
    Srelu,
    SinLu,
    Frelu,
    Sigmoid,
    Tanh,
    Gelu,
}

/// One documented parameter of an activation kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSchema {
    pub key: &'static str,
    pub default: &'static str,
    pub trainable: bool,
    pub doc: &'static str,
}

const fn param(key: &'static str, default: &'static str, trainable: bool, doc: &'static str) -> ParamSchema {
    ParamSchema {
        key,
        default,
        trainable,
        doc,
    }
}

const ENHANCED_WENDLAND_SCHEMA: &[ParamSchema] = &[
    param("alpha", "1.0", true, "inverse support radius, > 0"),
    param("k", "4", false, "polynomial degree, integer in [1, 8]"),
    param("lambda", "0.1", false, "linear-term coefficient, >= 0"),
    param("beta", "1.0", false, "exponential decay rate, > 0"),
    param("eps", "0.01", false, "exponential-tail scale, >= 0"),
    param("mode", "elem", false, "elem (r = |x|) or chan:<axis> (r = L2 norm along axis)"),
    param("train", "alpha", false, "trainable coefficients: alpha+lambda+beta+eps, all, or none"),
];

const LEAKY_RELU_SCHEMA: &[ParamSchema] = &[param("slope", "0.01", false, "negative-side slope")];

const PRELU_SCHEMA: &[ParamSchema] = &[param("slope", "0.25", true, "initial negative-side slope")];

const RRELU_SCHEMA: &[ParamSchema] = &[
    param("lower", "0.125", false, "lower bound of the training slope"),
    param("upper", "0.3333333333333333", false, "upper bound of the training slope"),
];

const ELU_SCHEMA: &[ParamSchema] = &[param("alpha", "1.0", false, "negative saturation scale, > 0")];

const CELU_SCHEMA: &[ParamSchema] = &[param("alpha", "1.0", false, "negative saturation scale, > 0")];

const SWISH_SCHEMA: &[ParamSchema] = &[param("beta", "1.0", false, "gate sharpness")];

const SRELU_SCHEMA: &[ParamSchema] = &[
    param("tl", "0.0", false, "left threshold"),
    param("al", "0.2", false, "slope below the left threshold"),
    param("tr", "2.5", false, "right threshold, > tl"),
    param("ar", "0.5", false, "slope above the right threshold"),
];

const SIN_LU_SCHEMA: &[ParamSchema] = &[
    param("a", "1.0", true, "sine amplitude"),
    param("b", "1.0", true, "sine frequency"),
];

const FRELU_SCHEMA: &[ParamSchema] = &[param("alpha", "1.0", true, "gate sharpness")];

impl ActivationKind {
    pub const ALL: [ActivationKind; 18] = [
        Self::WendlandC0,
        Self::WendlandC2,
        Self::WendlandC4,
        Self::EnhancedWendland,
        Self::Relu,
        Self::Relu6,
        Self::LeakyRelu,
        Self::Prelu,
        Self::Rrelu,
        Self::Elu,
        Self::Celu,
        Self::Swish,
        Self::Srelu,
        Self::SinLu,
        Self::Frelu,
        Self::Sigmoid,
        Self::Tanh,
        Self::Gelu,
    ];

    /// Name used in the text encoding.
    pub fn token(self) -> &'static str {
        match self {
            Self::WendlandC0 => "wc0",
            Self::WendlandC2 => "wc2",
            Self::WendlandC4 => "wc4",
            Self::EnhancedWendland => "ewend",
            Self::Relu => "relu",
            Self::Relu6 => "relu6",
            Self::LeakyRelu => "lrelu",
            Self::Prelu => "prelu",
            Self::Rrelu => "rrelu",
            Self::Elu => "elu",
            Self::Celu => "celu",
            Self::Swish => "swish",
            Self::Srelu => "srelu",
            Self::SinLu => "sinlu",
            Self::Frelu => "frelu",
            Self::Sigmoid => "sigmoid",
            Self::Tanh => "tanh",
            Self::Gelu => "gelu",
        }
    }

    /// Conventional display name.
    pub fn label(self) -> &'static str {
        match self {
            Self::WendlandC0 => "WendC0",
            Self::WendlandC2 => "WendC2",
            Self::WendlandC4 => "WendC4",
            Self::EnhancedWendland => "Wend",
            Self::Relu => "ReLU",
            Self::Relu6 => "ReLU6",
            Self::LeakyRelu => "LReLU",
            Self::Prelu => "PReLU",
            Self::Rrelu => "RReLU",
            Self::Elu => "ELU",
            Self::Celu => "CELU",
            Self::Swish => "Swish",
            Self::Srelu => "SReLU",
            Self::SinLu => "SinLU",
            Self::Frelu => "FReLU",
            Self::Sigmoid => "Sigmoid",
            Self::Tanh => "Tanh",
            Self::Gelu => "GELU",
        }
    }

    /// Everything except the Wendland family.
    pub fn is_baseline(self) -> bool {
        !matches!(
            self,
            Self::WendlandC0 | Self::WendlandC2 | Self::WendlandC4 | Self::EnhancedWendland
        )
    }

    /// Row position in the MNIST / Fashion-MNIST comparison table, for kinds
    /// that appear there.
    pub fn table_order(self) -> Option<usize> {
        match self {
            Self::Relu => Some(0),
            Self::Relu6 => Some(1),
            Self::LeakyRelu => Some(2),
            Self::Rrelu => Some(3),
            Self::Elu => Some(4),
            Self::Celu => Some(5),
            Self::Swish => Some(6),
            Self::Prelu => Some(7),
            Self::Srelu => Some(8),
            Self::EnhancedWendland => Some(9),
            _ => None,
        }
    }

    pub fn from_token(name: &str) -> Option<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let lower = match lower.as_str() {
            "wend" => "ewend",
            "leakyrelu" => "lrelu",
            other => other,
        };
        Self::ALL.into_iter().find(|k| k.token() == lower)
    }

    pub fn schema(self) -> &'static [ParamSchema] {
        match self {
            Self::EnhancedWendland => ENHANCED_WENDLAND_SCHEMA,
            Self::LeakyRelu => LEAKY_RELU_SCHEMA,
            Self::Prelu => PRELU_SCHEMA,
            Self::Rrelu => RRELU_SCHEMA,
            Self::Elu => ELU_SCHEMA,
            Self::Celu => CELU_SCHEMA,
            Self::Swish => SWISH_SCHEMA,
            Self::Srelu => SRELU_SCHEMA,
            Self::SinLu => SIN_LU_SCHEMA,
            Self::Frelu => FRELU_SCHEMA,
            _ => &[],
        }
    }
}

/// A fully parameterised activation.
#[derive(Debug, Clone, PartialEq)]
pub enum ActivationSpec {
    WendlandC0,
    WendlandC2,
    WendlandC4,
    EnhancedWendland(EnhancedWendlandParams),
    Relu,
    Relu6,
    LeakyRelu { slope: f64 },
    Prelu { slope: f64 },
    Rrelu { lower: f64, upper: f64 },
    Elu { alpha: f64 },
    Celu { alpha: f64 },
    Swish { beta: f64 },
    Srelu { t_left: f64, a_left: f64, t_right: f64, a_right: f64 },
    SinLu { a: f64, b: f64 },
    Frelu { alpha: f64 },
    Sigmoid,
    Tanh,
    Gelu,
}

impl ActivationSpec {
    pub fn default_for(kind: ActivationKind) -> Self {
        use ActivationKind as K;
        match kind {
            K::WendlandC0 => Self::WendlandC0,
            K::WendlandC2 => Self::WendlandC2,
            K::WendlandC4 => Self::WendlandC4,
            K::EnhancedWendland => Self::EnhancedWendland(EnhancedWendlandParams::default()),
            K::Relu => Self::Relu,
            K::Relu6 => Self::Relu6,
            K::LeakyRelu => Self::LeakyRelu { slope: 0.01 },
            K::Prelu => Self::Prelu { slope: 0.25 },
            K::Rrelu => Self::Rrelu {
                lower: 1.0 / 8.0,
                upper: 1.0 / 3.0,
            },
            K::Elu => Self::Elu { alpha: 1.0 },
            K::Celu => Self::Celu { alpha: 1.0 },
            K::Swish => Self::Swish { beta: 1.0 },
            K::Srelu => Self::Srelu {
                t_left: 0.0,
                a_left: 0.2,
                t_right: 2.5,
                a_right: 0.5,
            },
            K::SinLu => Self::SinLu { a: 1.0, b: 1.0 },
            K::Frelu => Self::Frelu { alpha: 1.0 },
            K::Sigmoid => Self::Sigmoid,
            K::Tanh => Self::Tanh,
            K::Gelu => Self::Gelu,
        }
    }

    pub fn kind(&self) -> ActivationKind {
        use ActivationKind as K;
        match self {
            Self::WendlandC0 => K::WendlandC0,
            Self::WendlandC2 => K::WendlandC2,
            Self::WendlandC4 => K::WendlandC4,
            Self::EnhancedWendland(_) => K::EnhancedWendland,
            Self::Relu => K::Relu,
            Self::Relu6 => K::Relu6,
            Self::LeakyRelu { .. } => K::LeakyRelu,
            Self::Prelu { .. } => K::Prelu,
            Self::Rrelu { .. } => K::Rrelu,
            Self::Elu { .. } => K::Elu,
            Self::Celu { .. } => K::Celu,
            Self::Swish { .. } => K::Swish,
            Self::Srelu { .. } => K::Srelu,
            Self::SinLu { .. } => K::SinLu,
            Self::Frelu { .. } => K::Frelu,
            Self::Sigmoid => K::Sigmoid,
            Self::Tanh => K::Tanh,
            Self::Gelu => K::Gelu,
        }
    }

    /// Number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.trainable_flags().iter().filter(|&&t| t).count()
    }

    /// Coefficients in the unconstrained coordinates the optimizer works in.
    /// For the enhanced Wendland kind this is `[ln alpha, lambda, ln beta, eps]`.
    pub fn raw_params(&self) -> Vec<f64> {
        match self {
            Self::EnhancedWendland(p) => p.raw().to_vec(),
            Self::Prelu { slope } => vec![*slope],
            Self::SinLu { a, b } => vec![*a, *b],
            Self::Frelu { alpha } => vec![*alpha],
            _ => Vec::new(),
        }
    }

    /// Which entries of [`Self::raw_params`] are trainable.
    pub fn trainable_flags(&self) -> Vec<bool> {
        match self {
            Self::EnhancedWendland(p) => p.trainable.as_array().to_vec(),
            _ => vec![true; self.raw_params().len()],
        }
    }

    /// Inverse of [`Self::raw_params`]. Panics if `raw` has the wrong length.
    pub fn set_raw_params(&mut self, raw: &[f64]) {
        assert_eq!(raw.len(), self.raw_params().len(), "raw parameter length");
        match self {
            Self::EnhancedWendland(p) => p.set_raw([raw[0], raw[1], raw[2], raw[3]]),
            Self::Prelu { slope } => *slope = raw[0],
            Self::SinLu { a, b } => {
                *a = raw[0];
                *b = raw[1];
            }
            Self::Frelu { alpha } => *alpha = raw[0],
            _ => {}
        }
    }

    /// Coefficients in natural coordinates, for reporting.
    pub fn named_params(&self) -> Vec<(&'static str, f64)> {
        match self {
            Self::EnhancedWendland(p) => vec![
                ("alpha", p.alpha()),
                ("lambda", p.lambda()),
                ("beta", p.beta()),
                ("eps", p.epsilon()),
            ],
            Self::Prelu { slope } => vec![("slope", *slope)],
            Self::SinLu { a, b } => vec![("a", *a), ("b", *b)],
            Self::Frelu { alpha } => vec![("alpha", *alpha)],
            _ => Vec::new(),
        }
    }

    /// Inputs at which the pointwise derivative jumps. Empty for smooth kinds
    /// and for channel-norm mode.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::Relu | Self::LeakyRelu { .. } | Self::Prelu { .. } | Self::Rrelu { .. } => vec![0.0],
            Self::Relu6 => vec![0.0, 6.0],
            Self::Elu { alpha } if *alpha != 1.0 => vec![0.0],
            Self::Srelu { t_left, t_right, .. } => vec![*t_left, *t_right],
            Self::EnhancedWendland(p) if p.k() == 1 && p.mode == NormMode::Elementwise => {
                let s = p.support_radius();
                vec![-s, s]
            }
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ActivationError> {
        let bad = |name: &'static str, value: f64, reason: &'static str| {
            Err(ActivationError::InvalidParam { name, value, reason })
        };
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                bad(name, v, "must be finite")
            }
        };
        match self {
            Self::LeakyRelu { slope } | Self::Prelu { slope } => finite("slope", *slope),
            Self::Rrelu { lower, upper } => {
                finite("lower", *lower)?;
                finite("upper", *upper)?;
                if !(0.0 <= *lower && lower <= upper) {
                    return bad("lower", *lower, "need 0 <= lower <= upper");
                }
                Ok(())
            }
            Self::Elu { alpha } | Self::Celu { alpha } => {
                if *alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    bad("alpha", *alpha, "must be positive and finite")
                }
            }
            Self::Swish { beta } => finite("beta", *beta),
            Self::Srelu {
                t_left,
                a_left,
                t_right,
                a_right,
            } => {
                for (n, v) in [("tl", t_left), ("al", a_left), ("tr", t_right), ("ar", a_right)] {
                    finite(n, *v)?;
                }
                if t_left < t_right {
                    Ok(())
                } else {
                    bad("tl", *t_left, "left threshold must be below the right threshold")
                }
            }
            Self::SinLu { a, b } => finite("a", *a).and(finite("b", *b)),
            Self::Frelu { alpha } => finite("alpha", *alpha),
            _ => Ok(()),
        }
    }
}

impl Default for ActivationSpec {
    fn default() -> Self {
        Self::default_for(ActivationKind::EnhancedWendland)
    }
}

fn parse_error(token: &str, reason: impl Into<String>) -> ActivationError {
    ActivationError::Parse {
        token: token.to_string(),
        reason: reason.into(),
    }
}

fn parse_mask(token: &str, s: &str) -> Result<TrainableMask, ActivationError> {
    match s {
        "none" => return Ok(TrainableMask::NONE),
        "all" => return Ok(TrainableMask::ALL),
        _ => {}
    }
    let mut mask = TrainableMask::NONE;
    for part in s.split('+') {
        match part.trim() {
            "alpha" => mask.alpha = true,
            "lambda" => mask.lambda = true,
            "beta" => mask.beta = true,
            "eps" | "epsilon" => mask.epsilon = true,
            other => return Err(parse_error(token, format!("unknown coefficient `{other}` in train"))),
        }
    }
    Ok(mask)
}

fn format_mask(m: TrainableMask) -> String {
    if m == TrainableMask::NONE {
        return "none".into();
    }
    let names = ["alpha", "lambda", "beta", "eps"];
    names
        .iter()
        .zip(m.as_array())
        .filter(|(_, on)| *on)
        .map(|(n, _)| *n)
        .collect::<Vec<_>>()
        .join("+")
}

fn parse_mode(token: &str, s: &str) -> Result<NormMode, ActivationError> {
    if s == "elem" {
        return Ok(NormMode::Elementwise);
    }
    if let Some(axis) = s.strip_prefix("chan:") {
        let axis = axis
            .parse()
            .map_err(|_| parse_error(token, format!("bad channel axis `{axis}`")))?;
        return Ok(NormMode::ChannelNorm { axis });
    }
    Err(parse_error(token, format!("mode must be `elem` or `chan:<axis>`, got `{s}`")))
}

impl FromStr for ActivationSpec {
    type Err = ActivationError;

    fn from_str(token: &str) -> Result<Self, Self::Err> {
        let s = token.trim();
        let (name, body) = match s.find('(') {
            Some(open) => {
                let body = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| parse_error(token, "missing closing `)`"))?;
                (&s[..open], Some(body))
            }
            None => (s, None),
        };
        let kind = ActivationKind::from_token(name)
            .ok_or_else(|| parse_error(token, format!("unknown activation `{}`", name.trim())))?;

        let mut args: BTreeMap<String, String> = BTreeMap::new();
        if let Some(body) = body.filter(|b| !b.trim().is_empty()) {
            for item in body.split(',') {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| parse_error(token, format!("expected key=value, got `{}`", item.trim())))?;
                let key = k.trim().to_ascii_lowercase();
                let key = if key == "epsilon" { "eps".to_string() } else { key };
                if !kind.schema().iter().any(|p| p.key == key) {
                    return Err(parse_error(token, format!("`{}` has no parameter `{key}`", kind.token())));
                }
                if args.insert(key.clone(), v.trim().to_string()).is_some() {
                    return Err(parse_error(token, format!("parameter `{key}` given twice")));
                }
            }
        }

        let num = |key: &str| -> Result<Option<f64>, ActivationError> {
            args.get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| parse_error(token, format!("`{key}` is not a number: `{v}`")))
                })
                .transpose()
        };
        let num_or = |key: &str, default: f64| num(key).map(|v| v.unwrap_or(default));

        let spec = match Self::default_for(kind) {
            Self::EnhancedWendland(d) => {
                let k = match args.get("k") {
                    Some(v) => v
                        .parse::<u32>()
                        .map_err(|_| parse_error(token, format!("`k` must be a positive integer, got `{v}`")))?,
                    None => d.k(),
                };
                let mode = args.get("mode").map(|m| parse_mode(token, m)).transpose()?.unwrap_or(d.mode);
                let mask = args.get("train").map(|m| parse_mask(token, m)).transpose()?.unwrap_or(d.trainable);
                let p = EnhancedWendlandParams::new(
                    num_or("alpha", d.alpha())?,
                    k,
                    num_or("lambda", d.lambda())?,
                    num_or("beta", d.beta())?,
                    num_or("eps", d.epsilon())?,
                )
                .map_err(|e| parse_error(token, e.to_string()))?
                .with_mode(mode)
                .with_trainable(mask);
                Self::EnhancedWendland(p)
            }
            Self::LeakyRelu { slope } => Self::LeakyRelu {
                slope: num_or("slope", slope)?,
            },
            Self::Prelu { slope } => Self::Prelu {
                slope: num_or("slope", slope)?,
            },
            Self::Rrelu { lower, upper } => Self::Rrelu {
                lower: num_or("lower", lower)?,
                upper: num_or("upper", upper)?,
            },
            Self::Elu { alpha } => Self::Elu {
                alpha: num_or("alpha", alpha)?,
            },
            Self::Celu { alpha } => Self::Celu {
                alpha: num_or("alpha", alpha)?,
            },
            Self::Swish { beta } => Self::Swish {
                beta: num_or("beta", beta)?,
            },
            Self::Srelu {
                t_left,
                a_left,
                t_right,
                a_right,
            } => Self::Srelu {
                t_left: num_or("tl", t_left)?,
                a_left: num_or("al", a_left)?,
                t_right: num_or("tr", t_right)?,
                a_right: num_or("ar", a_right)?,
            },
            Self::SinLu { a, b } => Self::SinLu {
                a: num_or("a", a)?,
                b: num_or("b", b)?,
            },
            Self::Frelu { alpha } => Self::Frelu {
                alpha: num_or("alpha", alpha)?,
            },
            other => other,
        };
        spec.validate().map_err(|e| parse_error(token, e.to_string()))?;
        Ok(spec)
    }
}

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.kind().token();
        match self {
            Self::EnhancedWendland(p) => {
                let mode = match p.mode {
                    NormMode::Elementwise => "elem".to_string(),
                    NormMode::ChannelNorm { axis } => format!("chan:{axis}"),
                };
                write!(
                    f,
                    "{name}(alpha={:?},k={},lambda={:?},beta={:?},eps={:?},mode={mode}",
                    p.alpha(),
                    p.k(),
                    p.lambda(),
                    p.beta(),
                    p.epsilon()
                )?;
                if p.trainable != TrainableMask::default() {
                    write!(f, ",train={}", format_mask(p.trainable))?;
                }
                write!(f, ")")
            }
            Self::LeakyRelu { slope } | Self::Prelu { slope } => write!(f, "{name}(slope={slope:?})"),
            Self::Rrelu { lower, upper } => write!(f, "{name}(lower={lower:?},upper={upper:?})"),
            Self::Elu { alpha } | Self::Celu { alpha } | Self::Frelu { alpha } => {
                write!(f, "{name}(alpha={alpha:?})")
            }
            Self::Swish { beta } => write!(f, "{name}(beta={beta:?})"),
            Self::Srelu {
                t_left,
                a_left,
                t_right,
                a_right,
            } => write!(f, "{name}(tl={t_left:?},al={a_left:?},tr={t_right:?},ar={a_right:?})"),
            Self::SinLu { a, b } => write!(f, "{name}(a={a:?},b={b:?})"),
            _ => write!(f, "{name}"),
        }
    }
}
