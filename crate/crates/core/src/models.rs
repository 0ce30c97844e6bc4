//! Endogenous (peer) activation models and exogenous influence profiles.
//!
//! Peer probabilities for the independent-cascade models are evaluated in log
//! space: `1 - prod_j (1 - q_j)` is computed as `-expm1(sum_j log1p(-q_j))`,
//! which stays accurate for the tiny per-peer probabilities seen in practice.
//! Every per-peer probability is kept at least `PROB_MARGIN` away from one so
//! that no logarithm can reach minus infinity.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::cascade::Cascade;
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Si,
    Exp,
    Log,
}

impl ModelKind {
    pub fn n_params(self) -> usize {
        match self {
            ModelKind::Si => 1,
            ModelKind::Exp | ModelKind::Log => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Si => "si",
            ModelKind::Exp => "exp",
            ModelKind::Log => "log",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "si" => Ok(ModelKind::Si),
            "exp" => Ok(ModelKind::Exp),
            "log" => Ok(ModelKind::Log),
            other => Err(Error::invalid(
                "model",
                format!("unknown model kind `{other}` (expected si, exp or log)"),
            )),
        }
    }
}

/// Global endogenous influence parameters, shared by all users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[serde(bound(deserialize = "T: Scalar"))]
pub enum EndogenousModel<T> {
    /// Each active peer activates with constant probability `p0` per window.
    Si { p0: T },
    /// Per-peer probability `p0 * exp(-lambda * elapsed)`, elapsed in windows.
    Exp { p0: T, lambda: T },
    /// Logistic in the number of active peers: `1 / (1 + exp(-k (a - a0)))`.
    Log { k: T, a0: T },
}

impl<T: Scalar> EndogenousModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            EndogenousModel::Si { .. } => ModelKind::Si,
            EndogenousModel::Exp { .. } => ModelKind::Exp,
            EndogenousModel::Log { .. } => ModelKind::Log,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, p: T| {
            if p >= T::zero() && p <= T::one() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{p} outside [0, 1]")))
            }
        };
        match *self {
            EndogenousModel::Si { p0 } => unit("p0", p0),
            EndogenousModel::Exp { p0, lambda } => {
                unit("p0", p0)?;
                if lambda >= T::zero() && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("lambda", format!("{lambda} must be finite and >= 0")))
                }
            }
            EndogenousModel::Log { k, a0 } => {
                if !k.is_finite() {
                    return Err(Error::invalid("k", format!("{k} is not finite")));
                }
                if a0 >= T::zero() && a0.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("a0", format!("{a0} must be finite and >= 0")))
                }
            }
        }
    }

    /// Parameters in canonical order: `[p0]`, `[p0, lambda]` or `[k, a0]`.
    pub fn params(&self) -> Vec<T> {
        match *self {
            EndogenousModel::Si { p0 } => vec![p0],
            EndogenousModel::Exp { p0, lambda } => vec![p0, lambda],
            EndogenousModel::Log { k, a0 } => vec![k, a0],
        }
    }

    pub fn from_params(kind: ModelKind, params: &[T]) -> Self {
        match kind {
            ModelKind::Si => EndogenousModel::Si { p0: params[0] },
            ModelKind::Exp => EndogenousModel::Exp {
                p0: params[0],
                lambda: params[1],
            },
            ModelKind::Log => EndogenousModel::Log {
                k: params[0],
                a0: params[1],
            },
        }
    }

    /// Half-decay time in windows (`ln 2 / lambda`) for the EXP model.
    pub fn half_decay_windows(&self) -> Option<T> {
        match *self {
            EndogenousModel::Exp { lambda, .. } if lambda > T::zero() => Some(T::LN_2() / lambda),
            _ => None,
        }
    }

    /// True when the model's peer term is a sum over individual active peers
    /// (SI and EXP) rather than a function of the active-peer count only.
    pub fn is_pairwise(&self) -> bool {
        !matches!(self, EndogenousModel::Log { .. })
    }

    /// `log(1 - q(elapsed))` for one active peer; SI and EXP only.
    #[inline]
    pub fn pair_log_survival(&self, elapsed: usize) -> T {
        let cap = T::one() - T::of(T::PROB_MARGIN);
        match *self {
            EndogenousModel::Si { p0 } => (-p0.min(cap)).ln_1p(),
            EndogenousModel::Exp { p0, lambda } => {
                let q = p0 * (-lambda * T::of_count(elapsed)).exp();
                (-q.min(cap)).ln_1p()
            }
            EndogenousModel::Log { .. } => panic!("the threshold model has no per-peer term"),
        }
    }

    /// `log(1 - p_peer)` for a user with `active` active peers (LOG model,
    /// or SI where only the count matters).
    #[inline]
    pub fn count_log_survival(&self, active: usize) -> T {
        match *self {
            EndogenousModel::Si { .. } => T::of_count(active) * self.pair_log_survival(1),
            EndogenousModel::Exp { .. } => panic!("the EXP model needs elapsed times"),
            EndogenousModel::Log { k, a0 } => {
                let p = logistic(k * (T::of_count(active) - a0));
                (-p.min(T::one() - T::of(T::PROB_MARGIN))).ln_1p()
            }
        }
    }

    /// `log(1 - p_peer)` for a user whose active peers activated
    /// `elapsed[j]` windows ago.
    pub fn log_survival(&self, elapsed: &[u32]) -> T {
        match *self {
            EndogenousModel::Si { .. } | EndogenousModel::Log { .. } => self.count_log_survival(elapsed.len()),
            EndogenousModel::Exp { lambda, .. } => {
                if lambda == T::zero() {
                    // Same expression as SI so the two agree bit for bit.
                    T::of_count(elapsed.len()) * self.pair_log_survival(0)
                } else {
                    elapsed
                        .iter()
                        .fold(T::zero(), |acc, &d| acc + self.pair_log_survival(d as usize))
                }
            }
        }
    }

    /// Endogenous activation probability for a user with the given active peers.
    pub fn peer_prob(&self, elapsed: &[u32]) -> T {
        match *self {
            EndogenousModel::Log { k, a0 } => logistic(k * (T::of_count(elapsed.len()) - a0)),
            _ => survival_to_prob(self.log_survival(elapsed)),
        }
    }
}

#[inline]
fn survival_to_prob<T: Scalar>(log_survival: T) -> T {
    T::zero() - log_survival.exp_m1()
}

#[inline]
pub(crate) fn logistic<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn check_unit<T: Scalar>(name: &'static str, p: T) -> Result<()> {
    if p >= T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{p} outside [0, 1]")))
    }
}

/// SI peer probability `1 - (1 - p0)^a_i` for every node.
pub fn peer_prob_si<T: Scalar>(g: &SocialGraph, active_counts: &[u32], p0: T) -> Result<Vec<T>> {
    check_unit("p0", p0)?;
    if active_counts.len() != g.n_nodes() {
        return Err(Error::LengthMismatch {
            what: "active counts",
            expected: g.n_nodes(),
            got: active_counts.len(),
        });
    }
    let model = EndogenousModel::Si { p0 };
    Ok(active_counts
        .iter()
        .map(|&a| survival_to_prob(model.count_log_survival(a as usize)))
        .collect())
}

/// Elapsed windows `t - t_j` to every peer `j` active strictly before `t`.
pub fn active_peer_elapsed(g: &SocialGraph, c: &Cascade, i: usize, t: usize) -> Vec<u32> {
    g.peers(i)
        .iter()
        .filter_map(|&j| match c.window(j as usize) {
            Some(w) if w < t => Some((t - w) as u32),
            _ => None,
        })
        .collect()
}

/// EXP peer probability `1 - prod_j (1 - p0 exp(-lambda (t - t_j)))` for every node.
pub fn peer_prob_exp<T: Scalar>(g: &SocialGraph, c: &Cascade, t: usize, p0: T, lambda: T) -> Result<Vec<T>> {
    let model = EndogenousModel::Exp { p0, lambda };
    model.validate()?;
    if t >= c.horizon() {
        return Err(Error::WindowOutOfRange {
            window: t,
            horizon: c.horizon(),
        });
    }
    if c.n_users() != g.n_nodes() {
        return Err(Error::LengthMismatch {
            what: "cascade users",
            expected: g.n_nodes(),
            got: c.n_users(),
        });
    }
    Ok((0..g.n_nodes())
        .map(|i| model.peer_prob(&active_peer_elapsed(g, c, i, t)))
        .collect())
}

/// Logistic threshold probability per node. Nonzero even with no active peers.
pub fn peer_prob_log<T: Scalar>(active_counts: &[u32], k: T, a0: T) -> Vec<T> {
    active_counts
        .iter()
        .map(|&a| logistic(k * (T::of_count(a as usize) - a0)))
        .collect()
}

/// One exponentially decaying burst of external attention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct SpikeEvent<T> {
    pub start: usize,
    pub peak: T,
    pub rate: T,
}

/// Shape of the exogenous activation probability over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
#[serde(bound(deserialize = "T: Scalar"))]
pub enum ExogenousProfile<T> {
    SpikeExponential {
        events: Vec<SpikeEvent<T>>,
    },
    Constant {
        value: T,
    },
    /// `initial - slope * t`, floored at zero.
    LinearDecay {
        initial: T,
        slope: T,
    },
    /// `value * (1 + sin(omega t + phase)) / 2`.
    Sinusoidal {
        value: T,
        omega: T,
        phase: T,
    },
    Custom {
        series: Vec<T>,
    },
}

/// Exogenous activation probability per window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct ExogenousSeries<T>(Vec<T>);

impl<T: Scalar> ExogenousSeries<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some((t, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= T::zero() && **v <= T::one()))
        {
            return Err(Error::invalid("p_ext", format!("window {t}: {v} outside [0, 1]")));
        }
        Ok(ExogenousSeries(values))
    }

    pub fn constant(value: T, horizon: usize) -> Self {
        ExogenousSeries(vec![value; horizon])
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, t: usize) -> T {
        self.0[t]
    }
}

/// Evaluates a profile on windows `0..horizon`, clipping into `[0, 1]`.
pub fn render_profile<T: Scalar>(profile: &ExogenousProfile<T>, horizon: usize) -> Result<ExogenousSeries<T>> {
    let raw: Vec<T> = match profile {
        ExogenousProfile::SpikeExponential { events } => {
            for e in events {
                check_unit("peak", e.peak)?;
                if !(e.rate >= T::zero()) {
                    return Err(Error::invalid("rate", format!("{} must be >= 0", e.rate)));
                }
            }
            (0..horizon)
                .map(|t| {
                    events.iter().filter(|e| t >= e.start).fold(T::zero(), |acc, e| {
                        acc + e.peak * (-e.rate * T::of_count(t - e.start)).exp()
                    })
                })
                .collect()
        }
        ExogenousProfile::Constant { value } => {
            check_unit("value", *value)?;
            vec![*value; horizon]
        }
        ExogenousProfile::LinearDecay { initial, slope } => {
            check_unit("initial", *initial)?;
            (0..horizon)
                .map(|t| (*initial - *slope * T::of_count(t)).max(T::zero()))
                .collect()
        }
        ExogenousProfile::Sinusoidal { value, omega, phase } => {
            check_unit("value", *value)?;
            (0..horizon)
                .map(|t| *value * (T::one() + (*omega * T::of_count(t) + *phase).sin()) / T::of(2.0))
                .collect()
        }
        ExogenousProfile::Custom { series } => {
            if series.len() != horizon {
                return Err(Error::LengthMismatch {
                    what: "custom exogenous series",
                    expected: horizon,
                    got: series.len(),
                });
            }
            series.clone()
        }
    };
    let clipped = raw.iter().filter(|&&v| v > T::one()).count();
    if clipped > 0 {
        warn!("exogenous profile exceeded 1 in {clipped} window(s); clipped");
    }
    ExogenousSeries::new(raw.into_iter().map(|v| v.max(T::zero()).min(T::one())).collect())
}

/// Single-column CSV of probabilities, optional header.
pub fn load_series<T: Scalar>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => out.push(T::of(v)),
            Err(_) if lineno == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("cannot parse `{line}` as a probability"),
                })
            }
        }
    }
    Ok(out)
}
