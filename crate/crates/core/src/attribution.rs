//! Per-user attribution of activations to exogenous or endogenous influence,
//! ROC evaluation against labels, and peer influence apportionment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::Cascade;
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::infer::InferenceResult;
use crate::models::{active_peer_elapsed, EndogenousModel, ExogenousSeries};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponsibilityVariant {
    /// `p_ext / (p_ext + p_peer)`.
    #[default]
    Ratio,
    /// `exp(p_ext) / (exp(p_ext) + exp(p_peer))`.
    Softmax,
    /// `p_ext (1 - p_peer)`: exogenous and not endogenous.
    Multiply,
}

impl ResponsibilityVariant {
    /// Score for one activation. `None` when the ratio is undefined because
    /// both probabilities are zero.
    pub fn score(self, p_ext: f64, p_peer: f64) -> Option<f64> {
        match self {
            ResponsibilityVariant::Ratio => {
                let total = p_ext + p_peer;
                (total > 0.0).then(|| p_ext / total)
            }
            ResponsibilityVariant::Softmax => {
                // Shift by the larger argument; both lie in [0, 1] anyway.
                let m = p_ext.max(p_peer);
                let (a, b) = ((p_ext - m).exp(), (p_peer - m).exp());
                Some(a / (a + b))
            }
            ResponsibilityVariant::Multiply => Some(p_ext * (1.0 - p_peer)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsibilityScore {
    pub user: usize,
    pub window: usize,
    pub r: f64,
    pub variant: ResponsibilityVariant,
    pub p_peer: f64,
    pub p_ext: f64,
}

fn check_sizes(g: &SocialGraph, c: &Cascade) -> Result<()> {
    if g.n_nodes() != c.n_users() {
        return Err(Error::LengthMismatch {
            what: "cascade users",
            expected: g.n_nodes(),
            got: c.n_users(),
        });
    }
    Ok(())
}

/// Endogenous activation probability of every activated user at its
/// activation window, against peers active strictly before that window.
/// Users that never activated get `None`.
pub fn peer_prob_at_activation<T: Scalar>(
    model: &EndogenousModel<T>,
    g: &SocialGraph,
    c: &Cascade,
) -> Result<Vec<Option<f64>>> {
    check_sizes(g, c)?;
    Ok((0..g.n_nodes())
        .into_par_iter()
        .map(|i| {
            c.window(i)
                .map(|t| model.peer_prob(&active_peer_elapsed(g, c, i, t)).as_f64())
        })
        .collect())
}

/// Responsibility of exogenous influence for each activated user, in user
/// order, under the given model and exogenous series.
pub fn responsibility_for<T: Scalar>(
    model: &EndogenousModel<T>,
    series: &ExogenousSeries<T>,
    g: &SocialGraph,
    c: &Cascade,
    variant: ResponsibilityVariant,
) -> Result<Vec<ResponsibilityScore>> {
    if series.len() != c.horizon() {
        return Err(Error::LengthMismatch {
            what: "exogenous series",
            expected: c.horizon(),
            got: series.len(),
        });
    }
    let peer = peer_prob_at_activation(model, g, c)?;
    peer.iter()
        .enumerate()
        .filter_map(|(user, p)| p.map(|p| (user, p)))
        .map(|(user, p_peer)| {
            let window = c.window(user).expect("activated");
            let p_ext = series.get(window).as_f64();
            let r = variant
                .score(p_ext, p_peer)
                .ok_or(Error::ImpossibleActivation { user })?;
            Ok(ResponsibilityScore {
                user,
                window,
                r,
                variant,
                p_peer,
                p_ext,
            })
        })
        .collect()
}

pub fn responsibility<T: Scalar>(
    result: &InferenceResult<T>,
    g: &SocialGraph,
    c: &Cascade,
    variant: ResponsibilityVariant,
) -> Result<Vec<ResponsibilityScore>> {
    responsibility_for(&result.model, &result.series, g, c, variant)
}

/// Expected endogenous and exogenous activations per window:
/// `exo(t) = sum of R over users activated in t`, `endo(t) = n(t) - exo(t)`.
pub fn counts_from_scores(scores: &[ResponsibilityScore], horizon: usize) -> Vec<(f64, f64)> {
    let mut n = vec![0usize; horizon];
    let mut exo = vec![0.0f64; horizon];
    for s in scores {
        n[s.window] += 1;
        exo[s.window] += s.r;
    }
    n.iter().zip(exo).map(|(&n, e)| (n as f64 - e, e)).collect()
}

/// `(endogenous, exogenous)` expected counts per window from the ratio
/// responsibility of an inference result.
pub fn expected_counts<T: Scalar>(
    result: &InferenceResult<T>,
    g: &SocialGraph,
    c: &Cascade,
) -> Result<Vec<(f64, f64)>> {
    let scores = responsibility(result, g, c, ResponsibilityVariant::Ratio)?;
    Ok(counts_from_scores(&scores, c.horizon()))
}

/// Active-peer baseline: minus the number of peers active strictly before
/// the user's activation window, so higher means more exogenous. Returns
/// `(user, score)` for every activated user.
pub fn baseline_scores(g: &SocialGraph, c: &Cascade) -> Result<Vec<(usize, f64)>> {
    check_sizes(g, c)?;
    Ok((0..g.n_nodes())
        .filter_map(|i| {
            c.window(i)
                .map(|t| (i, 0.0 - active_peer_elapsed(g, c, i, t).len() as f64))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Descending; the first threshold is `+inf` (nothing predicted positive).
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

/// ROC curve of `scores` against boolean labels (true = positive), sweeping
/// the threshold over the distinct scores. Tied scores move both rates at
/// once, which the trapezoidal area counts as half a correct ordering.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::invalid("scores", format!("{bad} is not a number")));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels { positives, negatives });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = vec![f64::INFINITY];
    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let (x0, y0) = (*fpr.last().unwrap(), *tpr.last().unwrap());
        let x1 = fp as f64 / negatives as f64;
        let y1 = tp as f64 / positives as f64;
        auc += (x1 - x0) * (y0 + y1) / 2.0;
        thresholds.push(s);
        fpr.push(x1);
        tpr.push(y1);
    }
    Ok(RocCurve {
        thresholds,
        fpr,
        tpr,
        auc,
    })
}

/// How a later activation's endogenous mass is split among earlier peers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InfluenceWeighting {
    /// Every earlier peer claims an equal share.
    #[default]
    Uniform,
    /// Earlier peer `m` claims in proportion to `exp(-lambda (t_j - t_m))`,
    /// with elapsed time measured in windows.
    ExpDecay { lambda: f64 },
}

/// Individual influence of every user: for each user `j` with earlier
/// active peers, `endo_prob[j]` is split among those peers by weight.
/// Peers are ordered by activation time; equal times do not claim each other.
pub fn individual_influence(
    g: &SocialGraph,
    c: &Cascade,
    endo_prob: &[f64],
    weighting: InfluenceWeighting,
) -> Result<Vec<f64>> {
    check_sizes(g, c)?;
    if endo_prob.len() != g.n_nodes() {
        return Err(Error::LengthMismatch {
            what: "endogenous probabilities",
            expected: g.n_nodes(),
            got: endo_prob.len(),
        });
    }
    if let Some((i, p)) = endo_prob.iter().enumerate().find(|(_, p)| !(**p >= 0.0 && **p <= 1.0)) {
        return Err(Error::invalid("endo_prob", format!("user {i}: {p} outside [0, 1]")));
    }
    if let InfluenceWeighting::ExpDecay { lambda } = weighting {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid("lambda", format!("{lambda} must be finite and >= 0")));
        }
    }
    let times = c.activation_times();
    let width = c.window_width();
    let weight = |tm: f64, tj: f64| match weighting {
        InfluenceWeighting::Uniform => 1.0,
        InfluenceWeighting::ExpDecay { lambda } => (-lambda * (tj - tm) / width).exp(),
    };

    let mut influence = vec![0.0; g.n_nodes()];
    for j in 0..g.n_nodes() {
        let tj = times[j];
        if tj < 0.0 || endo_prob[j] == 0.0 {
            continue;
        }
        let earlier: Vec<(usize, f64)> = g
            .peers(j)
            .iter()
            .map(|&m| m as usize)
            .filter(|&m| times[m] >= 0.0 && times[m] < tj)
            .map(|m| (m, weight(times[m], tj)))
            .collect();
        let total: f64 = earlier.iter().map(|(_, w)| w).sum();
        if total > 0.0 {
            for (m, w) in earlier {
                influence[m] += w / total * endo_prob[j];
            }
        }
    }
    Ok(influence)
}

/// Mean influence over a group of users.
pub fn collective_influence(scores: &[f64], group: &[usize]) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mut sum = 0.0;
    for &i in group {
        sum += *scores
            .get(i)
            .ok_or_else(|| Error::invalid("group", format!("user {i} out of range")))?;
    }
    Ok(sum / group.len() as f64)
}
