//! Per-window cascade log-likelihood with the observer-bias correction.
//!
//! For window `t` the log-likelihood is
//!
//! ```text
//! sum_{i activated in t} log(1 - (1 - p_peer_i)(1 - p_ext))
//!   + c(t) * sum_{i inactive at t} [log(1 - p_peer_i) + log(1 - p_ext)]
//! ```
//!
//! with `c(t) = 1 + alpha * N_all / N_inactive(t)`. Users activated in window 0
//! are seeds: their activation is conditioned on and contributes no term.
//!
//! The functions in this module evaluate the expression directly from the
//! graph and cascade. [`CascadeStats`] evaluates the same quantity from
//! precomputed sufficient statistics and is what inference uses.

mod stats;

use serde::{Deserialize, Serialize};

use crate::cascade::Cascade;
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::models::{active_peer_elapsed, EndogenousModel, ExogenousSeries};
use crate::scalar::{pairwise_sum, Scalar};

pub use stats::{CascadeStats, WindowTerms};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionConfig {
    pub alpha: f64,
    /// Size of the full population the observed network is drawn from.
    pub n_all: usize,
}

impl CorrectionConfig {
    pub fn new(alpha: f64, n_all: usize) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::invalid("alpha", format!("{alpha} must be finite and >= 0")));
        }
        Ok(CorrectionConfig { alpha, n_all })
    }

    /// `N_all` defaults to the number of graph nodes.
    pub fn for_graph(alpha: f64, g: &SocialGraph) -> Result<Self> {
        Self::new(alpha, g.n_nodes())
    }

    pub fn none(n_all: usize) -> Self {
        CorrectionConfig { alpha: 0.0, n_all }
    }

    /// Factor applied to a window's inactive-user sum. A window without
    /// inactive users has an empty sum, so the factor is irrelevant there and
    /// reported as one.
    pub(crate) fn factor_or_one<T: Scalar>(&self, n_inactive: usize) -> T {
        if n_inactive == 0 {
            T::one()
        } else {
            correction_factor(self, n_inactive).expect("n_inactive > 0")
        }
    }
}

/// `c = 1 + alpha * N_all / N_inactive`.
pub fn correction_factor<T: Scalar>(cfg: &CorrectionConfig, n_inactive: usize) -> Result<T> {
    if cfg.alpha == 0.0 {
        return Ok(T::one());
    }
    if n_inactive == 0 {
        return Err(Error::NoInactiveUsers { alpha: cfg.alpha });
    }
    Ok(T::one() + T::of(cfg.alpha) * T::of_count(cfg.n_all) / T::of_count(n_inactive))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct WindowLikelihood<T> {
    pub value: T,
    pub n_activated: usize,
    pub n_inactive: usize,
    pub c: T,
    /// Activated users whose combined activation probability fell below the
    /// probability margin and was clamped.
    pub clamp_hits: usize,
}

/// `log(1 - exp(log_survival) (1 - p_ext))`, with the activation probability
/// clamped into `[margin, 1 - margin]`. Returns whether the lower clamp fired.
#[inline]
pub(crate) fn activation_log_prob<T: Scalar>(log_survival: T, log_ext_survival: T) -> (T, bool) {
    let p = T::zero() - (log_survival + log_ext_survival).exp_m1();
    let margin = T::of(T::PROB_MARGIN);
    (p.clamp_prob().ln(), p < margin)
}

#[inline]
pub(crate) fn ext_log_survival<T: Scalar>(p_ext: T) -> T {
    (-p_ext.min(T::one() - T::of(T::PROB_MARGIN))).ln_1p()
}

fn check_inputs<T: Scalar>(g: &SocialGraph, c: &Cascade, model: &EndogenousModel<T>) -> Result<()> {
    model.validate()?;
    if c.n_users() != g.n_nodes() {
        return Err(Error::LengthMismatch {
            what: "cascade users",
            expected: g.n_nodes(),
            got: c.n_users(),
        });
    }
    Ok(())
}

/// Log-likelihood contribution of window `t`, evaluated user by user.
pub fn window_loglik<T: Scalar>(
    g: &SocialGraph,
    c: &Cascade,
    t: usize,
    model: &EndogenousModel<T>,
    p_ext: T,
    cfg: &CorrectionConfig,
) -> Result<WindowLikelihood<T>> {
    check_inputs(g, c, model)?;
    if !(p_ext >= T::zero() && p_ext <= T::one()) {
        return Err(Error::invalid("p_ext", format!("{p_ext} outside [0, 1]")));
    }
    let masks = c.activity_masks(t)?;
    let log_ext = ext_log_survival(p_ext);

    let mut activated_terms = Vec::new();
    let mut inactive_terms = Vec::new();
    let mut clamp_hits = 0;
    let mut n_activated = 0;
    for i in 0..g.n_nodes() {
        if masks.activated_in[i] {
            n_activated += 1;
            if t == 0 {
                continue;
            }
            let surv = model.log_survival(&active_peer_elapsed(g, c, i, t));
            let (term, clamped) = activation_log_prob(surv, log_ext);
            clamp_hits += clamped as usize;
            activated_terms.push(term);
        } else if masks.inactive[i] {
            inactive_terms.push(model.log_survival(&active_peer_elapsed(g, c, i, t)) + log_ext);
        }
    }
    let n_inactive = inactive_terms.len();
    let factor: T = cfg.factor_or_one(n_inactive);
    let value = pairwise_sum(&activated_terms) + factor * pairwise_sum(&inactive_terms);
    Ok(WindowLikelihood {
        value,
        n_activated,
        n_inactive,
        c: factor,
        clamp_hits,
    })
}

/// Sum of the window log-likelihoods over the whole horizon.
pub fn total_loglik<T: Scalar>(
    g: &SocialGraph,
    c: &Cascade,
    model: &EndogenousModel<T>,
    series: &ExogenousSeries<T>,
    cfg: &CorrectionConfig,
) -> Result<T> {
    if series.len() != c.horizon() {
        return Err(Error::LengthMismatch {
            what: "exogenous series",
            expected: c.horizon(),
            got: series.len(),
        });
    }
    let terms = (0..c.horizon())
        .map(|t| window_loglik(g, c, t, model, series.get(t), cfg).map(|w| w.value))
        .collect::<Result<Vec<T>>>()?;
    Ok(pairwise_sum(&terms))
}
