//! Discrete-time forward simulation of a cascade under an endogenous model
//! and an exogenous profile, with ground-truth activation labels.
//!
//! Randomness comes from counter-based ChaCha streams: user `i` in window `t`
//! always reads stream `i + 1` at word offset `8 t`, so the outcome does not
//! depend on how the per-user draws are scheduled across threads.

use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{write_sessions, Cascade, ReferralClass, SessionRecord, SessionTable, DEFAULT_WINDOW_MINUTES};
use crate::error::{Error, Result};
use crate::graph::{write_edge_list, SocialGraph};
use crate::models::{render_profile, EndogenousModel, ExogenousProfile, ExogenousSeries};
use crate::scalar::Scalar;

fn default_window_width() -> f64 {
    DEFAULT_WINDOW_MINUTES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct SimConfig<T> {
    pub model: EndogenousModel<T>,
    pub profile: ExogenousProfile<T>,
    pub n_seeds: usize,
    pub horizon: usize,
    pub rng_seed: u64,
    /// Minutes per window, used for the activation times written out.
    #[serde(default = "default_window_width")]
    pub window_width: f64,
}

impl<T: Scalar> SimConfig<T> {
    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        self.model.validate()?;
        if self.n_seeds == 0 || self.n_seeds > n_nodes {
            return Err(Error::invalid(
                "n_seeds",
                format!("{} must be between 1 and the number of nodes ({n_nodes})", self.n_seeds),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least one window"));
        }
        if !(self.window_width > 0.0) || !self.window_width.is_finite() {
            return Err(Error::invalid(
                "window_width",
                format!("{} is not positive", self.window_width),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthLabel {
    Endogenous,
    Exogenous,
    Seed,
    Never,
}

impl TruthLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TruthLabel::Endogenous => "endogenous",
            TruthLabel::Exogenous => "exogenous",
            TruthLabel::Seed => "seed",
            TruthLabel::Never => "never",
        }
    }

    /// Referral class used when the outcome is written as sessions.
    pub fn referral(self) -> ReferralClass {
        match self {
            TruthLabel::Endogenous => ReferralClass::Share,
            TruthLabel::Exogenous => ReferralClass::External,
            TruthLabel::Seed | TruthLabel::Never => ReferralClass::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub endogenous: usize,
    pub exogenous: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome<T> {
    pub cascade: Cascade,
    pub truth: Vec<TruthLabel>,
    pub counts: Vec<WindowCounts>,
    /// The rendered exogenous profile that drove the run.
    pub series: ExogenousSeries<T>,
}

impl<T> SimOutcome<T> {
    pub fn n_activated(&self) -> usize {
        self.truth.iter().filter(|l| **l != TruthLabel::Never).count()
    }

    /// Exogenous-positive labels for every user with an endogenous or
    /// exogenous truth label.
    pub fn exogenous_labels(&self) -> Vec<Option<bool>> {
        self.truth
            .iter()
            .map(|l| match l {
                TruthLabel::Exogenous => Some(true),
                TruthLabel::Endogenous => Some(false),
                _ => None,
            })
            .collect()
    }
}

/// Counter-based random streams derived from one seed.
#[derive(Debug, Clone)]
struct Streams {
    seed: [u8; 32],
}

impl Streams {
    fn new(rng_seed: u64) -> Self {
        Streams {
            seed: ChaCha8Rng::seed_from_u64(rng_seed).get_seed(),
        }
    }

    fn rng(&self, stream: u64, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(stream);
        rng.set_word_pos(u128::from(block) * 8);
        rng
    }

    fn user_window(&self, user: usize, window: usize) -> ChaCha8Rng {
        self.rng(user as u64 + 1, window as u64)
    }
}

/// Runs the cascade for `cfg.horizon` windows. Seeds activate in window 0;
/// afterwards every inactive user draws an endogenous success with
/// probability `p_peer` (against users active strictly before the window)
/// and an independent exogenous success with probability `p_ext(t)`. When
/// both succeed the label goes to each source with probability proportional
/// to its own probability.
pub fn simulate<T: Scalar>(g: &SocialGraph, cfg: &SimConfig<T>) -> Result<SimOutcome<T>> {
    let n = g.n_nodes();
    cfg.validate(n)?;
    let series = render_profile(&cfg.profile, cfg.horizon)?;
    let streams = Streams::new(cfg.rng_seed);

    let mut window: Vec<Option<usize>> = vec![None; n];
    let mut truth = vec![TruthLabel::Never; n];
    let mut counts = vec![WindowCounts::default(); cfg.horizon];
    let mut seeds = rand::seq::index::sample(&mut streams.rng(0, 0), n, cfg.n_seeds).into_vec();
    seeds.sort_unstable();
    for &s in &seeds {
        window[s] = Some(0);
        truth[s] = TruthLabel::Seed;
    }

    for t in 1..cfg.horizon {
        let p_ext = series.get(t);
        let state = &window;
        let draws: Vec<(usize, TruthLabel)> = (0..n)
            .into_par_iter()
            .filter(|&i| state[i].is_none())
            .filter_map(|i| {
                let elapsed: Vec<u32> = g
                    .peers(i)
                    .iter()
                    .filter_map(|&j| state[j as usize].map(|w| (t - w) as u32))
                    .collect();
                let p_peer = cfg.model.peer_prob(&elapsed);
                let mut rng = streams.user_window(i, t);
                let endo = rng.random::<f64>() < p_peer.as_f64();
                let exo = rng.random::<f64>() < p_ext.as_f64();
                let label = match (endo, exo) {
                    (false, false) => return None,
                    (true, false) => TruthLabel::Endogenous,
                    (false, true) => TruthLabel::Exogenous,
                    (true, true) => {
                        let share = p_peer.as_f64() / (p_peer.as_f64() + p_ext.as_f64());
                        if rng.random::<f64>() < share {
                            TruthLabel::Endogenous
                        } else {
                            TruthLabel::Exogenous
                        }
                    }
                };
                Some((i, label))
            })
            .collect();
        for (i, label) in draws {
            window[i] = Some(t);
            truth[i] = label;
            match label {
                TruthLabel::Endogenous => counts[t].endogenous += 1,
                TruthLabel::Exogenous => counts[t].exogenous += 1,
                _ => unreachable!("only draws are recorded"),
            }
        }
    }

    let labels = truth.iter().map(|l| l.referral()).collect();
    let cascade = Cascade::from_windows(window, cfg.window_width, cfg.horizon)?.with_labels(labels)?;
    Ok(SimOutcome {
        cascade,
        truth,
        counts,
        series,
    })
}

/// Per-window `(endogenous, exogenous)` counts of the true labels.
pub fn ground_truth_series<T>(outcome: &SimOutcome<T>) -> Vec<(usize, usize)> {
    let mut out = vec![(0, 0); outcome.cascade.horizon()];
    for (i, label) in outcome.truth.iter().enumerate() {
        if let Some(t) = outcome.cascade.window(i) {
            match label {
                TruthLabel::Endogenous => out[t].0 += 1,
                TruthLabel::Exogenous => out[t].1 += 1,
                _ => {}
            }
        }
    }
    out
}

/// Session rows for every activated user: endogenous activations become
/// `share` referrals, exogenous ones `external`, seeds `unknown`.
pub fn to_sessions<T>(g: &SocialGraph, outcome: &SimOutcome<T>) -> SessionTable {
    let mut order: Vec<usize> = (0..g.n_nodes())
        .filter(|&i| outcome.cascade.window(i).is_some())
        .collect();
    order.sort_by_key(|&i| (outcome.cascade.window(i), g.external_id(i)));
    let records = order
        .into_iter()
        .map(|i| SessionRecord {
            user_id: g.external_id(i),
            time_login: outcome.cascade.activation_times()[i],
            time_share: -1.0,
            referrer_id: -1,
            referrer_class: outcome.truth[i].referral().as_str().to_string(),
            friend_count: g.degree(i) as u64,
            choice_id: -1,
        })
        .collect();
    SessionTable {
        records,
        has_referrals: true,
    }
}

/// Writes the edge list and the session table of a simulated run.
pub fn export<T>(g: &SocialGraph, outcome: &SimOutcome<T>, edges: &Path, sessions: &Path) -> Result<()> {
    write_edge_list(g, edges)?;
    write_sessions(&to_sessions(g, outcome), sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::powerlaw_cluster_graph;

    fn config(model: EndogenousModel<f64>, profile: ExogenousProfile<f64>, horizon: usize) -> SimConfig<f64> {
        SimConfig {
            model,
            profile,
            n_seeds: 3,
            horizon,
            rng_seed: 7,
            window_width: 30.0,
        }
    }

    #[test]
    fn no_dynamics_means_only_seeds() {
        let g = powerlaw_cluster_graph(60, 2, 0.1, 1).unwrap();
        let cfg = config(
            EndogenousModel::Si { p0: 0.0 },
            ExogenousProfile::Constant { value: 0.0 },
            20,
        );
        let out = simulate(&g, &cfg).unwrap();
        assert_eq!(out.n_activated(), 3);
        assert!(ground_truth_series(&out).iter().all(|&c| c == (0, 0)));
    }

    #[test]
    fn certain_exogenous_activation() {
        let g = powerlaw_cluster_graph(60, 2, 0.1, 1).unwrap();
        let cfg = config(
            EndogenousModel::Si { p0: 0.0 },
            ExogenousProfile::Constant { value: 1.0 },
            2,
        );
        let out = simulate(&g, &cfg).unwrap();
        assert_eq!(out.n_activated(), 60);
        assert_eq!(out.truth.iter().filter(|l| **l == TruthLabel::Exogenous).count(), 57);
        assert_eq!(ground_truth_series(&out)[1], (0, 57));
    }

    #[test]
    fn labels_partition_and_are_deterministic() {
        let g = powerlaw_cluster_graph(300, 3, 0.1, 5).unwrap();
        let cfg = config(
            EndogenousModel::Exp { p0: 0.1, lambda: 0.3 },
            ExogenousProfile::Constant { value: 0.01 },
            40,
        );
        let a = simulate(&g, &cfg).unwrap();
        let b = simulate(&g, &cfg).unwrap();
        assert_eq!(a, b);
        for i in 0..g.n_nodes() {
            assert_eq!(a.truth[i] == TruthLabel::Never, a.cascade.window(i).is_none());
            assert_eq!(a.truth[i] == TruthLabel::Seed, a.cascade.window(i) == Some(0));
        }
        let series = ground_truth_series(&a);
        let total: usize = series.iter().map(|(x, y)| x + y).sum();
        assert_eq!(total + 3, a.n_activated());
        let counted: Vec<(usize, usize)> = a.counts.iter().map(|c| (c.endogenous, c.exogenous)).collect();
        assert_eq!(series, counted);

        let other = simulate(&g, &SimConfig { rng_seed: 8, ..cfg }).unwrap();
        assert_ne!(a.truth, other.truth);
    }

    #[test]
    fn activated_users_had_a_chance() {
        // SI without exogenous pressure: every non-seed activation needs an
        // earlier active peer.
        let g = powerlaw_cluster_graph(200, 2, 0.3, 9).unwrap();
        let cfg = config(
            EndogenousModel::Si { p0: 0.2 },
            ExogenousProfile::Constant { value: 0.0 },
            15,
        );
        let out = simulate(&g, &cfg).unwrap();
        assert!(out.n_activated() > 3);
        for i in 0..g.n_nodes() {
            if let (Some(t), TruthLabel::Endogenous) = (out.cascade.window(i), out.truth[i]) {
                assert!(g
                    .peers(i)
                    .iter()
                    .any(|&j| out.cascade.window(j as usize).is_some_and(|w| w < t)));
            }
        }
    }

    #[test]
    fn sessions_round_trip_through_ingestion() {
        let g = powerlaw_cluster_graph(80, 2, 0.1, 3).unwrap();
        let cfg = config(
            EndogenousModel::Si { p0: 0.1 },
            ExogenousProfile::Constant { value: 0.02 },
            12,
        );
        let out = simulate(&g, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (edges, sessions) = (dir.path().join("edges.txt"), dir.path().join("sessions.csv"));
        export(&g, &out, &edges, &sessions).unwrap();
        let g2 = crate::graph::load_edge_list(&edges, crate::graph::GraphFormat::EdgeList).unwrap();
        let table = crate::cascade::load_sessions(&sessions).unwrap();
        let (g2, c2) = crate::cascade::align_sessions(&g2, &table, 30.0, Some(12)).unwrap();
        for i in 0..g.n_nodes() {
            let j = g2.index_of(g.external_id(i)).unwrap();
            assert_eq!(out.cascade.window(i), c2.window(j));
            assert_eq!(out.cascade.labels().unwrap()[i], c2.labels().unwrap()[j]);
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let g = SocialGraph::from_edges(5, []);
        let mut cfg = config(
            EndogenousModel::Si { p0: 0.1 },
            ExogenousProfile::Constant { value: 0.1 },
            5,
        );
        cfg.n_seeds = 6;
        assert!(simulate(&g, &cfg).is_err());
        cfg.n_seeds = 1;
        cfg.horizon = 0;
        assert!(simulate(&g, &cfg).is_err());
    }
}
