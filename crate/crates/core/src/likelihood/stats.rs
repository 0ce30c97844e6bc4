use rayon::prelude::*;

use super::{activation_log_prob, ext_log_survival, CorrectionConfig, WindowLikelihood};
use crate::cascade::Cascade;
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::models::{EndogenousModel, ExogenousSeries};
use crate::scalar::{pairwise_sum, Scalar};

/// Parameter-independent summary of a (graph, cascade) pair.
///
/// Per window `t` it keeps
/// - the elapsed windows to every active peer of each user activated in `t`,
/// - a histogram over elapsed windows of (inactive user, active peer) pairs,
/// - a histogram over active-peer counts of inactive users.
///
/// These determine the window log-likelihood for every endogenous model, so
/// one likelihood evaluation costs O(activations + T) instead of O(E).
#[derive(Debug, Clone)]
pub struct CascadeStats {
    n_nodes: usize,
    horizon: usize,
    n_activated: Vec<usize>,
    n_inactive: Vec<usize>,
    activated: Vec<Vec<usize>>,
    elapsed_offsets: Vec<Vec<usize>>,
    elapsed: Vec<Vec<u32>>,
    /// `pair_hist[t][d]`, `d` in `1..=t`.
    pair_hist: Vec<Vec<u64>>,
    /// `(active peers, number of inactive users)` per window.
    count_hist: Vec<Vec<(u32, u64)>>,
    max_count: usize,
}

/// Per-window quantities for a fixed endogenous model: the log-survival of
/// each user activated in the window and the summed log-survival of the
/// inactive users. Only `p_ext` and `c` remain free.
#[derive(Debug, Clone)]
pub struct WindowTerms<T> {
    pub activated_log_survival: Vec<T>,
    pub inactive_log_survival: T,
    pub n_inactive: usize,
}

impl<T: Scalar> WindowTerms<T> {
    /// Window log-likelihood and clamp hits at the given `p_ext` and factor.
    pub fn value(&self, p_ext: T, c: T) -> (T, usize) {
        let log_ext = ext_log_survival(p_ext);
        let mut clamps = 0;
        let mut acc = T::zero();
        for &s in &self.activated_log_survival {
            let (term, clamped) = activation_log_prob(s, log_ext);
            clamps += clamped as usize;
            acc = acc + term;
        }
        let inactive = self.inactive_log_survival + T::of_count(self.n_inactive) * log_ext;
        (acc + c * inactive, clamps)
    }
}

enum Tables<T> {
    /// SI, and EXP at lambda = 0.
    Constant(T),
    /// `log(1 - q(d))` indexed by elapsed windows.
    Elapsed(Vec<T>),
    /// `log(1 - p(a))` indexed by active-peer count.
    Count(Vec<T>),
}

impl CascadeStats {
    pub fn new(g: &SocialGraph, c: &Cascade) -> Result<Self> {
        if c.n_users() != g.n_nodes() {
            return Err(Error::LengthMismatch {
                what: "cascade users",
                expected: g.n_nodes(),
                got: c.n_users(),
            });
        }
        let n = g.n_nodes();
        let horizon = c.horizon();
        let by_window = c.users_by_window();
        // Window index with "never" mapped to the horizon.
        let w_of = |i: usize| c.window(i).unwrap_or(horizon);

        let n_activated: Vec<usize> = by_window.iter().map(Vec::len).collect();
        let mut n_inactive = vec![0usize; horizon];
        let mut remaining = n;
        for t in 0..horizon {
            remaining -= n_activated[t];
            n_inactive[t] = remaining;
        }

        let mut activated = Vec::with_capacity(horizon);
        let mut elapsed_offsets = Vec::with_capacity(horizon);
        let mut elapsed = Vec::with_capacity(horizon);
        for (t, users) in by_window.iter().enumerate() {
            let mut ids = Vec::new();
            let mut offs = vec![0];
            let mut flat = Vec::new();
            if t > 0 {
                for &i in users {
                    ids.push(i);
                    flat.extend(g.peers(i).iter().filter_map(|&j| {
                        let wj = w_of(j as usize);
                        (wj < t).then(|| (t - wj) as u32)
                    }));
                    offs.push(flat.len());
                }
            }
            activated.push(ids);
            elapsed_offsets.push(offs);
            elapsed.push(flat);
        }

        // For peers of window-s activators, count how many are still inactive
        // at each later window t via a suffix sum over their activation windows.
        let mut pair_hist: Vec<Vec<u64>> = (0..horizon).map(|t| vec![0u64; t + 1]).collect();
        let mut peer_windows = vec![0u64; horizon + 1];
        for (s, users) in by_window.iter().enumerate() {
            peer_windows.iter_mut().for_each(|x| *x = 0);
            for &j in users {
                for &i in g.peers(j) {
                    peer_windows[w_of(i as usize)] += 1;
                }
            }
            let mut still_inactive = peer_windows[horizon];
            for t in (s + 1..horizon).rev() {
                pair_hist[t][t - s] = still_inactive;
                still_inactive += peer_windows[t];
            }
        }

        let mut count_hist = Vec::with_capacity(horizon);
        let mut counts = vec![0u32; n];
        let mut max_count = 0usize;
        let mut scratch: Vec<u64> = vec![0; g.max_degree() + 1];
        for t in 0..horizon {
            for i in 0..n {
                if w_of(i) > t {
                    scratch[counts[i] as usize] += 1;
                }
            }
            let hist: Vec<(u32, u64)> = scratch
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(a, &k)| (a as u32, k))
                .collect();
            if let Some(&(a, _)) = hist.last() {
                max_count = max_count.max(a as usize);
            }
            scratch.iter_mut().for_each(|x| *x = 0);
            count_hist.push(hist);
            for &j in &by_window[t] {
                for &i in g.peers(j) {
                    counts[i as usize] += 1;
                }
            }
        }
        let max_activated = elapsed_offsets
            .iter()
            .flat_map(|o| o.windows(2).map(|w| w[1] - w[0]))
            .max()
            .unwrap_or(0);

        Ok(CascadeStats {
            n_nodes: n,
            horizon,
            n_activated,
            n_inactive,
            activated,
            elapsed_offsets,
            elapsed,
            pair_hist,
            count_hist,
            max_count: max_count.max(max_activated),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Activations in window `t`, seeds included.
    pub fn n_activated(&self, t: usize) -> usize {
        self.n_activated[t]
    }

    pub fn n_inactive(&self, t: usize) -> usize {
        self.n_inactive[t]
    }

    /// Users activated in `t` that carry a likelihood term (none in window 0).
    pub fn activated_users(&self, t: usize) -> &[usize] {
        &self.activated[t]
    }

    /// Elapsed windows to the active peers of the `k`-th entry of
    /// [`activated_users`](Self::activated_users).
    pub fn elapsed(&self, t: usize, k: usize) -> &[u32] {
        let o = &self.elapsed_offsets[t];
        &self.elapsed[t][o[k]..o[k + 1]]
    }

    /// Largest active-peer count any user can see.
    pub fn max_active_peers(&self) -> usize {
        self.max_count
    }

    pub fn correction<T: Scalar>(&self, t: usize, cfg: &CorrectionConfig) -> T {
        cfg.factor_or_one(self.n_inactive[t])
    }

    fn tables<T: Scalar>(&self, model: &EndogenousModel<T>) -> Tables<T> {
        match *model {
            EndogenousModel::Si { .. } => Tables::Constant(model.pair_log_survival(1)),
            EndogenousModel::Exp { lambda, .. } if lambda == T::zero() => Tables::Constant(model.pair_log_survival(0)),
            EndogenousModel::Exp { .. } => {
                Tables::Elapsed((0..=self.horizon).map(|d| model.pair_log_survival(d)).collect())
            }
            EndogenousModel::Log { .. } => {
                Tables::Count((0..=self.max_count).map(|a| model.count_log_survival(a)).collect())
            }
        }
    }

    fn terms_with<T: Scalar>(&self, t: usize, tables: &Tables<T>) -> WindowTerms<T> {
        let activated_log_survival = (0..self.activated[t].len())
            .map(|k| {
                let el = self.elapsed(t, k);
                match tables {
                    Tables::Constant(s) => T::of_count(el.len()) * *s,
                    Tables::Elapsed(table) => el.iter().fold(T::zero(), |acc, &d| acc + table[d as usize]),
                    Tables::Count(table) => table[el.len()],
                }
            })
            .collect();
        let inactive_log_survival = match tables {
            Tables::Constant(s) => {
                let pairs: u64 = self.pair_hist[t].iter().sum();
                T::of(pairs as f64) * *s
            }
            Tables::Elapsed(table) => self.pair_hist[t]
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .fold(T::zero(), |acc, (d, &k)| acc + T::of(k as f64) * table[d]),
            Tables::Count(table) => self.count_hist[t]
                .iter()
                .fold(T::zero(), |acc, &(a, k)| acc + T::of(k as f64) * table[a as usize]),
        };
        WindowTerms {
            activated_log_survival,
            inactive_log_survival,
            n_inactive: self.n_inactive[t],
        }
    }

    pub fn window_terms<T: Scalar>(&self, t: usize, model: &EndogenousModel<T>) -> WindowTerms<T> {
        self.terms_with(t, &self.tables(model))
    }

    /// All windows' terms for one model, computed in parallel.
    pub fn all_window_terms<T: Scalar>(&self, model: &EndogenousModel<T>) -> Vec<WindowTerms<T>> {
        let tables = self.tables(model);
        (0..self.horizon)
            .into_par_iter()
            .map(|t| self.terms_with(t, &tables))
            .collect()
    }

    pub fn window_loglik<T: Scalar>(
        &self,
        t: usize,
        model: &EndogenousModel<T>,
        p_ext: T,
        cfg: &CorrectionConfig,
    ) -> WindowLikelihood<T> {
        let c = self.correction(t, cfg);
        let (value, clamp_hits) = self.window_terms(t, model).value(p_ext, c);
        WindowLikelihood {
            value,
            n_activated: self.n_activated[t],
            n_inactive: self.n_inactive[t],
            c,
            clamp_hits,
        }
    }

    /// Total log-likelihood and clamp hits; windows evaluated in parallel and
    /// reduced in a fixed pairwise order.
    pub fn total_loglik<T: Scalar>(
        &self,
        model: &EndogenousModel<T>,
        series: &ExogenousSeries<T>,
        cfg: &CorrectionConfig,
    ) -> (T, usize) {
        assert_eq!(series.len(), self.horizon, "exogenous series length");
        let tables = self.tables(model);
        let per_window: Vec<(T, usize)> = (0..self.horizon)
            .into_par_iter()
            .map(|t| {
                let c = self.correction(t, cfg);
                self.terms_with(t, &tables).value(series.get(t), c)
            })
            .collect();
        let values: Vec<T> = per_window.iter().map(|&(v, _)| v).collect();
        (pairwise_sum(&values), per_window.iter().map(|&(_, k)| k).sum())
    }
}
