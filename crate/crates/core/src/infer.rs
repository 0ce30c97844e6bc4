//! Alternating maximum-likelihood inference of the global endogenous
//! parameters and the per-window exogenous series.
//!
//! Probabilities (`p0`, `p_ext`) are optimized on a log scale; `lambda`, `k`
//! and `a0` on their natural scale. Every half-step starts from the current
//! estimate and never accepts a worse point, so the total log-likelihood is
//! non-decreasing along the alternation.

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::Cascade;
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::likelihood::{CascadeStats, CorrectionConfig};
use crate::models::{EndogenousModel, ExogenousSeries, ModelKind};
use crate::optimize::{brent, grid, linear_lattice, log_lattice, powell};
use crate::scalar::{median, Scalar};

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_MAX_OUTER: usize = 50;

/// Box constraints for every parameter, as `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamBounds {
    /// Shared by `p0` and `p_ext`.
    pub p: [f64; 2],
    pub lambda: [f64; 2],
    pub k: [f64; 2],
    /// Defaults to `[0, max degree]` of the graph being fitted.
    pub a0: Option<[f64; 2]>,
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            p: [1e-8, 0.999],
            lambda: [0.0, 10.0],
            k: [0.0, 20.0],
            a0: None,
        }
    }
}

/// How two-parameter endogenous models are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoParamStrategy {
    /// Powell's method over both parameters.
    #[default]
    Joint,
    /// Fix `lambda` (EXP) or `a0` (LOG) on a lattice and fit the other
    /// parameter at each lattice point.
    Lattice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub bounds: ParamBounds,
    /// Iteration cap for each inner minimization.
    pub max_iter: usize,
    pub tol: f64,
    pub strategy: TwoParamStrategy,
    /// Points in the fallback and lattice-strategy grids.
    pub lattice_size: usize,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            bounds: ParamBounds::default(),
            max_iter: 200,
            tol: 1e-10,
            strategy: TwoParamStrategy::Joint,
            lattice_size: 25,
        }
    }
}

impl OptimizerSpec {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, [lo, hi]: [f64; 2], min: f64| {
            if lo.is_finite() && hi.is_finite() && lo >= min && lo <= hi {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("bounds [{lo}, {hi}] invalid")))
            }
        };
        let [plo, phi] = self.bounds.p;
        if !(plo > 0.0 && phi < 1.0) {
            return Err(Error::invalid(
                "bounds.p",
                format!("[{plo}, {phi}] must lie inside (0, 1)"),
            ));
        }
        check("bounds.p", self.bounds.p, 0.0)?;
        check("bounds.lambda", self.bounds.lambda, 0.0)?;
        check("bounds.k", self.bounds.k, f64::NEG_INFINITY)?;
        if let Some(a0) = self.bounds.a0 {
            check("bounds.a0", a0, 0.0)?;
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", format!("{} must be positive", self.tol)));
        }
        if self.lattice_size == 0 {
            return Err(Error::invalid("lattice_size", "must be positive"));
        }
        Ok(())
    }
}

/// Per-window estimates from the initialization stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct InitEstimates<T> {
    /// `None` for windows without non-seed activations.
    pub endogenous: Vec<Option<EndogenousModel<T>>>,
    pub series: ExogenousSeries<T>,
    /// Windows whose fit fell back to the lattice.
    pub fallback_windows: Vec<usize>,
}

impl<T: Scalar> InitEstimates<T> {
    /// Per-parameter median over the windows that produced an estimate.
    pub fn median_model(&self, kind: ModelKind) -> Option<EndogenousModel<T>> {
        let rows: Vec<Vec<T>> = self.endogenous.iter().flatten().map(|m| m.params()).collect();
        if rows.is_empty() {
            return None;
        }
        let params: Vec<T> = (0..kind.n_params())
            .map(|j| median(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()).expect("non-empty"))
            .collect();
        Some(EndogenousModel::from_params(kind, &params))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfStep {
    Init,
    Endogenous,
    Exogenous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub step: HalfStep,
    pub loglik: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationDelta {
    /// Largest absolute change of an endogenous parameter.
    pub peer: f64,
    /// `sum_t |change of p_ext(t)|`.
    pub ext: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct InferenceResult<T> {
    pub model: EndogenousModel<T>,
    pub series: ExogenousSeries<T>,
    pub loglik: T,
    pub iterations: usize,
    pub deltas: Vec<IterationDelta>,
    pub converged: bool,
    pub clamp_hits: usize,
    pub trace: Vec<TracePoint>,
    pub init: InitEstimates<T>,
    /// Number of inner fits that fell back to the lattice.
    pub fallbacks: usize,
    pub alpha: f64,
    /// False when no window after the first holds a user at risk: the data
    /// then says nothing about the parameters and `converged` is false too.
    pub identifiable: bool,
}

impl<T: Scalar> InferenceResult<T> {
    /// Half-steps whose log-likelihood dropped by more than `slack`.
    pub fn monotonicity_violations(&self, slack: f64) -> usize {
        self.trace
            .windows(2)
            .filter(|w| w[1].loglik < w[0].loglik - slack)
            .count()
    }
}

/// Parameter vector layout used by the optimizers.
struct Space {
    kind: ModelKind,
    lo: Vec<f64>,
    hi: Vec<f64>,
    p: [f64; 2],
}

/// Maps a log-probability back, keeping rounding inside the bounds.
fn unlog(x: f64, [lo, hi]: [f64; 2]) -> f64 {
    x.exp().clamp(lo, hi)
}

impl Space {
    fn new(kind: ModelKind, b: &ParamBounds, a0_max: f64) -> Self {
        let lp = [b.p[0].ln(), b.p[1].ln()];
        let (lo, hi) = match kind {
            ModelKind::Si => (vec![lp[0]], vec![lp[1]]),
            ModelKind::Exp => (vec![lp[0], b.lambda[0]], vec![lp[1], b.lambda[1]]),
            ModelKind::Log => {
                let a0 = b.a0.unwrap_or([0.0, a0_max]);
                (vec![b.k[0], a0[0]], vec![b.k[1], a0[1]])
            }
        };
        Space { kind, lo, hi, p: b.p }
    }

    fn model<T: Scalar>(&self, x: &[f64]) -> EndogenousModel<T> {
        match self.kind {
            ModelKind::Si => EndogenousModel::Si {
                p0: T::of(unlog(x[0], self.p)),
            },
            ModelKind::Exp => EndogenousModel::Exp {
                p0: T::of(unlog(x[0], self.p)),
                lambda: T::of(x[1]),
            },
            ModelKind::Log => EndogenousModel::Log {
                k: T::of(x[0]),
                a0: T::of(x[1]),
            },
        }
    }

    fn point<T: Scalar>(&self, m: &EndogenousModel<T>) -> Vec<f64> {
        let x: Vec<f64> = match *m {
            EndogenousModel::Si { p0 } => vec![p0.as_f64().ln()],
            EndogenousModel::Exp { p0, lambda } => vec![p0.as_f64().ln(), lambda.as_f64()],
            EndogenousModel::Log { k, a0 } => vec![k.as_f64(), a0.as_f64()],
        };
        x.iter()
            .enumerate()
            .map(|(i, v)| v.clamp(self.lo[i], self.hi[i]))
            .collect()
    }

    fn default_start(&self) -> Vec<f64> {
        let x: Vec<f64> = match self.kind {
            ModelKind::Si => vec![0.01f64.ln()],
            ModelKind::Exp => vec![0.01f64.ln(), 0.5],
            ModelKind::Log => vec![1.0, 1.0],
        };
        x.iter()
            .enumerate()
            .map(|(i, v)| v.clamp(self.lo[i], self.hi[i]))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct EndogenousFit<T> {
    pub model: EndogenousModel<T>,
    pub loglik: T,
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct ExogenousFit<T> {
    pub series: ExogenousSeries<T>,
    pub fallback_windows: Vec<usize>,
}

/// A graph and cascade prepared for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub struct Problem {
    stats: CascadeStats,
    cfg: CorrectionConfig,
    a0_max: f64,
}

impl Problem {
    pub fn new(g: &SocialGraph, c: &Cascade, cfg: CorrectionConfig) -> Result<Self> {
        Ok(Problem {
            stats: CascadeStats::new(g, c)?,
            cfg,
            a0_max: g.max_degree().max(1) as f64,
        })
    }

    pub fn stats(&self) -> &CascadeStats {
        &self.stats
    }

    pub fn correction(&self) -> &CorrectionConfig {
        &self.cfg
    }

    pub fn loglik<T: Scalar>(&self, model: &EndogenousModel<T>, series: &ExogenousSeries<T>) -> (T, usize) {
        self.stats.total_loglik(model, series, &self.cfg)
    }

    fn p_range(opt: &OptimizerSpec) -> (f64, f64) {
        (opt.bounds.p[0].ln(), opt.bounds.p[1].ln())
    }

    /// Jointly fits the endogenous parameters and `p_ext(t)` in each window
    /// separately.
    pub fn init_per_window<T: Scalar>(&self, kind: ModelKind, opt: &OptimizerSpec) -> Result<InitEstimates<T>> {
        opt.validate()?;
        let space = Space::new(kind, &opt.bounds, self.a0_max);
        let (plo, phi) = Self::p_range(opt);
        let mut lo = space.lo.clone();
        let mut hi = space.hi.clone();
        lo.push(plo);
        hi.push(phi);
        let mut start = space.default_start();
        start.push(0.01f64.ln().clamp(plo, phi));
        let n = kind.n_params();

        let fits: Vec<(Option<EndogenousModel<T>>, T, bool)> = (0..self.stats.horizon())
            .into_par_iter()
            .map(|t| {
                let c: T = self.stats.correction(t, &self.cfg);
                if self.stats.activated_users(t).is_empty() {
                    // With no activations the likelihood only falls as p_ext grows.
                    return (None, T::of(opt.bounds.p[0]), false);
                }
                let objective = |x: &[f64]| {
                    let m = space.model::<T>(&x[..n]);
                    let terms = self.stats.window_terms(t, &m);
                    -terms.value(T::of(unlog(x[n], opt.bounds.p)), c).0.as_f64()
                };
                let best = powell(objective, &start, &lo, &hi, opt.tol, opt.max_iter);
                if best.value.is_finite() {
                    (
                        Some(space.model(&best.x[..n])),
                        T::of(unlog(best.x[n], opt.bounds.p)),
                        false,
                    )
                } else {
                    (None, T::of(opt.bounds.p[0]), true)
                }
            })
            .collect();

        let fallback_windows: Vec<usize> = fits.iter().enumerate().filter(|(_, f)| f.2).map(|(t, _)| t).collect();
        if !fallback_windows.is_empty() {
            warn!("per-window initialization failed in windows {fallback_windows:?}");
        }
        Ok(InitEstimates {
            endogenous: fits.iter().map(|f| f.0).collect(),
            series: ExogenousSeries::new(fits.iter().map(|f| f.1).collect())?,
            fallback_windows,
        })
    }

    /// Maximizes the total log-likelihood over the endogenous parameters with
    /// the exogenous series held fixed, starting from `start` (or a default).
    pub fn fit_endogenous_given_ext<T: Scalar>(
        &self,
        kind: ModelKind,
        series: &ExogenousSeries<T>,
        opt: &OptimizerSpec,
        start: Option<&EndogenousModel<T>>,
    ) -> Result<EndogenousFit<T>> {
        opt.validate()?;
        if series.len() != self.stats.horizon() {
            return Err(Error::LengthMismatch {
                what: "exogenous series",
                expected: self.stats.horizon(),
                got: series.len(),
            });
        }
        if let Some(m) = start {
            if m.kind() != kind {
                return Err(Error::invalid(
                    "start",
                    format!("model kind {} does not match {kind}", m.kind()),
                ));
            }
        }
        let space = Space::new(kind, &opt.bounds, self.a0_max);
        let x0 = start.map_or_else(|| space.default_start(), |m| space.point(m));
        let objective = |x: &[f64]| -self.loglik(&space.model::<T>(x), series).0.as_f64();
        let f0 = objective(&x0);

        let (mut x, mut fx) = match (kind, opt.strategy) {
            (ModelKind::Si, _) => {
                let (x, v, _) = brent(
                    |v| objective(&[v]),
                    space.lo[0],
                    space.hi[0],
                    x0[0],
                    opt.tol,
                    opt.max_iter,
                );
                (vec![x], v)
            }
            (_, TwoParamStrategy::Joint) => {
                let m = powell(objective, &x0, &space.lo, &space.hi, opt.tol, opt.max_iter);
                (m.x, m.value)
            }
            (_, TwoParamStrategy::Lattice) => self.lattice_fit(&space, &objective, &x0, opt)?,
        };
        let mut fallback = false;
        if !fx.is_finite() {
            warn!("endogenous fit produced a non-finite objective; using the lattice");
            let (lx, lv) = self.lattice_fit(&space, &objective, &x0, opt)?;
            x = lx;
            fx = lv;
            fallback = true;
        }
        if !(fx <= f0) {
            x = x0;
            fx = f0;
        }
        Ok(EndogenousFit {
            model: space.model(&x),
            loglik: T::of(-fx),
            fallback,
        })
    }

    /// One-parameter fits of the first parameter at each lattice value of
    /// the second; for SI a plain grid over `p0`.
    fn lattice_fit<F>(&self, space: &Space, objective: &F, x0: &[f64], opt: &OptimizerSpec) -> Result<(Vec<f64>, f64)>
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = opt.lattice_size;
        let best = if space.kind == ModelKind::Si {
            grid(|v| objective(&[v]), &linear_lattice(space.lo[0], space.hi[0], n)).map(|(v, f)| (vec![v], f))
        } else {
            let (lo, hi) = (space.lo[1], space.hi[1]);
            let lattice = match space.kind {
                ModelKind::Exp => log_lattice(lo.max(1e-3).min(hi), hi, n),
                _ => linear_lattice(lo, hi, n),
            };
            lattice
                .iter()
                .map(|&second| {
                    let (first, v, _) = brent(
                        |first| objective(&[first, second]),
                        space.lo[0],
                        space.hi[0],
                        x0[0],
                        opt.tol,
                        opt.max_iter,
                    );
                    (vec![first, second], v)
                })
                .filter(|(_, v)| v.is_finite())
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };
        best.ok_or_else(|| Error::Optimization(format!("all {n} lattice fits of the {} model failed", space.kind)))
    }

    /// Fits `p_ext(t)` independently in every window with the endogenous
    /// model held fixed.
    pub fn fit_ext_given_endogenous<T: Scalar>(
        &self,
        model: &EndogenousModel<T>,
        opt: &OptimizerSpec,
        start: Option<&ExogenousSeries<T>>,
    ) -> Result<ExogenousFit<T>> {
        opt.validate()?;
        model.validate()?;
        let (plo, phi) = Self::p_range(opt);
        let default_start = 0.01f64.ln().clamp(plo, phi);
        let terms = self.stats.all_window_terms(model);
        let fits: Vec<(T, bool)> = terms
            .par_iter()
            .enumerate()
            .map(|(t, w)| {
                let c: T = self.stats.correction(t, &self.cfg);
                let objective = |v: f64| -w.value(T::of(unlog(v, opt.bounds.p)), c).0.as_f64();
                let x0 = start.map_or(default_start, |s| s.get(t).as_f64().ln().clamp(plo, phi));
                let (x, v, _) = brent(objective, plo, phi, x0, opt.tol, opt.max_iter);
                if v.is_finite() {
                    (T::of(unlog(x, opt.bounds.p)), false)
                } else {
                    let lattice = log_lattice(opt.bounds.p[0], opt.bounds.p[1], opt.lattice_size);
                    let (p, _) = grid(|p| objective(p.ln()), &lattice).unwrap_or((opt.bounds.p[0], f64::NAN));
                    (T::of(p), true)
                }
            })
            .collect();
        let fallback_windows: Vec<usize> = fits.iter().enumerate().filter(|(_, f)| f.1).map(|(t, _)| t).collect();
        Ok(ExogenousFit {
            series: ExogenousSeries::new(fits.into_iter().map(|f| f.0).collect())?,
            fallback_windows,
        })
    }

    /// Per-window initialization followed by alternating conditional fits
    /// until both parameter sets move less than `eps`, or `max_outer`
    /// iterations have run (then `converged` is false).
    pub fn alternate<T: Scalar>(
        &self,
        kind: ModelKind,
        opt: &OptimizerSpec,
        eps: f64,
        max_outer: usize,
    ) -> Result<InferenceResult<T>> {
        if !(eps > 0.0) {
            return Err(Error::invalid("eps", format!("{eps} must be positive")));
        }
        let init = self.init_per_window::<T>(kind, opt)?;
        let space = Space::new(kind, &opt.bounds, self.a0_max);
        let mut model = init
            .median_model(kind)
            .map(|m| space.model::<T>(&space.point(&m)))
            .unwrap_or_else(|| space.model(&space.default_start()));
        let mut series = init.series.clone();
        let mut fallbacks = init.fallback_windows.len();
        let mut trace = vec![TracePoint {
            iteration: 0,
            step: HalfStep::Init,
            loglik: self.loglik(&model, &series).0.as_f64(),
        }];
        let mut deltas = Vec::new();
        let mut converged = false;
        let mut iterations = 0;

        for it in 1..=max_outer {
            let endo = self.fit_endogenous_given_ext(kind, &series, opt, Some(&model))?;
            fallbacks += endo.fallback as usize;
            trace.push(TracePoint {
                iteration: it,
                step: HalfStep::Endogenous,
                loglik: endo.loglik.as_f64(),
            });
            let ext = self.fit_ext_given_endogenous(&endo.model, opt, Some(&series))?;
            fallbacks += ext.fallback_windows.len();
            trace.push(TracePoint {
                iteration: it,
                step: HalfStep::Exogenous,
                loglik: self.loglik(&endo.model, &ext.series).0.as_f64(),
            });

            let peer = model
                .params()
                .iter()
                .zip(endo.model.params())
                .map(|(a, b)| (*a - b).abs().as_f64())
                .fold(0.0, f64::max);
            let ext_delta: f64 = series
                .values()
                .iter()
                .zip(ext.series.values())
                .map(|(a, b)| (*a - *b).abs().as_f64())
                .sum();
            debug!("iteration {it}: delta peer {peer:.3e}, delta ext {ext_delta:.3e}");
            deltas.push(IterationDelta { peer, ext: ext_delta });
            model = endo.model;
            series = ext.series;
            iterations = it;
            if peer < eps && ext_delta < eps {
                converged = true;
                break;
            }
        }
        let identifiable = (1..self.stats.horizon()).any(|t| self.stats.n_activated(t) + self.stats.n_inactive(t) > 0);
        if !identifiable {
            warn!("no user is at risk after the first window: parameters are not identifiable");
            converged = false;
        } else if !converged {
            warn!("alternating inference did not converge in {max_outer} iterations");
        }
        let (loglik, clamp_hits) = self.loglik(&model, &series);
        Ok(InferenceResult {
            model,
            series,
            loglik,
            iterations,
            deltas,
            converged,
            clamp_hits,
            trace,
            init,
            fallbacks,
            alpha: self.cfg.alpha,
            identifiable,
        })
    }
}

pub fn init_per_window<T: Scalar>(
    g: &SocialGraph,
    c: &Cascade,
    kind: ModelKind,
    cfg: &CorrectionConfig,
    opt: &OptimizerSpec,
) -> Result<InitEstimates<T>> {
    Problem::new(g, c, *cfg)?.init_per_window(kind, opt)
}

pub fn fit_endogenous_given_ext<T: Scalar>(
    g: &SocialGraph,
    c: &Cascade,
    kind: ModelKind,
    series: &ExogenousSeries<T>,
    cfg: &CorrectionConfig,
    opt: &OptimizerSpec,
) -> Result<EndogenousModel<T>> {
    Ok(Problem::new(g, c, *cfg)?
        .fit_endogenous_given_ext(kind, series, opt, None)?
        .model)
}

pub fn fit_ext_given_endogenous<T: Scalar>(
    g: &SocialGraph,
    c: &Cascade,
    model: &EndogenousModel<T>,
    cfg: &CorrectionConfig,
    opt: &OptimizerSpec,
) -> Result<ExogenousSeries<T>> {
    Ok(Problem::new(g, c, *cfg)?
        .fit_ext_given_endogenous(model, opt, None)?
        .series)
}

pub fn alternate<T: Scalar>(
    g: &SocialGraph,
    c: &Cascade,
    kind: ModelKind,
    cfg: &CorrectionConfig,
    opt: &OptimizerSpec,
    eps: f64,
    max_outer: usize,
) -> Result<InferenceResult<T>> {
    Problem::new(g, c, *cfg)?.alternate(kind, opt, eps, max_outer)
}
