//! Subcommand bodies: load data, run the core library, write outputs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use diffusion_core::attribution::{
    baseline_scores, collective_influence, counts_from_scores, individual_influence, responsibility, roc_auc,
};
use diffusion_core::cascade::{align_sessions, load_sessions};
use diffusion_core::graph::{
    configuration_model, load_edge_list, powerlaw_cluster_graph, write_edge_list, GraphFormat,
};
use diffusion_core::models::load_series;
use diffusion_core::simulate::{ground_truth_series, simulate as run_simulation, to_sessions};
use diffusion_core::{
    Cascade, CorrectionConfig, DegreeSequence, ExogenousProfile, InferenceResult, Problem, ReferralClass,
    ResponsibilityScore, SimConfig, SimOutcome, SocialGraph,
};

use crate::config::{CascadeSource, ExperimentConfig, GraphSource};
use crate::plot::{line_chart, Series};
use crate::CliError;

type CliResult<T = ()> = Result<T, CliError>;

struct Data {
    graph: SocialGraph,
    cascade: Cascade,
    sim: Option<SimOutcome>,
}

/// What `infer` writes to `result.json`; `evaluate` and `influence` can read it back.
#[derive(Debug, Serialize, Deserialize)]
struct ResultFile {
    model_kind: String,
    alpha: f64,
    n_all: usize,
    dt_minutes: f64,
    n_nodes: usize,
    n_activated: usize,
    horizon: usize,
    half_decay_windows: Option<f64>,
    half_decay_hours: Option<f64>,
    monotonicity_violations: usize,
    result: InferenceResult,
}

fn runtime(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| runtime(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| runtime(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| runtime(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

fn finish(path: &Path, mut w: BufWriter<File>) -> CliResult {
    w.flush().map_err(|e| runtime(path, e))
}

fn load_graph(cfg: &ExperimentConfig) -> CliResult<SocialGraph> {
    Ok(match &cfg.graph {
        GraphSource::File { path, format } => {
            let format = match format {
                Some(f) => *f,
                None if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gml")) => GraphFormat::Gml,
                None => GraphFormat::EdgeList,
            };
            load_edge_list(path, format)?
        }
        GraphSource::HolmeKim { n, m, p } => powerlaw_cluster_graph(*n, *m, *p, cfg.graph_seed())?,
        GraphSource::Configuration { degrees, degrees_path } => {
            let degrees = match (degrees, degrees_path) {
                (Some(d), _) => d.clone(),
                (None, Some(path)) => read_degrees(path)?,
                (None, None) => unreachable!("checked by validate"),
            };
            let seq = DegreeSequence::new(degrees).map_err(|e| CliError::Config(format!("graph.degrees: {e}")))?;
            configuration_model(&seq, cfg.graph_seed())
        }
    })
}

fn read_degrees(path: &Path) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| runtime(path, e))?;
    text.lines()
        .enumerate()
        .map(|(k, l)| (k, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(k, l)| {
            l.parse()
                .map_err(|e| CliError::Runtime(format!("{}: line {}: {e}", path.display(), k + 1)))
        })
        .collect()
}

fn load_data(cfg: &ExperimentConfig) -> CliResult<Data> {
    let graph = load_graph(cfg)?;
    match &cfg.cascade {
        CascadeSource::Sessions { path, horizon } => {
            let table = load_sessions(path)?;
            let (graph, cascade) = align_sessions(&graph, &table, cfg.dt, *horizon)?;
            info!(
                "loaded {} sessions onto {} users, {} windows",
                table.records.len(),
                graph.n_nodes(),
                cascade.horizon()
            );
            Ok(Data {
                graph,
                cascade,
                sim: None,
            })
        }
        CascadeSource::Simulate {
            model,
            profile,
            profile_path,
            n_seeds,
            horizon,
        } => {
            let profile = match (profile, profile_path) {
                (Some(p), _) => p.clone(),
                (None, Some(path)) => ExogenousProfile::Custom {
                    series: load_series(path)?,
                },
                (None, None) => unreachable!("checked by validate"),
            };
            let sim_cfg = SimConfig {
                model: *model,
                profile,
                n_seeds: *n_seeds,
                horizon: *horizon,
                rng_seed: cfg.simulation_seed(),
                window_width: cfg.dt,
            };
            let outcome = run_simulation(&graph, &sim_cfg)?;
            info!(
                "simulated {} activations on {} users",
                outcome.n_activated(),
                graph.n_nodes()
            );
            Ok(Data {
                graph,
                cascade: outcome.cascade.clone(),
                sim: Some(outcome),
            })
        }
    }
}

fn fit(cfg: &ExperimentConfig, data: &Data, alpha: f64) -> CliResult<InferenceResult> {
    let n_all = cfg.inference.n_all.unwrap_or(data.graph.n_nodes());
    let problem = Problem::new(&data.graph, &data.cascade, CorrectionConfig::new(alpha, n_all)?)?;
    let result = problem.alternate::<f64>(
        cfg.model,
        &cfg.inference.optimizer,
        cfg.inference.eps,
        cfg.inference.max_outer,
    )?;
    if !result.converged {
        warn!(
            "alpha = {alpha}: no convergence after {} iterations; reporting the last estimate",
            result.iterations
        );
    }
    if result.clamp_hits > 0 {
        warn!("{} probabilities were clamped away from 0 or 1", result.clamp_hits);
    }
    Ok(result)
}

fn result_file(cfg: &ExperimentConfig, data: &Data, result: InferenceResult) -> ResultFile {
    let half = result.model.half_decay_windows();
    ResultFile {
        model_kind: result.model.kind().to_string(),
        alpha: result.alpha,
        n_all: cfg.inference.n_all.unwrap_or(data.graph.n_nodes()),
        dt_minutes: cfg.dt,
        n_nodes: data.graph.n_nodes(),
        n_activated: data.cascade.n_activated(),
        horizon: data.cascade.horizon(),
        half_decay_windows: half,
        half_decay_hours: half.map(|h| h * cfg.dt / 60.0),
        monotonicity_violations: result.monotonicity_violations(1e-9),
        result,
    }
}

fn read_result(path: &Path, data: &Data) -> CliResult<InferenceResult> {
    let text = std::fs::read_to_string(path).map_err(|e| runtime(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let file: ResultFile = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(format!("{}: {}: {}", path.display(), e.path(), e.inner())))?;
    if file.result.series.len() != data.cascade.horizon() {
        return Err(CliError::Config(format!(
            "{}: result covers {} windows but the cascade has {}",
            path.display(),
            file.result.series.len(),
            data.cascade.horizon()
        )));
    }
    Ok(file.result)
}

fn obtain_result(cfg: &ExperimentConfig, data: &Data, reuse: Option<&Path>) -> CliResult<InferenceResult> {
    match reuse {
        Some(path) => read_result(path, data),
        None => fit(cfg, data, cfg.inference.alpha),
    }
}

// ---------------------------------------------------------------- simulate

fn write_simulation(dir: &Path, cfg: &ExperimentConfig, data: &Data) -> CliResult {
    let sim = data
        .sim
        .as_ref()
        .ok_or_else(|| CliError::Config("cascade.source: `simulate` needs a simulated cascade".into()))?;
    let g = &data.graph;
    let edges = dir.join("edges.txt");
    write_edge_list(g, &edges)?;
    let sessions = dir.join("sessions.csv");
    diffusion_core::cascade::write_sessions(&to_sessions(g, sim), &sessions)?;

    let truth_path = dir.join("truth.csv");
    let mut w = create(&truth_path)?;
    writeln!(w, "user_id,window,activation_time,label").map_err(|e| runtime(&truth_path, e))?;
    let times = sim.cascade.activation_times();
    for i in 0..g.n_nodes() {
        let (window, time) = match sim.cascade.window(i) {
            Some(t) => (t.to_string(), times[i].to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(w, "{},{window},{time},{}", g.external_id(i), sim.truth[i].as_str())
            .map_err(|e| runtime(&truth_path, e))?;
    }
    finish(&truth_path, w)?;

    let truth = ground_truth_series(sim);
    let per_window: Vec<Value> = truth
        .iter()
        .enumerate()
        .map(|(t, &(endo, exo))| json!({"window": t, "endogenous": endo, "exogenous": exo, "p_ext": sim.series.get(t)}))
        .collect();
    let mut labels = BTreeMap::new();
    for l in &sim.truth {
        *labels.entry(l.as_str()).or_insert(0usize) += 1;
    }
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(
        &dir.join("summary.json"),
        &json!({
            "created_unix": created,
            "seed": cfg.seed,
            "simulation_seed": cfg.simulation_seed(),
            "n_nodes": g.n_nodes(),
            "n_edges": g.n_edges(),
            "horizon": sim.cascade.horizon(),
            "dt_minutes": cfg.dt,
            "n_activated": sim.n_activated(),
            "labels": labels,
            "cascade": cfg.cascade,
            "per_window": per_window,
        }),
    )
}

pub fn simulate(cfg: &ExperimentConfig) -> CliResult {
    if !matches!(cfg.cascade, CascadeSource::Simulate { .. }) {
        return Err(CliError::Config(
            "cascade.source: `simulate` needs a simulated cascade".into(),
        ));
    }
    let data = load_data(cfg)?;
    write_simulation(&cfg.out, cfg, &data)
}

// ------------------------------------------------------------------- infer

fn write_inference(dir: &Path, cfg: &ExperimentConfig, data: &Data, result: &InferenceResult) -> CliResult {
    let stats = diffusion_core::CascadeStats::new(&data.graph, &data.cascade)?;
    let scores = responsibility(
        result,
        &data.graph,
        &data.cascade,
        diffusion_core::ResponsibilityVariant::Ratio,
    )?;
    let expected = counts_from_scores(&scores, data.cascade.horizon());
    let truth = data.sim.as_ref().map(ground_truth_series);

    let path = dir.join("windows.csv");
    let mut w = create(&path)?;
    let mut header =
        "window,n_activated,n_inactive,p_ext,p_ext_init,expected_endogenous,expected_exogenous".to_string();
    if truth.is_some() {
        header.push_str(",true_endogenous,true_exogenous,true_p_ext");
    }
    writeln!(w, "{header}").map_err(|e| runtime(&path, e))?;
    for t in 0..data.cascade.horizon() {
        let mut row = format!(
            "{t},{},{},{},{},{},{}",
            stats.n_activated(t),
            stats.n_inactive(t),
            result.series.get(t),
            result.init.series.get(t),
            expected[t].0,
            expected[t].1
        );
        if let (Some(truth), Some(sim)) = (&truth, &data.sim) {
            row.push_str(&format!(",{},{},{}", truth[t].0, truth[t].1, sim.series.get(t)));
        }
        writeln!(w, "{row}").map_err(|e| runtime(&path, e))?;
    }
    finish(&path, w)?;

    let path = dir.join("trace.csv");
    let mut w = create(&path)?;
    writeln!(w, "iteration,step,loglik,delta_peer,delta_ext").map_err(|e| runtime(&path, e))?;
    for p in &result.trace {
        let step = serde_json::to_value(p.step).ok();
        let step = step.as_ref().and_then(Value::as_str).unwrap_or("?");
        let delta = match (p.step, p.iteration.checked_sub(1).and_then(|k| result.deltas.get(k))) {
            (diffusion_core::infer::HalfStep::Exogenous, Some(d)) => format!("{},{}", d.peer, d.ext),
            _ => ",".to_string(),
        };
        writeln!(w, "{},{step},{},{delta}", p.iteration, p.loglik).map_err(|e| runtime(&path, e))?;
    }
    finish(&path, w)?;

    write_json(&dir.join("result.json"), &result_file(cfg, data, result.clone()))
}

fn alpha_dir(out: &Path, alpha: f64) -> PathBuf {
    out.join(format!("alpha-{alpha}"))
}

pub fn infer(cfg: &ExperimentConfig) -> CliResult {
    let data = load_data(cfg)?;
    if cfg.inference.alpha_sweep.is_empty() {
        let result = fit(cfg, &data, cfg.inference.alpha)?;
        return write_inference(&cfg.out, cfg, &data, &result);
    }
    let path = cfg.out.join("sweep.csv");
    let mut rows = vec!["alpha,loglik,params,iterations,converged,mean_p_ext,mean_p_ext_last_tenth".to_string()];
    for &alpha in &cfg.inference.alpha_sweep {
        let result = fit(cfg, &data, alpha)?;
        let dir = alpha_dir(&cfg.out, alpha);
        std::fs::create_dir_all(&dir).map_err(|e| runtime(&dir, e))?;
        write_inference(&dir, cfg, &data, &result)?;
        let values = result.series.values();
        let tail = (values.len() / 10).max(1).min(values.len());
        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        let params: Vec<String> = result.model.params().iter().map(|p| p.to_string()).collect();
        rows.push(format!(
            "{alpha},{},{},{},{},{},{}",
            result.loglik,
            params.join(";"),
            result.iterations,
            result.converged,
            mean(values),
            mean(&values[values.len() - tail..])
        ));
    }
    rows.push(String::new());
    write_text(&path, &rows.join("\n"))
}

// ---------------------------------------------------------------- evaluate

fn user_labels(data: &Data) -> Option<Vec<Option<bool>>> {
    match &data.sim {
        Some(sim) => Some(sim.exogenous_labels()),
        None => data
            .cascade
            .labels()
            .map(|l| l.iter().map(|c| c.exogenous_label()).collect()),
    }
}

fn write_evaluation(dir: &Path, cfg: &ExperimentConfig, data: &Data, result: &InferenceResult) -> CliResult {
    let variant = cfg.attribution.variant;
    let scores = responsibility(result, &data.graph, &data.cascade, variant)?;
    let baseline: BTreeMap<usize, f64> = baseline_scores(&data.graph, &data.cascade)?.into_iter().collect();
    let labels = user_labels(data);
    let label_of = |u: usize| labels.as_ref().and_then(|l| l[u]);

    let path = dir.join("responsibility.csv");
    let mut w = create(&path)?;
    writeln!(w, "user_id,window,p_peer,p_ext,responsibility,baseline,label").map_err(|e| runtime(&path, e))?;
    for s in &scores {
        let label = match label_of(s.user) {
            Some(true) => "exogenous",
            Some(false) => "endogenous",
            None => "",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{label}",
            data.graph.external_id(s.user),
            s.window,
            s.p_peer,
            s.p_ext,
            s.r,
            baseline[&s.user]
        )
        .map_err(|e| runtime(&path, e))?;
    }
    finish(&path, w)?;

    write_histogram(dir, &scores, cfg.attribution.histogram_bins, &label_of)?;
    write_activation_plot(dir, data, &scores)?;

    let labelled: Vec<(&ResponsibilityScore, bool)> =
        scores.iter().filter_map(|s| label_of(s.user).map(|l| (s, l))).collect();
    let positives = labelled.iter().filter(|(_, l)| *l).count();
    let negatives = labelled.len() - positives;
    let mut summary = json!({
        "variant": variant,
        "alpha": result.alpha,
        "n_scored": scores.len(),
        "n_labelled": labelled.len(),
        "n_positive": positives,
        "n_negative": negatives,
    });
    if positives == 0 || negatives == 0 {
        warn!("no usable exogenous/endogenous labels ({positives} positive, {negatives} negative); AUC omitted");
        return write_json(&dir.join("auc.json"), &summary);
    }
    let truth: Vec<bool> = labelled.iter().map(|(_, l)| *l).collect();
    let ours: Vec<f64> = labelled.iter().map(|(s, _)| s.r).collect();
    let base: Vec<f64> = labelled.iter().map(|(s, _)| baseline[&s.user]).collect();
    let roc_ours = roc_auc(&ours, &truth)?;
    let roc_base = roc_auc(&base, &truth)?;
    summary["auc_responsibility"] = json!(roc_ours.auc);
    summary["auc_baseline"] = json!(roc_base.auc);

    let path = dir.join("roc.csv");
    let mut w = create(&path)?;
    writeln!(w, "scorer,threshold,fpr,tpr").map_err(|e| runtime(&path, e))?;
    for (name, roc) in [("responsibility", &roc_ours), ("baseline", &roc_base)] {
        for k in 0..roc.thresholds.len() {
            writeln!(w, "{name},{},{},{}", roc.thresholds[k], roc.fpr[k], roc.tpr[k]).map_err(|e| runtime(&path, e))?;
        }
    }
    finish(&path, w)?;
    let curve = |roc: &diffusion_core::RocCurve| roc.fpr.iter().copied().zip(roc.tpr.iter().copied()).collect();
    let names = [
        format!("responsibility (AUC {:.3})", roc_ours.auc),
        format!("baseline (AUC {:.3})", roc_base.auc),
    ];
    let svg = line_chart(
        "ROC",
        "false positive rate",
        "true positive rate",
        &[
            Series {
                name: &names[0],
                points: curve(&roc_ours),
            },
            Series {
                name: &names[1],
                points: curve(&roc_base),
            },
        ],
        false,
    );
    write_text(&dir.join("roc.svg"), &svg)?;
    write_json(&dir.join("auc.json"), &summary)
}

fn write_histogram(
    dir: &Path,
    scores: &[ResponsibilityScore],
    bins: usize,
    label_of: &dyn Fn(usize) -> Option<bool>,
) -> CliResult {
    let mut counts = vec![[0usize; 3]; bins];
    for s in scores {
        let b = ((s.r.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[b][0] += 1;
        match label_of(s.user) {
            Some(true) => counts[b][1] += 1,
            Some(false) => counts[b][2] += 1,
            None => {}
        }
    }
    let path = dir.join("histogram.csv");
    let mut w = create(&path)?;
    writeln!(w, "bin_lo,bin_hi,all,exogenous,endogenous").map_err(|e| runtime(&path, e))?;
    for (b, c) in counts.iter().enumerate() {
        let lo = b as f64 / bins as f64;
        let hi = (b + 1) as f64 / bins as f64;
        writeln!(w, "{lo},{hi},{},{},{}", c[0], c[1], c[2]).map_err(|e| runtime(&path, e))?;
    }
    finish(&path, w)?;

    let step = |k: usize| -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = counts
            .iter()
            .enumerate()
            .map(|(b, c)| (b as f64 / bins as f64, c[k] as f64))
            .collect();
        pts.push((1.0, counts[bins - 1][k] as f64));
        pts
    };
    let svg = line_chart(
        "Exogenous responsibility",
        "responsibility",
        "users",
        &[
            Series {
                name: "all",
                points: step(0),
            },
            Series {
                name: "exogenous label",
                points: step(1),
            },
            Series {
                name: "endogenous label",
                points: step(2),
            },
        ],
        true,
    );
    write_text(&dir.join("histogram.svg"), &svg)
}

fn write_activation_plot(dir: &Path, data: &Data, scores: &[ResponsibilityScore]) -> CliResult {
    let horizon = data.cascade.horizon();
    let expected = counts_from_scores(scores, horizon);
    let by_window = data.cascade.users_by_window();
    let pts = |f: &dyn Fn(usize) -> f64| (0..horizon).map(|t| (t as f64, f(t))).collect::<Vec<_>>();
    let mut series = vec![
        Series {
            name: "activations",
            points: pts(&|t| by_window[t].len() as f64),
        },
        Series {
            name: "expected endogenous",
            points: pts(&|t| expected[t].0),
        },
        Series {
            name: "expected exogenous",
            points: pts(&|t| expected[t].1),
        },
    ];
    if let Some(sim) = &data.sim {
        let truth = ground_truth_series(sim);
        series.push(Series {
            name: "true endogenous",
            points: pts(&|t| truth[t].0 as f64),
        });
        series.push(Series {
            name: "true exogenous",
            points: pts(&|t| truth[t].1 as f64),
        });
    }
    let svg = line_chart("Activations per window", "window", "users", &series, false);
    write_text(&dir.join("activations.svg"), &svg)
}

pub fn evaluate(cfg: &ExperimentConfig, reuse: Option<&Path>) -> CliResult {
    let data = load_data(cfg)?;
    let result = obtain_result(cfg, &data, reuse)?;
    write_evaluation(&cfg.out, cfg, &data, &result)
}

// --------------------------------------------------------------- influence

fn min_max(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

fn group_means(scores: &[f64], groups: &BTreeMap<&'static str, Vec<usize>>) -> CliResult<BTreeMap<&'static str, f64>> {
    groups
        .iter()
        .map(|(&name, members)| Ok((name, collective_influence(scores, members)?)))
        .collect()
}

fn write_influence(dir: &Path, cfg: &ExperimentConfig, data: &Data, result: &InferenceResult) -> CliResult {
    let (g, c) = (&data.graph, &data.cascade);
    let weighting = cfg.attribution.weighting;
    let scores = responsibility(result, g, c, diffusion_core::ResponsibilityVariant::Ratio)?;
    let mut endo_model = vec![0.0; g.n_nodes()];
    for s in &scores {
        endo_model[s.user] = (1.0 - s.r).clamp(0.0, 1.0);
    }
    let model = individual_influence(g, c, &endo_model, weighting)?;
    let labels = c.labels();
    let raw = match labels {
        Some(labels) => {
            let endo: Vec<f64> = labels
                .iter()
                .zip(c.windows())
                .map(|(l, w)| {
                    if w.is_some() && *l == ReferralClass::Share {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            Some(individual_influence(g, c, &endo, weighting)?)
        }
        None => {
            warn!("no referral labels: raw influence omitted");
            None
        }
    };

    let path = dir.join("influence.csv");
    let mut w = create(&path)?;
    writeln!(w, "user_id,window,class,influence_model,influence_raw").map_err(|e| runtime(&path, e))?;
    for i in 0..g.n_nodes() {
        let window = c.window(i).map(|t| t.to_string()).unwrap_or_default();
        let class = labels.map(|l| l[i].as_str()).unwrap_or("");
        let raw_i = raw.as_ref().map(|r| r[i].to_string()).unwrap_or_default();
        writeln!(w, "{},{window},{class},{},{raw_i}", g.external_id(i), model[i]).map_err(|e| runtime(&path, e))?;
    }
    finish(&path, w)?;

    let mut groups: BTreeMap<&'static str, Vec<usize>> = BTreeMap::new();
    for &class in &cfg.attribution.groups {
        let members: Vec<usize> = match labels {
            Some(l) => (0..g.n_nodes())
                .filter(|&i| c.window(i).is_some() && l[i] == class)
                .collect(),
            None => Vec::new(),
        };
        if members.is_empty() {
            warn!("group `{}` has no members; omitted", class.as_str());
        } else {
            groups.insert(class.as_str(), members);
        }
    }
    let sizes: BTreeMap<&str, usize> = groups.iter().map(|(k, v)| (*k, v.len())).collect();
    let mut summary = json!({
        "weighting": weighting,
        "group_sizes": sizes,
        "model": group_means(&model, &groups)?,
        "model_normalized": group_means(&min_max(&model), &groups)?,
    });
    if let Some(raw) = &raw {
        summary["raw"] = json!(group_means(raw, &groups)?);
        summary["raw_normalized"] = json!(group_means(&min_max(raw), &groups)?);
    }
    write_json(&dir.join("collective.json"), &summary)
}

pub fn influence(cfg: &ExperimentConfig, reuse: Option<&Path>) -> CliResult {
    let data = load_data(cfg)?;
    let result = obtain_result(cfg, &data, reuse)?;
    write_influence(&cfg.out, cfg, &data, &result)
}

// ------------------------------------------------------------------ report

pub fn report(cfg: &ExperimentConfig) -> CliResult {
    let data = load_data(cfg)?;
    if data.sim.is_some() {
        write_simulation(&cfg.out, cfg, &data)?;
    }
    let result = fit(cfg, &data, cfg.inference.alpha)?;
    write_inference(&cfg.out, cfg, &data, &result)?;
    write_evaluation(&cfg.out, cfg, &data, &result)?;
    write_influence(&cfg.out, cfg, &data, &result)
}
