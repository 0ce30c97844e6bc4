//! Checks against independent, deliberately naive re-implementations.

#![allow(clippy::needless_range_loop)]

use diffusion_core::attribution::individual_influence;
use diffusion_core::likelihood::{total_loglik, window_loglik};
use diffusion_core::simulate::{simulate, TruthLabel};
use diffusion_core::{
    Cascade, CascadeStats, CorrectionConfig, EndogenousModel, ExogenousProfile, ExogenousSeries, SimConfig, SocialGraph,
};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// `1 - prod_j (1 - q_j)` over the active peers of `i` before window `t`.
fn naive_peer_prob(g: &SocialGraph, c: &Cascade, model: &EndogenousModel, i: usize, t: usize) -> f64 {
    let peers: Vec<usize> = g
        .peers(i)
        .iter()
        .map(|&j| j as usize)
        .filter(|&j| c.window(j).is_some_and(|w| w < t))
        .collect();
    match *model {
        EndogenousModel::Si { p0 } => 1.0 - peers.iter().map(|_| 1.0 - p0).product::<f64>(),
        EndogenousModel::Exp { p0, lambda } => {
            1.0 - peers
                .iter()
                .map(|&j| 1.0 - p0 * (-lambda * (t - c.window(j).unwrap()) as f64).exp())
                .product::<f64>()
        }
        EndogenousModel::Log { k, a0 } => 1.0 / (1.0 + (-k * (peers.len() as f64 - a0)).exp()),
    }
}

/// Every user at risk in window `t` is one Bernoulli trial; survivors are
/// weighted by the correction factor. Window-0 activations are seeds and
/// contribute nothing.
fn brute_loglik(g: &SocialGraph, c: &Cascade, model: &EndogenousModel, ext: &[f64], alpha: f64) -> f64 {
    let mut total = 0.0;
    for t in 0..c.horizon() {
        let mut activated = 0.0;
        let mut inactive = 0.0;
        let mut n_inactive = 0usize;
        for i in 0..g.n_nodes() {
            let w = c.window(i);
            if w.is_some_and(|w| w < t) {
                continue;
            }
            let pp = naive_peer_prob(g, c, model, i, t);
            let stay = (1.0 - pp) * (1.0 - ext[t]);
            if w == Some(t) {
                if t > 0 {
                    activated += (1.0 - stay).ln();
                }
            } else {
                inactive += stay.ln();
                n_inactive += 1;
            }
        }
        let factor = if alpha == 0.0 || n_inactive == 0 {
            1.0
        } else {
            1.0 + alpha * g.n_nodes() as f64 / n_inactive as f64
        };
        total += activated + factor * inactive;
    }
    total
}

fn random_instance(rng: &mut ChaCha8Rng) -> (SocialGraph, Cascade) {
    let n = rng.random_range(2..=30usize);
    let horizon = rng.random_range(1..=10usize);
    let density = rng.random_range(0.05..0.5);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                edges.push((i, j));
            }
        }
    }
    let windows = (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.3 {
                None
            } else {
                Some(rng.random_range(0..horizon))
            }
        })
        .collect();
    (
        SocialGraph::from_edges(n, edges),
        Cascade::from_windows(windows, 30.0, horizon).unwrap(),
    )
}

fn random_model(rng: &mut ChaCha8Rng, kind: usize) -> EndogenousModel {
    match kind {
        0 => EndogenousModel::Si {
            p0: rng.random_range(0.001..0.6),
        },
        1 => EndogenousModel::Exp {
            p0: rng.random_range(0.001..0.9),
            lambda: rng.random_range(0.0..3.0),
        },
        _ => EndogenousModel::Log {
            k: rng.random_range(0.0..1.2),
            a0: rng.random_range(0.0..6.0),
        },
    }
}

#[test]
fn total_loglik_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..300 {
        let (g, c) = random_instance(&mut rng);
        let model = random_model(&mut rng, case % 3);
        let ext: Vec<f64> = (0..c.horizon()).map(|_| rng.random_range(0.0..0.3)).collect();
        let alpha = [0.0, 0.1, 0.5][case % 3];
        let cfg = CorrectionConfig::new(alpha, g.n_nodes()).unwrap();
        let series = ExogenousSeries::new(ext.clone()).unwrap();

        let want = brute_loglik(&g, &c, &model, &ext, alpha);
        let direct = total_loglik(&g, &c, &model, &series, &cfg).unwrap();
        let (fast, hits) = CascadeStats::new(&g, &c).unwrap().total_loglik(&model, &series, &cfg);
        assert_eq!(hits, 0);
        assert!((direct - want).abs() <= 1e-10, "case {case}: direct {direct} vs {want}");
        assert!((fast - want).abs() <= 1e-10, "case {case}: stats {fast} vs {want}");
    }
}

#[test]
fn window_terms_add_up() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (g, c) = random_instance(&mut rng);
        let model = random_model(&mut rng, 1);
        let series = ExogenousSeries::constant(0.05, c.horizon());
        let cfg = CorrectionConfig::none(g.n_nodes());
        let sum: f64 = (0..c.horizon())
            .map(|t| window_loglik(&g, &c, t, &model, 0.05, &cfg).unwrap().value)
            .sum();
        let total = total_loglik(&g, &c, &model, &series, &cfg).unwrap();
        assert!((sum - total).abs() < 1e-10);
        let seeds_only = window_loglik(&g, &c, 0, &model, 0.0, &cfg).unwrap();
        assert_eq!(seeds_only.value, 0.0);
    }
}

#[test]
fn log_space_peer_probabilities_match_direct_products() {
    let elapsed_sets: [&[u32]; 4] = [&[], &[1], &[1, 2, 3], &[1, 1, 4, 9, 2, 7, 30, 5]];
    for elapsed in elapsed_sets {
        for k in 0..100 {
            let p0 = 1e-6 * (0.99f64 / 1e-6).powf(k as f64 / 99.0);
            let lambda = 5.0 * k as f64 / 99.0;
            let si = EndogenousModel::Si { p0 }.peer_prob(elapsed);
            let want_si = 1.0 - elapsed.iter().map(|_| 1.0 - p0).product::<f64>();
            assert!((si - want_si).abs() <= 1e-12, "SI p0 {p0}: {si} vs {want_si}");
            let exp = EndogenousModel::Exp { p0, lambda }.peer_prob(elapsed);
            let want_exp = 1.0
                - elapsed
                    .iter()
                    .map(|&d| 1.0 - p0 * (-lambda * d as f64).exp())
                    .product::<f64>();
            assert!(
                (exp - want_exp).abs() <= 1e-12,
                "EXP p0 {p0} lambda {lambda}: {exp} vs {want_exp}"
            );
        }
    }
}

#[test]
fn edgeless_simulation_has_geometric_activation_times() {
    let n = 3000;
    let horizon = 10;
    let q = 0.05;
    let g = SocialGraph::from_edges(n, std::iter::empty::<(usize, usize)>());
    let cfg = SimConfig {
        model: EndogenousModel::Si { p0: 0.3 },
        profile: ExogenousProfile::Constant { value: q },
        n_seeds: 1,
        horizon,
        rng_seed: 2024,
        window_width: 30.0,
    };
    let out = simulate(&g, &cfg).unwrap();
    assert!(!out.truth.contains(&TruthLabel::Endogenous));

    // Cells: windows 1..horizon, then never.
    let mut observed = vec![0.0; horizon];
    for i in 0..n {
        match (out.truth[i], out.cascade.window(i)) {
            (TruthLabel::Seed, _) => {}
            (_, Some(t)) => observed[t - 1] += 1.0,
            (_, None) => observed[horizon - 1] += 1.0,
        }
    }
    let trials = (n - 1) as f64;
    let mut expected: Vec<f64> = (1..horizon)
        .map(|t| trials * q * (1.0 - q).powi(t as i32 - 1))
        .collect();
    expected.push(trials * (1.0 - q).powi(horizon as i32 - 1));
    let chi2: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dist = ChiSquared::new((expected.len() - 1) as f64).unwrap();
    let p_value = 1.0 - dist.cdf(chi2);
    assert!(p_value > 1e-3, "chi2 {chi2}, p {p_value}, observed {observed:?}");
}

fn conservation_instance(seed: u64) -> (SocialGraph, Cascade, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=40usize);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < 0.2 {
                edges.push((i, j));
            }
        }
    }
    let times = (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.2 {
                -1.0
            } else {
                rng.random_range(0.0..300.0f64).floor()
            }
        })
        .collect();
    let endo = (0..n).map(|_| rng.random::<f64>()).collect();
    (
        SocialGraph::from_edges(n, edges),
        Cascade::from_times(times, 30.0, None).unwrap(),
        endo,
    )
}

proptest! {
    #[test]
    fn uniform_influence_conserves_endogenous_mass(seed in any::<u64>()) {
        let (g, c, endo) = conservation_instance(seed);
        let influence = individual_influence(&g, &c, &endo, Default::default()).unwrap();
        let t = c.activation_times();
        let assigned: f64 = (0..g.n_nodes())
            .filter(|&j| t[j] >= 0.0 && g.peers(j).iter().any(|&m| t[m as usize] >= 0.0 && t[m as usize] < t[j]))
            .map(|j| endo[j])
            .sum();
        let total: f64 = influence.iter().sum();
        prop_assert!((total - assigned).abs() <= 1e-10, "{} vs {}", total, assigned);
    }
}
