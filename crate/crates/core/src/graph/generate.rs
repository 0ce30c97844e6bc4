use rand::seq::{IndexedRandom, SliceRandom};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DegreeSequence, SocialGraph};
use crate::error::{Error, Result};

/// Uniform stub matching. Self-loops and repeated pairs produced by the
/// matching are discarded, so realized degrees never exceed the requested ones.
pub fn configuration_model(degrees: &DegreeSequence, rng_seed: u64) -> SocialGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut stubs: Vec<usize> = degrees
        .degrees()
        .iter()
        .enumerate()
        .flat_map(|(node, &d)| std::iter::repeat_n(node, d))
        .collect();
    stubs.shuffle(&mut rng);
    let edges = stubs.chunks_exact(2).map(|pair| (pair[0], pair[1]));
    SocialGraph::from_edges(degrees.len(), edges)
}

/// Holme–Kim growth: preferential attachment of `m` edges per new node, each
/// attachment after the first followed with probability `p` by a
/// triangle-closing step to a neighbour of the previous target.
pub fn powerlaw_cluster_graph(n: usize, m: usize, p: f64, rng_seed: u64) -> Result<SocialGraph> {
    if m < 1 || n <= m {
        return Err(Error::invalid(
            "m",
            format!("powerlaw cluster graph needs n > m >= 1 (n = {n}, m = {m})"),
        ));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("triangle probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(m * (n - m));
    let mut repeated: Vec<usize> = (0..m).collect();

    let mut add_edge = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        if !adj[a].contains(&b) {
            adj[a].push(b);
            adj[b].push(a);
            edges.push((a, b));
        }
    };

    for source in m..n {
        let mut targets = random_subset(&repeated, m, &mut rng);
        let mut target = targets.pop().expect("m >= 1");
        add_edge(&mut adj, source, target);
        repeated.push(target);
        let mut count = 1;
        while count < m {
            if rng.random::<f64>() < p {
                let neighborhood: Vec<usize> = adj[target]
                    .iter()
                    .copied()
                    .filter(|&nbr| nbr != source && !adj[source].contains(&nbr))
                    .collect();
                if let Some(&nbr) = neighborhood.choose(&mut rng) {
                    add_edge(&mut adj, source, nbr);
                    repeated.push(nbr);
                    count += 1;
                    continue;
                }
            }
            target = targets.pop().expect("m distinct targets drawn");
            add_edge(&mut adj, source, target);
            repeated.push(target);
            count += 1;
        }
        repeated.extend(std::iter::repeat_n(source, m));
    }
    Ok(SocialGraph::from_edges(n, edges))
}

/// `m` distinct elements drawn from `seq` with repetition-weighted probability.
fn random_subset(seq: &[usize], m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(m);
    while out.len() < m {
        let x = *seq.choose(rng).expect("non-empty sequence");
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}
