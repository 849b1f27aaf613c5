//! Graph generators, standalone reference implementations and the checks
//! shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use old_core::analysis::{combine_leaders, merge_same_ranker, CombineConfig, OutlierFilter};
use old_core::embed::{
    cosine, generate_walks, pair_gradient, pair_loss, train_sgns, EmbeddingMatrix, SgnsConfig, WalkConfig, WalkCorpus,
    WalkDirection, WalkStrategy,
};
use old_core::graph::k_shell;
use old_core::rank::{asne_rank, leader_rank, nlc_rank, PageRankParams, RankingResult};
use old_core::sir::{evaluate_seeds, run_sir, run_sir_keyed, SirConfig, SirDirection, SirTrace};
use old_core::{DirectedGraph, NodeId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Ok(detail)` on success, `Err(detail)` on failure.
pub type Outcome = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- generators ----

/// Each ordered pair becomes an edge with probability `p`.
pub fn random_digraph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> DirectedGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    DirectedGraph::from_edge_indices(n, &edges).unwrap()
}

/// Preferential attachment: each new node follows `m` earlier nodes picked
/// with probability proportional to follower count + 1; a followed node
/// follows back with probability `reciprocity`.
pub fn scale_free_digraph(n: usize, m: usize, reciprocity: f64, rng: &mut ChaCha8Rng) -> DirectedGraph {
    let mut edges = Vec::new();
    // one entry per node plus one per follower
    let mut urn: Vec<usize> = Vec::new();
    let core = m + 1;
    for u in 0..core {
        urn.push(u);
        for v in 0..core {
            if u != v {
                edges.push((u, v));
                urn.push(v);
            }
        }
    }
    let mut chosen = HashSet::new();
    for u in core..n {
        chosen.clear();
        while chosen.len() < m {
            chosen.insert(urn[rng.random_range(0..urn.len())]);
        }
        let mut targets: Vec<usize> = chosen.iter().copied().collect();
        targets.sort_unstable();
        for v in targets {
            edges.push((u, v));
            urn.push(v);
            if rng.random::<f64>() < reciprocity {
                edges.push((v, u));
                urn.push(u);
            }
        }
        urn.push(u);
    }
    DirectedGraph::from_edge_indices(n, &edges).unwrap()
}

/// Undirected Barabási–Albert graph stored with one directed edge per pair.
pub fn barabasi_albert(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DirectedGraph {
    let mut edges = Vec::new();
    let mut urn: Vec<usize> = Vec::new();
    for u in 0..=m {
        for v in 0..u {
            edges.push((u, v));
            urn.push(u);
            urn.push(v);
        }
    }
    let mut chosen = HashSet::new();
    for u in (m + 1)..n {
        chosen.clear();
        while chosen.len() < m {
            chosen.insert(urn[rng.random_range(0..urn.len())]);
        }
        let mut targets: Vec<usize> = chosen.iter().copied().collect();
        targets.sort_unstable();
        for v in targets {
            edges.push((u, v));
            urn.push(u);
            urn.push(v);
        }
    }
    DirectedGraph::from_edge_indices(n, &edges).unwrap()
}

/// Two blocks `0..block` and `block..2*block` with directed edge
/// probabilities `p_in` inside and `p_out` across.
pub fn planted_blocks(block: usize, p_in: f64, p_out: f64, rng: &mut ChaCha8Rng) -> DirectedGraph {
    let n = 2 * block;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let p = if (u < block) == (v < block) { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    DirectedGraph::from_edge_indices(n, &edges).unwrap()
}

pub fn edge_list(g: &DirectedGraph) -> Vec<(usize, usize)> {
    g.edges().map(|(u, v)| (u.index(), v.index())).collect()
}

pub fn random_embedding(n: usize, dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> EmbeddingMatrix {
    let data = (0..n * dim).map(|_| rng.random_range(-scale..scale)).collect();
    EmbeddingMatrix::from_vec(n, dim, data).unwrap()
}

// ---- reference implementations ----

/// Undirected simple adjacency sets built straight from the edge list.
pub fn undirected_adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<HashSet<usize>> {
    let mut adj = vec![HashSet::new(); n];
    for &(u, v) in edges {
        if u != v {
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    adj
}

/// Core numbers by literal definition: the k-core is what survives
/// repeatedly deleting every node of degree < k.
pub fn peeling_oracle(adj: &[HashSet<usize>]) -> Vec<u32> {
    let n = adj.len();
    let mut core = vec![0u32; n];
    let mut k = 1u32;
    loop {
        let mut alive = vec![true; n];
        loop {
            let doomed: Vec<usize> = (0..n)
                .filter(|&v| alive[v] && adj[v].iter().filter(|&&u| alive[u]).count() < k as usize)
                .collect();
            if doomed.is_empty() {
                break;
            }
            for v in doomed {
                alive[v] = false;
            }
        }
        if !alive.iter().any(|&a| a) {
            return core;
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
        k += 1;
    }
}

pub fn bfs_distances(adj: &[HashSet<usize>], source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Nodes at undirected distance `1..=k`, sorted.
pub fn bfs_oracle(adj: &[HashSet<usize>], source: usize, k: usize) -> Vec<usize> {
    let d = bfs_distances(adj, source);
    (0..adj.len()).filter(|&v| d[v] >= 1 && d[v] <= k).collect()
}

/// Direct per-node evaluation of `sum_{j in G3(i)} Ks_i exp(-|x_i - x_j|^2)`.
pub fn nlc_oracle(n: usize, edges: &[(usize, usize)], rows: &[Vec<f64>]) -> Vec<f64> {
    let adj = undirected_adjacency(n, edges);
    let ks = peeling_oracle(&adj);
    (0..n)
        .map(|i| {
            let dist = bfs_distances(&adj, i);
            let mut total = 0.0;
            for j in 0..n {
                if dist[j] >= 1 && dist[j] <= 3 {
                    let mut sq = 0.0;
                    for k in 0..rows[i].len() {
                        sq += (rows[i][k] - rows[j][k]).powi(2);
                    }
                    total += ks[i] as f64 * (-sq).exp();
                }
            }
            total
        })
        .collect()
}

/// PageRank with teleport and uniform dangling redistribution, by a dense
/// linear solve. `weights[(i, j)]` are unnormalised edge weights.
pub fn dense_pagerank(n: usize, weights: &HashMap<(usize, usize), f64>, d: f64) -> Vec<f64> {
    let mut p = DMatrix::<f64>::zeros(n, n);
    for (&(i, j), &w) in weights {
        p[(i, j)] = w;
    }
    let mut dangling = vec![false; n];
    for i in 0..n {
        let s: f64 = p.row(i).sum();
        if s == 0.0 {
            dangling[i] = true;
        } else {
            for j in 0..n {
                p[(i, j)] /= s;
            }
        }
    }
    let nf = n as f64;
    let mut a = DMatrix::<f64>::identity(n, n) - p.transpose() * d;
    for j in 0..n {
        if dangling[j] {
            for i in 0..n {
                a[(i, j)] -= d / nf;
            }
        }
    }
    let b = DVector::from_element(n, (1.0 - d) / nf);
    let r = a.lu().solve(&b).expect("pagerank system is non-singular");
    let total = r.sum();
    r.iter().map(|x| x / total).collect()
}

/// LeaderRank fixed point from the stationary distribution of the walk on
/// the ground-augmented graph.
pub fn dense_leaderrank(g: &DirectedGraph) -> Vec<f64> {
    let n = g.node_count();
    let size = n + 1;
    let mut t = DMatrix::<f64>::zeros(size, size);
    for (i, j) in edge_list(g) {
        t[(i, j)] = 1.0;
    }
    for i in 0..n {
        t[(i, n)] = 1.0;
        t[(n, i)] = 1.0;
    }
    for i in 0..size {
        let s: f64 = t.row(i).sum();
        for j in 0..size {
            t[(i, j)] /= s;
        }
    }
    let mut a = t.transpose() - DMatrix::<f64>::identity(size, size);
    for j in 0..size {
        a[(n, j)] = 1.0;
    }
    let mut b = DVector::zeros(size);
    b[n] = 1.0;
    let pi = a.lu().solve(&b).expect("augmented chain is irreducible");
    let nf = n as f64;
    (0..n).map(|i| nf * pi[i] + pi[n]).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---- criterion 1: k-shell ----

pub fn check_kshell(graphs: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let mut r = rng(seed);
    let densities = [0.003, 0.01, 0.03, 0.08, 0.2];
    for t in 0..graphs {
        let n = r.random_range(1..=200);
        let p = densities[t % densities.len()];
        let g = random_digraph(n, p, &mut r);
        let adj = undirected_adjacency(n, &edge_list(&g));
        let expected = peeling_oracle(&adj);
        let got = k_shell(&g).core;
        ensure(got == expected, || format!("graph {t} (n={n}, p={p}) differs from oracle"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2}s"))?;
    Ok(format!("{graphs} graphs exact, {secs:.2}s"))
}

// ---- criterion 2: ranking oracles ----

pub fn check_ranking_oracles(graphs: usize, seed: u64) -> Outcome {
    let mut r = rng(seed);
    let params = PageRankParams::default();
    let mut worst_asne: f64 = 0.0;
    let mut worst_leader: f64 = 0.0;
    for t in 0..graphs {
        let n = 20;
        let g = random_digraph(n, [0.05, 0.1, 0.2][t % 3], &mut r);
        let emb = random_embedding(n, 4, 1.0, &mut r);
        let mut w = HashMap::new();
        for (i, j) in edge_list(&g) {
            let s: f64 = (0..4).map(|k| emb.row(NodeId::from(j))[k] * emb.row(NodeId::from(i))[k]).sum();
            w.insert((i, j), s.exp());
        }
        let expected = dense_pagerank(n, &w, params.damping);
        let got = asne_rank(&g, &emb, &params).map_err(|e| e.to_string())?.scores();
        worst_asne = worst_asne.max(max_abs_diff(&got, &expected));

        let got = leader_rank(&g, 1e-13, 100_000).map_err(|e| e.to_string())?.scores();
        worst_leader = worst_leader.max(max_abs_diff(&got, &dense_leaderrank(&g)));
    }
    ensure(worst_asne < 1e-8, || format!("asnerank L-inf error {worst_asne:e}"))?;
    ensure(worst_leader < 1e-8, || format!("leaderrank L-inf error {worst_leader:e}"))?;
    check_identical_embedding_order(graphs, seed ^ 0xabc)?;
    Ok(format!(
        "{graphs} graphs; L-inf asnerank {worst_asne:.1e}, leaderrank {worst_leader:.1e}; identical-embedding order matches PageRank"
    ))
}

/// Whether `order` sorts `reference` descending with ties (within `eps`)
/// broken by ascending NodeId.
pub fn order_consistent(order: &[NodeId], reference: &[f64], eps: f64) -> bool {
    order.windows(2).all(|w| {
        let (a, b) = (reference[w[0].index()], reference[w[1].index()]);
        a > b + eps || ((a - b).abs() <= eps && w[0] < w[1])
    })
}

pub fn check_identical_embedding_order(graphs: usize, seed: u64) -> Outcome {
    let mut r = rng(seed);
    for t in 0..graphs {
        let n = 20;
        let g = random_digraph(n, [0.05, 0.1, 0.2][t % 3], &mut r);
        let row: Vec<f64> = (0..3).map(|_| r.random_range(-2.0..2.0)).collect();
        let emb = EmbeddingMatrix::from_rows(&vec![row; n]).unwrap();
        let ranked = asne_rank(&g, &emb, &PageRankParams::default()).map_err(|e| e.to_string())?;
        let w: HashMap<_, _> = edge_list(&g).into_iter().map(|e| (e, 1.0)).collect();
        let reference = dense_pagerank(n, &w, 0.85);
        let order: Vec<NodeId> = ranked.nodes().collect();
        ensure(order_consistent(&order, &reference, 1e-9), || {
            format!("graph {t}: order differs from unweighted PageRank")
        })?;
    }
    Ok(format!("{graphs} graphs"))
}

// ---- criterion 3: NLCRank ----

pub fn nlc_cases(seed: u64) -> Vec<(usize, Vec<(usize, usize)>, Vec<Vec<f64>>)> {
    let mut r = rng(seed);
    let mut cases = vec![
        (
            4,
            vec![(0, 1), (1, 2), (2, 3)],
            vec![vec![0.0, 0.0], vec![0.5, -0.25], vec![1.0, 1.0], vec![-0.3, 0.8]],
        ),
        (
            6,
            vec![(1, 0), (2, 0), (3, 0), (4, 0), (5, 0)],
            vec![vec![0.1, 0.2], vec![0.3, 0.1], vec![-0.2, 0.0], vec![0.0, 0.9], vec![1.5, 0.2], vec![0.4, 0.4]],
        ),
        (
            7,
            vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3), (6, 6)],
            (0..7).map(|i| vec![i as f64 * 0.1, 1.0 - i as f64 * 0.2, 0.5]).collect(),
        ),
    ];
    for n in [30, 60] {
        let g = random_digraph(n, 0.06, &mut r);
        let rows = (0..n).map(|_| (0..8).map(|_| r.random_range(-0.6..0.6)).collect()).collect();
        cases.push((n, edge_list(&g), rows));
    }
    cases
}

pub fn check_nlc_exact(seed: u64) -> Outcome {
    let mut worst: f64 = 0.0;
    let cases = nlc_cases(seed);
    for (c, (n, edges, rows)) in cases.iter().enumerate() {
        let g = DirectedGraph::from_edge_indices(*n, edges).unwrap();
        let emb = EmbeddingMatrix::from_rows(rows).unwrap();
        let got = nlc_rank(&g, &emb, &k_shell(&g)).map_err(|e| e.to_string())?.scores();
        let expected = nlc_oracle(*n, edges, rows);
        let err = max_abs_diff(&got, &expected);
        worst = worst.max(err);
        ensure(err <= 1e-12, || format!("case {c}: error {err:e}"))?;

        // identical rows: exactly Ks_i * |G3(i)|
        let same = EmbeddingMatrix::from_rows(&vec![rows[0].clone(); *n]).unwrap();
        let got = nlc_rank(&g, &same, &k_shell(&g)).map_err(|e| e.to_string())?.scores();
        let adj = undirected_adjacency(*n, edges);
        let ks = peeling_oracle(&adj);
        for i in 0..*n {
            let exact = ks[i] as f64 * bfs_oracle(&adj, i, 3).len() as f64;
            ensure(got[i] == exact, || format!("case {c} node {i}: {} != Ks*|G3| = {exact}", got[i]))?;
        }
    }
    Ok(format!("{} graphs, max error {worst:.1e}; identical-embedding case exact", cases.len()))
}

// ---- criterion 4: node2vec bias ----

/// Empirical next-hop frequency for every observed (previous, current)
/// context against the normalised 1/p : 1 : 1/q table. Returns the largest
/// absolute deviation and the number of second-order steps.
pub fn node2vec_deviation(g: &DirectedGraph, direction: WalkDirection, p: f64, q: f64, walks: usize, len: usize, seed: u64) -> (f64, usize) {
    let cfg = WalkConfig {
        walk_length: len,
        num_walks: walks,
        window: 1,
        strategy: WalkStrategy::Biased { p, q },
        direction,
        rng_seed: seed,
    };
    let corpus = generate_walks(g, &cfg).unwrap();
    let mut counts: HashMap<(usize, usize), HashMap<usize, u64>> = HashMap::new();
    let mut steps = 0;
    for w in corpus.iter() {
        for t in w.windows(3) {
            *counts.entry((t[0].index(), t[1].index())).or_default().entry(t[2].index()).or_default() += 1;
            steps += 1;
        }
    }
    let nbrs = |v: usize| -> Vec<usize> { direction.neighbors(g, NodeId::from(v)).iter().map(|x| x.index()).collect() };
    let mut worst: f64 = 0.0;
    for (&(prev, cur), hits) in &counts {
        let total: u64 = hits.values().sum();
        let prev_nbrs: HashSet<usize> = nbrs(prev).into_iter().collect();
        let weights: Vec<(usize, f64)> = nbrs(cur)
            .into_iter()
            .map(|x| {
                let w = if x == prev {
                    1.0 / p
                } else if prev_nbrs.contains(&x) {
                    1.0
                } else {
                    1.0 / q
                };
                (x, w)
            })
            .collect();
        let z: f64 = weights.iter().map(|w| w.1).sum();
        for (x, w) in weights {
            let empirical = *hits.get(&x).unwrap_or(&0) as f64 / total as f64;
            worst = worst.max((empirical - w / z).abs());
        }
    }
    (worst, steps)
}

/// Toy graph where, walking 0 -> 1, the next hop can return (0), stay at
/// distance one from 0 (2) or move away (3).
pub fn node2vec_toy() -> DirectedGraph {
    DirectedGraph::from_edge_indices(4, &[(0, 1), (0, 2), (1, 2), (1, 3)]).unwrap()
}

pub fn check_node2vec_bias(seed: u64) -> Outcome {
    let g = node2vec_toy();
    let (worst, steps) = node2vec_deviation(&g, WalkDirection::Undirected, 0.25, 4.0, 1250, 22, seed);
    ensure(steps >= 100_000, || format!("only {steps} steps"))?;
    ensure(worst < 0.02, || format!("max deviation {worst:.4} over {steps} steps"))?;
    Ok(format!("max abs deviation {worst:.4} over {steps} steps"))
}

// ---- criterion 5: SGNS ----

pub fn repeated_pair_corpus(reps: usize) -> WalkCorpus {
    WalkCorpus::from_walks(2, vec![vec![NodeId(0), NodeId(1)]; reps]).unwrap()
}

pub fn check_sgns_loss(seed: u64) -> Outcome {
    let cfg = SgnsConfig {
        dim: 16,
        window: 1,
        negatives: 5,
        epochs: 5,
        lr: 0.025,
        rng_seed: seed,
        workers: 1,
    };
    let (_, trace) = train_sgns(&repeated_pair_corpus(200), &cfg).map_err(|e| e.to_string())?;
    let l = &trace.epoch_losses;
    ensure(l.windows(2).all(|w| w[1] < w[0]), || format!("losses not strictly decreasing: {l:?}"))?;
    Ok(format!("epoch losses {:.4} -> {:.4}", l[0], l[4]))
}

fn uniform_vec(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn check_sgns_gradient(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let dim = 8;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let center = uniform_vec(&mut r, dim);
        let context = uniform_vec(&mut r, dim);
        let negs: Vec<Vec<f64>> = (0..3).map(|_| uniform_vec(&mut r, dim)).collect();
        let loss = |c: &[f64], o: &[f64], n: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = n.iter().map(Vec::as_slice).collect();
            pair_loss(c, o, &refs)
        };
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = pair_gradient(&center, &context, &refs);
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for k in 0..dim {
            let (mut a, mut b) = (center.clone(), center.clone());
            a[k] += h;
            b[k] -= h;
            numeric.push((loss(&a, &context, &negs) - loss(&b, &context, &negs)) / (2.0 * h));
            analytic.push(g.center[k]);

            let (mut a, mut b) = (context.clone(), context.clone());
            a[k] += h;
            b[k] -= h;
            numeric.push((loss(&center, &a, &negs) - loss(&center, &b, &negs)) / (2.0 * h));
            analytic.push(g.context[k]);

            for m in 0..negs.len() {
                let (mut a, mut b) = (negs.clone(), negs.clone());
                a[m][k] += h;
                b[m][k] -= h;
                numeric.push((loss(&center, &context, &a) - loss(&center, &context, &b)) / (2.0 * h));
                analytic.push(g.negatives[m][k]);
            }
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        worst = worst.max(diff / scale);
    }
    ensure(worst < 1e-4, || format!("relative error {worst:e}"))?;
    Ok(format!("10 points, max relative error {worst:.1e}"))
}

/// Mean intra-block minus mean inter-block cosine similarity.
pub fn block_margin(emb: &EmbeddingMatrix, block: usize) -> f64 {
    let n = emb.node_count();
    let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
    for i in 0..n {
        for j in (i + 1)..n {
            let c = cosine(emb.row(NodeId::from(i)), emb.row(NodeId::from(j)));
            if (i < block) == (j < block) {
                intra += c;
                ni += 1;
            } else {
                inter += c;
                nx += 1;
            }
        }
    }
    intra / ni as f64 - inter / nx as f64
}

pub fn check_sgns_planted(seeds: u64) -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    for s in 0..seeds {
        let mut r = rng(1000 + s);
        let g = planted_blocks(50, 0.3, 0.02, &mut r);
        let walks = WalkConfig {
            walk_length: 40,
            num_walks: 10,
            window: 5,
            rng_seed: s,
            ..Default::default()
        };
        let corpus = generate_walks(&g, &walks).map_err(|e| e.to_string())?;
        let cfg = SgnsConfig {
            dim: 32,
            window: 5,
            rng_seed: s,
            ..Default::default()
        };
        let (emb, _) = train_sgns(&corpus, &cfg).map_err(|e| e.to_string())?;
        if block_margin(&emb, 50) > 0.0 {
            wins += 1;
        }
    }
    let needed = seeds - seeds / 20;
    ensure(wins >= needed, || format!("separation in {wins}/{seeds} seeds"))?;
    Ok(format!("separation in {wins}/{seeds} seeds, {:.1}s", start.elapsed().as_secs_f64()))
}

// ---- criterion 6: SIR ----

pub fn chain(len: usize) -> DirectedGraph {
    let edges: Vec<_> = (0..len - 1).map(|i| (i + 1, i)).collect();
    DirectedGraph::from_edge_indices(len, &edges).unwrap()
}

pub fn check_trace_invariants(trace: &SirTrace, n: usize, seeds: usize) -> Result<(), String> {
    let steps = trace.steps();
    for t in 0..steps {
        ensure(trace.susceptible[t] + trace.infected[t] + trace.recovered[t] == n, || {
            format!("S+I+R != N at step {t}")
        })?;
        if t > 0 {
            ensure(trace.susceptible[t] <= trace.susceptible[t - 1], || format!("S rose at step {t}"))?;
            ensure(trace.recovered[t] >= trace.recovered[t - 1], || format!("R fell at step {t}"))?;
        }
    }
    ensure(trace.infected[steps - 1] == 0, || "run ended with infected nodes".into())?;
    let f = trace.final_infected_ever();
    ensure(f >= seeds && f <= n, || format!("final count {f} outside [{seeds}, {n}]"))
}

pub fn check_sir_deterministic() -> Outcome {
    let g = chain(12);
    for gamma in [1.0, 0.3] {
        let mut cfg = SirConfig::new(0.0, gamma, vec![NodeId(0), NodeId(5), NodeId(9)]);
        for seed in 0..20 {
            cfg.rng_seed = seed;
            let (trace, ever) = run_sir_keyed(&g, &cfg, seed).map_err(|e| e.to_string())?;
            let expected: Vec<bool> = (0..12).map(|i| [0, 5, 9].contains(&i)).collect();
            ensure(ever == expected, || "tau=0 infected a non-seed".into())?;
            check_trace_invariants(&trace, 12, 3)?;
        }
    }
    for len in [1, 2, 7, 30] {
        let g = chain(len);
        let cfg = SirConfig::new(1.0, 1.0, vec![NodeId(0)]);
        let t = run_sir(&g, &cfg).map_err(|e| e.to_string())?;
        ensure(t.final_infected_ever() == len, || format!("chain {len}: final {}", t.final_infected_ever()))?;
        for step in 0..len {
            ensure(t.infected[step] == 1 && t.infected_ever(step) == step + 1, || {
                format!("chain {len}: wave broken at step {step}")
            })?;
        }
    }
    Ok("tau=0 keeps exactly the seeds; tau=1 chain wave exact".into())
}

pub fn check_sir_binomial(seed: u64) -> Outcome {
    let g = DirectedGraph::from_edge_indices(2, &[(1, 0)]).unwrap();
    let mut cfg = SirConfig::new(0.5, 1.0, vec![NodeId(0)]);
    cfg.repetitions = 10_000;
    cfg.rng_seed = seed;
    let s = evaluate_seeds(&g, &cfg).map_err(|e| e.to_string())?;
    let hits = s.finals.iter().filter(|&&f| f == 2).count();
    let freq = hits as f64 / 10_000.0;
    ensure((freq - 0.5).abs() <= 0.015, || format!("infection frequency {freq}"))?;
    Ok(format!("second node infected in {freq:.4} of 10^4 runs"))
}

pub fn check_sir_coupling(runs: u64, seed: u64) -> Outcome {
    let mut r = rng(seed);
    let g = random_digraph(150, 0.03, &mut r);
    let n = g.node_count();
    let taus = [0.0, 0.02, 0.05, 0.1, 0.2, 0.35, 0.6, 1.0];
    let mut steps_checked = 0;
    for run in 0..runs {
        let mut nodes: Vec<NodeId> = g.nodes().collect();
        nodes.shuffle(&mut r);
        let seeds = nodes[..5].to_vec();
        let gamma = [1.0, 0.5, 0.2][run as usize % 3];
        let direction = if run % 2 == 0 { SirDirection::Influence } else { SirDirection::Undirected };
        let mut previous: Option<Vec<bool>> = None;
        for &tau in &taus {
            let mut cfg = SirConfig::new(tau, gamma, seeds.clone());
            cfg.direction = direction;
            let (trace, ever) = run_sir_keyed(&g, &cfg, run).map_err(|e| e.to_string())?;
            check_trace_invariants(&trace, n, seeds.len()).map_err(|e| format!("run {run} tau {tau}: {e}"))?;
            if gamma == 1.0 {
                for t in 1..trace.steps() {
                    ensure(trace.recovered[t] == trace.recovered[t - 1] + trace.infected[t - 1], || {
                        format!("run {run}: gamma=1 node stayed infectious")
                    })?;
                }
            }
            steps_checked += trace.steps();
            if let Some(prev) = &previous {
                ensure(prev.iter().zip(&ever).all(|(&a, &b)| !a || b), || {
                    format!("run {run}: infected-ever set shrank at tau {tau}")
                })?;
            }
            previous = Some(ever);
        }
    }
    Ok(format!(
        "{runs} coupled runs x {} tau values nested; S+I+R=N on {steps_checked} steps",
        taus.len()
    ))
}

pub fn check_sir_all(seed: u64) -> Outcome {
    let a = check_sir_deterministic()?;
    let b = check_sir_binomial(seed)?;
    let c = check_sir_coupling(100, seed)?;
    Ok(format!("{a}; {b}; {c}"))
}

// ---- criterion 8: combination ----

pub fn ranking_from_order(order: &[usize]) -> RankingResult {
    let n = order.len();
    let mut scores = vec![0.0; n];
    for (pos, &v) in order.iter().enumerate() {
        scores[v] = (n - pos) as f64;
    }
    RankingResult::from_scores("manual", serde_json::Value::Null, scores).unwrap()
}

pub fn check_borda_hand() -> Outcome {
    let g = DirectedGraph::from_edge_indices(3, &[]).unwrap();
    let filter = OutlierFilter::new(&g, 0.0).map_err(|e| e.to_string())?;
    // a=0, b=1, c=2: (a,b,c), (b,a,c), (b,c,a)
    let lists = [ranking_from_order(&[0, 1, 2]), ranking_from_order(&[1, 0, 2]), ranking_from_order(&[1, 2, 0])];
    let refs: Vec<&RankingResult> = lists.iter().collect();
    let merged = merge_same_ranker(&refs, &filter).map_err(|e| e.to_string())?;
    let head = merged.candidates[0].node;
    ensure(head == NodeId(1), || format!("merged head is {head}, expected b"))?;
    Ok("Borda head = b".into())
}

/// Splits 15 leaders from six random rankings of a scale-free graph.
pub fn check_combine_structure(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let g = scale_free_digraph(300, 3, 0.2, &mut r);
    let n = g.node_count();
    let mut lists = Vec::new();
    for k in 0..6 {
        let scores: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        lists.push(RankingResult::from_scores(format!("m{k}"), serde_json::Value::Null, scores).unwrap());
    }
    let cfg = CombineConfig::default();
    let filter = OutlierFilter::new(&g, cfg.outlier_percentile).map_err(|e| e.to_string())?;
    let a: Vec<&RankingResult> = lists[..3].iter().collect();
    let b: Vec<&RankingResult> = lists[3..].iter().collect();
    let ma = merge_same_ranker(&a, &filter).map_err(|e| e.to_string())?;
    // force overlap: the NLCRank family agrees with the ASNERank family head
    let mb = merge_same_ranker(&[a[0], b[0], b[1]], &filter).map_err(|e| e.to_string())?;
    let c = combine_leaders(&ma, &mb, &cfg).map_err(|e| e.to_string())?;
    ensure(c.asnerank_part.len() == 5 && c.nlcrank_part.len() == 10, || {
        format!("split {}+{}", c.asnerank_part.len(), c.nlcrank_part.len())
    })?;
    let all: HashSet<NodeId> = c.all().collect();
    ensure(all.len() == 15, || "parts overlap".into())?;
    ensure(all.iter().all(|&v| !filter.is_outlier(v)), || "an outlier was selected".into())?;
    Ok("5 ASNERank + 10 NLCRank, disjoint, no outliers".into())
}
