//! Discrete-time SIR spreading for judging the reach of a seed set.
//!
//! Each step, every infected node contacts each susceptible neighbour along
//! the influence direction and infects it when a uniform draw falls below
//! `tau`; afterwards each node that was already infected before the step
//! recovers when its own draw falls below `gamma`. Nodes infected during a
//! step start spreading on the next one.
//!
//! Draws are keyed by `(run, node, neighbour, infectious round)` rather than
//! taken from a sequential stream. Two runs with the same seed therefore see
//! the same random numbers for the same contact regardless of `tau`, which
//! makes infected-ever sets nested as `tau` grows.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::seed::{derive, unit_f64};

/// Which edges carry infection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SirDirection {
    /// Followee infects follower (reverse of the follow edge).
    #[default]
    Influence,
    Undirected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirConfig {
    pub tau: f64,
    pub gamma: f64,
    pub seeds: Vec<NodeId>,
    pub repetitions: usize,
    pub rng_seed: u64,
    pub direction: SirDirection,
}

impl SirConfig {
    pub fn new(tau: f64, gamma: f64, seeds: Vec<NodeId>) -> Self {
        SirConfig {
            tau,
            gamma,
            seeds,
            repetitions: 50,
            rng_seed: 0,
            direction: SirDirection::Influence,
        }
    }

    pub fn validate(&self, graph: &DirectedGraph) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::validation(format!("tau {} outside [0, 1]", self.tau)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::validation(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if self.repetitions == 0 {
            return Err(Error::validation("repetitions must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::validation("seed set is empty"));
        }
        if self.seeds.len() > graph.node_count() {
            return Err(Error::validation(format!(
                "{} seeds exceed the {} graph nodes",
                self.seeds.len(),
                graph.node_count()
            )));
        }
        for &s in &self.seeds {
            graph.check_node(s)?;
        }
        Ok(())
    }
}

/// Compartment sizes after each step; entry 0 is the initial state.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SirTrace {
    pub susceptible: Vec<usize>,
    pub infected: Vec<usize>,
    pub recovered: Vec<usize>,
}

impl SirTrace {
    pub fn steps(&self) -> usize {
        self.infected.len()
    }

    /// Nodes that were ever infected by the end of the run.
    pub fn final_infected_ever(&self) -> usize {
        self.infected_ever(self.steps() - 1)
    }

    pub fn infected_ever(&self, step: usize) -> usize {
        self.infected[step] + self.recovered[step]
    }

    fn push(&mut self, s: usize, i: usize, r: usize) {
        self.susceptible.push(s);
        self.infected.push(i);
        self.recovered.push(r);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirSummary {
    pub repetitions: usize,
    pub seed_count: usize,
    pub mean_final: f64,
    /// Sample standard deviation (0 for a single repetition).
    pub std_final: f64,
    pub finals: Vec<usize>,
    /// Mean infected-ever count per step; shorter runs are padded with
    /// their final value.
    pub mean_curve: Vec<f64>,
}

const SUSCEPTIBLE: u8 = 0;
const INFECTED: u8 = 1;
const RECOVERED: u8 = 2;

const CONTACT: u64 = 0;
const RECOVERY: u64 = 1;

/// Runs one SIR simulation using `run_seed` as the draw key and also
/// returns the final infected-ever membership.
pub fn run_sir_keyed(graph: &DirectedGraph, cfg: &SirConfig, run_seed: u64) -> Result<(SirTrace, Vec<bool>)> {
    cfg.validate(graph)?;
    let n = graph.node_count();
    let mut state = vec![SUSCEPTIBLE; n];
    let mut round = vec![0u64; n];
    let mut active: Vec<NodeId> = Vec::new();
    for &s in &cfg.seeds {
        if state[s.index()] == SUSCEPTIBLE {
            state[s.index()] = INFECTED;
            active.push(s);
        }
    }
    active.sort_unstable();
    let mut s_count = n - active.len();
    let mut r_count = 0;
    let mut trace = SirTrace::default();
    trace.push(s_count, active.len(), r_count);

    let mut fresh = Vec::new();
    let mut still = Vec::new();
    while !active.is_empty() {
        fresh.clear();
        for &u in &active {
            let k = round[u.index()];
            let neighbours = match cfg.direction {
                SirDirection::Influence => graph.in_neighbors(u),
                SirDirection::Undirected => graph.undirected_neighbors(u),
            };
            for &v in neighbours {
                if state[v.index()] != SUSCEPTIBLE {
                    continue;
                }
                let draw = unit_f64(derive(run_seed, &[CONTACT, u.0 as u64, v.0 as u64, k]));
                if draw < cfg.tau {
                    state[v.index()] = INFECTED;
                    fresh.push(v);
                }
            }
        }
        still.clear();
        for &u in &active {
            let k = round[u.index()];
            if unit_f64(derive(run_seed, &[RECOVERY, u.0 as u64, k])) < cfg.gamma {
                state[u.index()] = RECOVERED;
                r_count += 1;
            } else {
                round[u.index()] = k + 1;
                still.push(u);
            }
        }
        s_count -= fresh.len();
        still.extend_from_slice(&fresh);
        still.sort_unstable();
        std::mem::swap(&mut active, &mut still);
        trace.push(s_count, active.len(), r_count);
    }
    let ever = state.iter().map(|&s| s != SUSCEPTIBLE).collect();
    Ok((trace, ever))
}

/// One SIR run keyed by `cfg.rng_seed`.
pub fn run_sir(graph: &DirectedGraph, cfg: &SirConfig) -> Result<SirTrace> {
    run_sir_keyed(graph, cfg, cfg.rng_seed).map(|(t, _)| t)
}

/// Key of repetition `rep` under base seed `rng_seed`.
pub fn repetition_seed(rng_seed: u64, rep: usize) -> u64 {
    derive(rng_seed, &[0x5112, rep as u64])
}

/// Runs `cfg.repetitions` independent simulations and averages them.
pub fn evaluate_seeds(graph: &DirectedGraph, cfg: &SirConfig) -> Result<SirSummary> {
    cfg.validate(graph)?;
    let traces: Vec<SirTrace> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| run_sir_keyed(graph, cfg, repetition_seed(cfg.rng_seed, rep)).map(|(t, _)| t))
        .collect::<Result<_>>()?;
    Ok(summarize(&traces, cfg.seeds.len()))
}

fn summarize(traces: &[SirTrace], seed_count: usize) -> SirSummary {
    let reps = traces.len();
    let finals: Vec<usize> = traces.iter().map(SirTrace::final_infected_ever).collect();
    let total: usize = finals.iter().sum();
    let mean = total as f64 / reps as f64;
    let std = if reps > 1 {
        (finals.iter().map(|&f| (f as f64 - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    let longest = traces.iter().map(SirTrace::steps).max().unwrap_or(0);
    let mean_curve = (0..longest)
        .map(|t| {
            let sum: usize = traces
                .iter()
                .map(|tr| tr.infected_ever(t.min(tr.steps() - 1)))
                .sum();
            sum as f64 / reps as f64
        })
        .collect();
    SirSummary {
        repetitions: reps,
        seed_count,
        mean_final: mean,
        std_final: std,
        finals,
        mean_curve,
    }
}

/// CSV `step,mean_infected_ever`.
pub fn write_summary_csv<W: Write>(summary: &SirSummary, mut out: W) -> Result<()> {
    writeln!(out, "step,mean_infected_ever")?;
    for (t, v) in summary.mean_curve.iter().enumerate() {
        writeln!(out, "{t},{v:?}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SummaryHeader<'a> {
    method: &'a str,
    tau: f64,
    gamma: f64,
    repetitions: usize,
    rng_seed: u64,
    direction: SirDirection,
    seeds: Vec<&'a str>,
    mean_final: f64,
    std_final: f64,
    finals: &'a [usize],
}

/// JSON block echoing the configuration and final-count statistics.
pub fn write_summary_json<W: Write>(
    summary: &SirSummary,
    cfg: &SirConfig,
    graph: &DirectedGraph,
    method: &str,
    out: W,
) -> Result<()> {
    let header = SummaryHeader {
        method,
        tau: cfg.tau,
        gamma: cfg.gamma,
        repetitions: cfg.repetitions,
        rng_seed: cfg.rng_seed,
        direction: cfg.direction,
        seeds: cfg.seeds.iter().map(|&s| graph.external_id(s)).collect(),
        mean_final: summary.mean_final,
        std_final: summary.std_final,
        finals: &summary.finals,
    };
    serde_json::to_writer_pretty(out, &header).map_err(|e| Error::validation(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(len: usize) -> DirectedGraph {
        // follower i+1 follows i, so influence flows 0 -> 1 -> 2 ...
        let edges: Vec<_> = (0..len - 1).map(|i| (i + 1, i)).collect();
        DirectedGraph::from_edge_indices(len, &edges).unwrap()
    }

    #[test]
    fn tau_zero_only_seeds() {
        let g = chain(6);
        let cfg = SirConfig::new(0.0, 0.3, vec![NodeId(0), NodeId(3)]);
        let (trace, ever) = run_sir_keyed(&g, &cfg, 9).unwrap();
        assert_eq!(trace.final_infected_ever(), 2);
        assert_eq!(*trace.infected.last().unwrap(), 0);
        assert_eq!(ever, vec![true, false, false, true, false, false]);
    }

    #[test]
    fn deterministic_wave_along_chain() {
        let g = chain(7);
        let cfg = SirConfig::new(1.0, 1.0, vec![NodeId(0)]);
        let t = run_sir(&g, &cfg).unwrap();
        assert_eq!(t.final_infected_ever(), 7);
        for step in 0..7 {
            assert_eq!(t.infected[step], 1);
            assert_eq!(t.infected_ever(step), step + 1);
        }
        assert_eq!(t.infected[7], 0);
    }

    #[test]
    fn undirected_reaches_upstream() {
        let g = chain(4);
        let mut cfg = SirConfig::new(1.0, 1.0, vec![NodeId(3)]);
        assert_eq!(run_sir(&g, &cfg).unwrap().final_infected_ever(), 1);
        cfg.direction = SirDirection::Undirected;
        assert_eq!(run_sir(&g, &cfg).unwrap().final_infected_ever(), 4);
    }

    #[test]
    fn all_seeds() {
        let g = chain(5);
        let mut cfg = SirConfig::new(0.5, 1.0, g.nodes().collect());
        cfg.repetitions = 7;
        let s = evaluate_seeds(&g, &cfg).unwrap();
        assert_eq!(s.finals, vec![5; 7]);
        assert_eq!(s.std_final, 0.0);
        assert_eq!(s.mean_final, 5.0);
    }

    #[test]
    fn config_errors() {
        let g = chain(3);
        assert!(run_sir(&g, &SirConfig::new(0.5, 1.0, vec![])).is_err());
        assert!(run_sir(&g, &SirConfig::new(1.5, 1.0, vec![NodeId(0)])).is_err());
        assert!(run_sir(&g, &SirConfig::new(0.5, 0.0, vec![NodeId(0)])).is_err());
        assert!(run_sir(&g, &SirConfig::new(0.5, 1.0, vec![NodeId(9)])).is_err());
    }

    #[test]
    fn curve_is_padded() {
        let a = SirTrace {
            susceptible: vec![2, 1, 1],
            infected: vec![1, 1, 0],
            recovered: vec![0, 1, 2],
        };
        let b = SirTrace {
            susceptible: vec![2, 2],
            infected: vec![1, 0],
            recovered: vec![0, 1],
        };
        let s = summarize(&[a, b], 1);
        assert_eq!(s.mean_curve, vec![1.0, 1.5, 1.5]);
        assert_eq!(s.mean_final, 1.5);
    }

    #[test]
    fn exports() {
        let g = chain(3);
        let mut cfg = SirConfig::new(1.0, 1.0, vec![NodeId(0)]);
        cfg.repetitions = 2;
        let s = evaluate_seeds(&g, &cfg).unwrap();
        let mut csv = Vec::new();
        write_summary_csv(&s, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "step,mean_infected_ever\n0,1.0\n1,2.0\n2,3.0\n3,3.0\n");
        let mut js = Vec::new();
        write_summary_json(&s, &cfg, &g, "leaderrank", &mut js).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&js).unwrap();
        assert_eq!(v["mean_final"], 3.0);
        assert_eq!(v["seeds"][0], "0");
    }
}
