//! Susceptible / View / Forward / Removed diffusion of one message.
//!
//! Time is discrete. At step 0 the creator is in F and everyone else in S.
//! On each step every susceptible node with at least one forwarding
//! neighbour gets a single view trial with its own probability `β_i`. A
//! viewer forwards with probability `γ` in the same step and is then
//! exposed to its neighbours on the next step. Viewers and forwarders are
//! removed one step after arrival, so each node is trialled at most once.
//!
//! Heterogeneous view probabilities follow `β_i = c d_i^-α`, with `c` set so
//! the network-wide mean equals the target `β` (see
//! [`compute_view_probabilities`]).

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Network, Tree};
use crate::metrics::TreeMetrics;
use crate::netgen::{generate_network, NetGenParams};
use crate::seed::{derive_path, derive_seed, rng_from_seed, TAG_RUNS};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvfrParams {
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl SvfrParams {
    pub fn new(beta: f64, gamma: f64, alpha: f64, seed: u64) -> Result<Self> {
        let p = SvfrParams {
            beta,
            gamma,
            alpha,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("beta", self.beta)?;
        check_probability("gamma", self.gamma)?;
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::param(
                "alpha",
                format!("must be finite and >= 0, got {}", self.alpha),
            ));
        }
        Ok(())
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in [0, 1], got {p}")))
    }
}

/// Per-node view probabilities `min(1, c d_i^-α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewProbabilities<T> {
    pub probs: Vec<T>,
    pub c: T,
    pub alpha: T,
    /// Nodes where `c d_i^-α` exceeded 1 and was clamped.
    pub clamped_count: usize,
}

impl<T: Scalar> ViewProbabilities<T> {
    /// Same probability for every node.
    pub fn uniform(n: usize, beta: T) -> Self {
        ViewProbabilities {
            probs: vec![beta; n],
            c: beta,
            alpha: T::zero(),
            clamped_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Mean of `c d_i^-α` before clamping.
    pub fn pre_clamp_mean(&self, network: &Network) -> T {
        let sum = (0..network.len()).fold(T::zero(), |acc, i| {
            acc + self.c * T::from_count(network.degree(i)).powf(-self.alpha)
        });
        sum / T::from_count(network.len())
    }

    /// Mean of the clamped probabilities actually used.
    pub fn realized_mean(&self) -> T {
        self.probs.iter().fold(T::zero(), |a, &b| a + b) / T::from_count(self.len())
    }
}

/// Solves `β = c Σ_k k^-α Pr[D = k]` over the network's empirical degree
/// frequencies and assigns `β_i = min(1, c d_i^-α)`.
pub fn compute_view_probabilities<T: Scalar>(
    network: &Network,
    beta: T,
    alpha: T,
) -> Result<ViewProbabilities<T>> {
    if network.is_empty() {
        return Err(Error::param("network", "empty network"));
    }
    if !(beta >= T::zero() && beta <= T::one()) {
        return Err(Error::param("beta", format!("must lie in [0, 1], got {beta}")));
    }
    if !(alpha.is_finite() && alpha >= T::zero()) {
        return Err(Error::param("alpha", format!("must be >= 0, got {alpha}")));
    }
    let degrees = network.degrees();
    let max_deg = degrees.iter().copied().max().unwrap_or(0);
    let mut freq = vec![0usize; max_deg + 1];
    for (i, &d) in degrees.iter().enumerate() {
        if d == 0 && alpha > T::zero() {
            return Err(Error::ZeroDegree(i));
        }
        freq[d] += 1;
    }
    // k^-α per distinct degree; 0^0 = 1 covers isolated nodes at α = 0.
    let scale: Vec<T> = (0..=max_deg)
        .map(|k| {
            if alpha == T::zero() {
                T::one()
            } else {
                T::from_count(k).powf(-alpha)
            }
        })
        .collect();
    let n = T::from_count(network.len());
    let moment = freq
        .iter()
        .zip(&scale)
        .filter(|(&f, _)| f > 0)
        .fold(T::zero(), |acc, (&f, &s)| acc + s * T::from_count(f) / n);
    let c = beta / moment;
    let mut clamped_count = 0;
    let probs = degrees
        .iter()
        .map(|&d| {
            let p = c * scale[d];
            if p > T::one() {
                clamped_count += 1;
                T::one()
            } else {
                p
            }
        })
        .collect();
    Ok(ViewProbabilities {
        probs,
        c,
        alpha,
        clamped_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeState {
    S,
    V,
    F,
    R,
}

impl NodeState {
    /// Whether `self -> to` is an edge of the state diagram.
    pub fn can_transition(self, to: NodeState) -> bool {
        use NodeState::*;
        matches!(
            (self, to),
            (S, V) | (S, R) | (V, F) | (V, R) | (F, R)
        )
    }
}

/// Receives every state change of a simulation.
pub trait TransitionObserver {
    fn transition(&mut self, step: u32, node: usize, from: NodeState, to: NodeState);
}

impl TransitionObserver for () {
    #[inline]
    fn transition(&mut self, _: u32, _: usize, _: NodeState, _: NodeState) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub step: u32,
    pub node: usize,
    pub from: NodeState,
    pub to: NodeState,
}

impl TransitionObserver for Vec<Transition> {
    fn transition(&mut self, step: u32, node: usize, from: NodeState, to: NodeState) {
        self.push(Transition {
            step,
            node,
            from,
            to,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Creator,
    Viewer,
    Forwarder,
}

impl Role {
    /// Creators and forwarders expose the message to their neighbours.
    pub fn shares(self) -> bool {
        matches!(self, Role::Creator | Role::Forwarder)
    }
}

/// View cascade: the creator, every viewer, and the links along which they
/// received the message, in arrival order.
///
/// `Id` names the underlying users: network indices for simulated cascades,
/// external user ids for ingested ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeTree<Id = usize> {
    pub tree: Tree,
    pub roles: Vec<Role>,
    pub node_ids: Vec<Id>,
    pub arrival_step: Vec<u32>,
    /// Largest network degree among sharing nodes; unknown for ingested logs.
    pub d_max_f: Option<usize>,
}

impl<Id> CascadeTree<Id> {
    pub fn size(&self) -> usize {
        self.tree.len()
    }

    /// Sharing nodes, creator included.
    pub fn forwarder_count(&self) -> usize {
        self.roles.iter().filter(|r| r.shares()).count()
    }

    pub fn map_ids<U>(self, f: impl FnMut(Id) -> U) -> CascadeTree<U> {
        CascadeTree {
            tree: self.tree,
            roles: self.roles,
            node_ids: self.node_ids.into_iter().map(f).collect(),
            arrival_step: self.arrival_step,
            d_max_f: self.d_max_f,
        }
    }
}

/// Reusable scratch space for repeated simulations on one network.
///
/// Only entries touched by a run are reset afterwards, so a run costs time
/// proportional to the cascade's activity rather than the network size.
pub struct Simulator<'a, T> {
    network: &'a Network,
    view: &'a ViewProbabilities<T>,
    gamma: f64,
    state: Vec<NodeState>,
    exposures: Vec<u32>,
    chosen_parent: Vec<u32>,
    touched: Vec<u32>,
}

impl<'a, T: Scalar> Simulator<'a, T> {
    pub fn new(network: &'a Network, view: &'a ViewProbabilities<T>, gamma: f64) -> Result<Self> {
        if view.len() != network.len() {
            return Err(Error::param(
                "view_probs",
                format!("{} entries for {} nodes", view.len(), network.len()),
            ));
        }
        check_probability("gamma", gamma)?;
        let n = network.len();
        Ok(Simulator {
            network,
            view,
            gamma,
            state: vec![NodeState::S; n],
            exposures: vec![0; n],
            chosen_parent: vec![0; n],
            touched: Vec::new(),
        })
    }

    pub fn run<R: Rng + ?Sized>(&mut self, seed_node: usize, rng: &mut R) -> Result<CascadeTree> {
        self.run_observed(seed_node, rng, &mut ())
    }

    pub fn run_observed<R, O>(
        &mut self,
        seed_node: usize,
        rng: &mut R,
        observer: &mut O,
    ) -> Result<CascadeTree>
    where
        R: Rng + ?Sized,
        O: TransitionObserver,
    {
        if seed_node >= self.network.len() {
            return Err(Error::param(
                "seed_node",
                format!("{seed_node} out of range for {} nodes", self.network.len()),
            ));
        }
        let out = self.spread(seed_node, rng, observer);
        for &v in &self.touched {
            self.state[v as usize] = NodeState::S;
            self.exposures[v as usize] = 0;
        }
        self.touched.clear();
        Ok(out)
    }

    fn spread<R, O>(&mut self, seed_node: usize, rng: &mut R, obs: &mut O) -> CascadeTree
    where
        R: Rng + ?Sized,
        O: TransitionObserver,
    {
        let net = self.network;
        let mut parents: Vec<u32> = Vec::new();
        let mut roles = vec![Role::Creator];
        let mut node_ids = vec![seed_node];
        let mut arrival_step = vec![0u32];
        let mut d_max_f = net.degree(seed_node);

        self.state[seed_node] = NodeState::F;
        self.touched.push(seed_node as u32);

        // (network node, tree index) of the previous step's arrivals
        let mut arrivals: Vec<(u32, u32)> = vec![(seed_node as u32, 0)];
        let mut candidates: Vec<u32> = Vec::new();
        let mut step = 0u32;

        while !arrivals.is_empty() {
            step += 1;
            candidates.clear();
            for &(u, tree_idx) in &arrivals {
                if self.state[u as usize] != NodeState::F {
                    continue;
                }
                for &v in net.neighbors(u as usize) {
                    let vi = v as usize;
                    if self.state[vi] != NodeState::S {
                        continue;
                    }
                    let seen = self.exposures[vi] + 1;
                    self.exposures[vi] = seen;
                    if seen == 1 {
                        candidates.push(v);
                        self.touched.push(v);
                        self.chosen_parent[vi] = tree_idx;
                    } else if rng.random_range(0..seen) == 0 {
                        // reservoir choice: uniform over forwarding neighbours
                        self.chosen_parent[vi] = tree_idx;
                    }
                }
            }

            for &(u, _) in &arrivals {
                let from = self.state[u as usize];
                self.state[u as usize] = NodeState::R;
                obs.transition(step, u as usize, from, NodeState::R);
            }
            arrivals.clear();

            for &v in &candidates {
                let vi = v as usize;
                let u: f64 = rng.random();
                if T::lit(u) < self.view.probs[vi] {
                    self.state[vi] = NodeState::V;
                    obs.transition(step, vi, NodeState::S, NodeState::V);
                    let idx = node_ids.len() as u32;
                    parents.push(self.chosen_parent[vi]);
                    node_ids.push(vi);
                    arrival_step.push(step);
                    if rng.random::<f64>() < self.gamma {
                        self.state[vi] = NodeState::F;
                        obs.transition(step, vi, NodeState::V, NodeState::F);
                        roles.push(Role::Forwarder);
                        d_max_f = d_max_f.max(net.degree(vi));
                    } else {
                        roles.push(Role::Viewer);
                    }
                    arrivals.push((v, idx));
                } else {
                    self.state[vi] = NodeState::R;
                    obs.transition(step, vi, NodeState::S, NodeState::R);
                }
            }
        }

        CascadeTree {
            tree: Tree::from_parents_unchecked(parents),
            roles,
            node_ids,
            arrival_step,
            d_max_f: Some(d_max_f),
        }
    }
}

/// One simulation from `seed_node`. Allocates a fresh [`Simulator`]; use
/// that directly for repeated runs on one network.
pub fn simulate<T: Scalar, R: Rng + ?Sized>(
    network: &Network,
    view_probs: &ViewProbabilities<T>,
    gamma: f64,
    seed_node: usize,
    rng: &mut R,
) -> Result<CascadeTree> {
    Simulator::new(network, view_probs, gamma)?.run(seed_node, rng)
}

/// Per-cascade record; also the CSV row layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeSummary {
    pub network_idx: usize,
    pub run_idx: usize,
    pub size: usize,
    pub n_forwarders: usize,
    pub d_max_f: usize,
    /// Absent for single-node cascades.
    pub avg_path_length: Option<f64>,
    pub degree_std: Option<f64>,
}

impl CascadeSummary {
    pub fn of(network_idx: usize, run_idx: usize, c: &CascadeTree) -> Self {
        let m = TreeMetrics::<f64>::of(&c.tree).ok();
        CascadeSummary {
            network_idx,
            run_idx,
            size: c.size(),
            n_forwarders: c.forwarder_count(),
            d_max_f: c.d_max_f.unwrap_or(0),
            avg_path_length: m.map(|m| m.avg_path_length),
            degree_std: m.map(|m| m.degree_std),
        }
    }
}

pub fn write_summaries_csv<W: Write>(rows: &[CascadeSummary], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Facts about one generated network of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub network_idx: usize,
    pub seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub erased_stubs: usize,
    pub view_c: f64,
    pub clamped_count: usize,
    pub realized_mean_view: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch<U> {
    pub networks: Vec<NetworkReport>,
    /// Ordered by (network, run).
    pub cascades: Vec<U>,
}

/// Runs `runs_per_network` cascades from uniformly random creators on each
/// of `networks` independently generated networks, summarizing each.
///
/// Seeding: network `k` is built from `derive_seed(svfr.seed, k)` (the seed
/// in `net` is ignored) and run `r` on it draws from
/// `derive_path(network_seed, [TAG_RUNS, r])`.
pub fn batch_simulate(
    net: &NetGenParams,
    svfr: &SvfrParams,
    networks: usize,
    runs_per_network: usize,
) -> Result<Batch<CascadeSummary>> {
    batch_simulate_with(net, svfr, networks, runs_per_network, CascadeSummary::of)
}

/// [`batch_simulate`] with a caller-supplied reduction of each cascade.
pub fn batch_simulate_with<U, F>(
    net: &NetGenParams,
    svfr: &SvfrParams,
    networks: usize,
    runs_per_network: usize,
    f: F,
) -> Result<Batch<U>>
where
    U: Send,
    F: Fn(usize, usize, &CascadeTree) -> U + Sync,
{
    svfr.validate()?;
    net.validate()?;
    if networks == 0 || runs_per_network == 0 {
        return Err(Error::param("networks", "counts must be >= 1"));
    }
    let per_net: Vec<(NetworkReport, Vec<U>)> = (0..networks)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let seed = derive_seed(svfr.seed, k as u64);
            let wiring = generate_network(&net.with_seed(seed))?;
            let network = &wiring.network;
            let view = compute_view_probabilities(network, svfr.beta, svfr.alpha)?;
            let report = NetworkReport {
                network_idx: k,
                seed,
                nodes: network.len(),
                edges: network.edge_count(),
                max_degree: network.max_degree(),
                erased_stubs: wiring.erased_stubs(),
                view_c: view.c,
                clamped_count: view.clamped_count,
                realized_mean_view: view.realized_mean(),
            };
            let out = (0..runs_per_network)
                .into_par_iter()
                .map_init(
                    || Simulator::new(network, &view, svfr.gamma).expect("validated"),
                    |sim, r| {
                        let mut rng = rng_from_seed(derive_path(seed, &[TAG_RUNS, r as u64]));
                        let creator = rng.random_range(0..network.len());
                        sim.run(creator, &mut rng).map(|c| f(k, r, &c))
                    },
                )
                .collect::<Result<Vec<U>>>()?;
            Ok((report, out))
        })
        .collect::<Result<_>>()?;
    let mut batch = Batch {
        networks: Vec::with_capacity(networks),
        cascades: Vec::with_capacity(networks * runs_per_network),
    };
    for (rep, cs) in per_net {
        batch.networks.push(rep);
        batch.cascades.extend(cs);
    }
    Ok(batch)
}
