//! Random recursive trees `T(N, θ)`.
//!
//! Nodes arrive one at a time; the newcomer links to an existing node `i`
//! with probability `d_i^θ / Σ_j d_j^θ`, where `d_j` are the current link
//! counts. `θ = 0` gives the uniform recursive tree, `θ = 1` the linear
//! preferential-attachment tree, and large `θ` approaches the star.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Tree;
use crate::seed::{derive_seed, rng_from_seed};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrtParams {
    pub n: usize,
    pub theta: f64,
    pub seed: u64,
}

impl RrtParams {
    pub fn new(n: usize, theta: f64, seed: u64) -> Result<Self> {
        let p = RrtParams { n, theta, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "tree needs at least one node"));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::param("n", "exceeds u32 node range"));
        }
        if !self.theta.is_finite() || self.theta < 0.0 {
            return Err(Error::param(
                "theta",
                format!("must be finite and >= 0, got {}", self.theta),
            ));
        }
        Ok(())
    }

    /// Parameters of replication `rep` within an ensemble.
    pub fn replication(&self, rep: usize) -> RrtParams {
        RrtParams {
            seed: derive_seed(self.seed, rep as u64),
            ..*self
        }
    }
}

/// Sum tree over per-node attachment weights.
///
/// Internal nodes are recomputed as `left + right` on every update rather
/// than patched with deltas, so totals never drift even when weights span
/// many orders of magnitude.
#[derive(Debug, Clone)]
pub struct WeightIndex<T> {
    // heap layout: node k has children 2k, 2k+1; leaves start at `base`
    sums: Vec<T>,
    base: usize,
    len: usize,
}

impl<T: Scalar> WeightIndex<T> {
    pub fn with_capacity(capacity: usize) -> Self {
        let base = capacity.max(1).next_power_of_two();
        WeightIndex {
            sums: vec![T::zero(); 2 * base],
            base,
            len: 0,
        }
    }

    pub fn from_weights(weights: &[T]) -> Self {
        let mut idx = Self::with_capacity(weights.len());
        idx.sums[idx.base..idx.base + weights.len()].copy_from_slice(weights);
        for k in (1..idx.base).rev() {
            idx.sums[k] = idx.sums[2 * k] + idx.sums[2 * k + 1];
        }
        idx.len = weights.len();
        idx
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn total(&self) -> T {
        self.sums[1]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> T {
        self.sums[self.base + i]
    }

    /// Appends a node with weight `w` and returns its index.
    pub fn push(&mut self, w: T) -> usize {
        assert!(self.len < self.base, "WeightIndex capacity exceeded");
        let i = self.len;
        self.len += 1;
        self.set(i, w);
        i
    }

    pub fn set(&mut self, i: usize, w: T) {
        debug_assert!(i < self.len);
        let mut k = self.base + i;
        self.sums[k] = w;
        while k > 1 {
            k >>= 1;
            self.sums[k] = self.sums[2 * k] + self.sums[2 * k + 1];
        }
    }

    /// Index whose cumulative weight interval contains `target`, for
    /// `target` in `[0, total)`. Zero-weight subtrees are never entered.
    pub fn find(&self, mut target: T) -> usize {
        let mut k = 1;
        while k < self.base {
            let left = self.sums[2 * k];
            if target < left || self.sums[2 * k + 1] <= T::zero() {
                k *= 2;
            } else {
                target = target - left;
                k = 2 * k + 1;
            }
        }
        k - self.base
    }

    /// Draws an index with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = T::lit(rng.random::<f64>());
        self.find(u * self.total())
    }
}

#[inline]
fn attachment_weight(degree: usize, theta: f64) -> f64 {
    if theta == 0.0 {
        1.0
    } else if theta == 1.0 {
        degree as f64
    } else {
        (degree as f64).powf(theta)
    }
}

/// Grows one tree. Deterministic given `params.seed`.
pub fn generate_rrt(params: &RrtParams) -> Result<Tree> {
    params.validate()?;
    let n = params.n;
    if n == 1 {
        return Ok(Tree::root_only());
    }
    let mut rng = rng_from_seed(params.seed);
    let mut parents: Vec<u32> = Vec::with_capacity(n - 1);
    let mut degree = vec![0usize; n];
    let mut weights = WeightIndex::<f64>::with_capacity(n);

    // Node 1 has only the root to attach to; both end up with one link.
    parents.push(0);
    degree[0] = 1;
    degree[1] = 1;
    weights.push(1.0);
    weights.push(1.0);

    for new in 2..n {
        let target = weights.sample(&mut rng);
        parents.push(target as u32);
        degree[target] += 1;
        degree[new] = 1;
        let w = attachment_weight(degree[target], params.theta);
        if !w.is_finite() {
            return Err(Error::param(
                "theta",
                format!("attachment weight overflow at degree {}", degree[target]),
            ));
        }
        weights.set(target, w);
        weights.push(1.0);
    }
    Ok(Tree::from_parents_unchecked(parents))
}

/// `p_i = d_i^θ / Σ_j d_j^θ` over the current link counts of `tree`: the
/// distribution of the next arrival's parent.
pub fn attachment_distribution<T: Scalar>(tree: &Tree, theta: T) -> Vec<T> {
    if tree.len() == 1 {
        return vec![T::one()];
    }
    let w: Vec<T> = tree
        .degrees()
        .into_iter()
        .map(|d| T::from_count(d).powf(theta))
        .collect();
    let total = w.iter().fold(T::zero(), |a, &b| a + b);
    w.into_iter().map(|x| x / total).collect()
}

/// Independent trees; replication `r` uses `params.replication(r)`.
pub fn generate_rrt_ensemble(params: &RrtParams, replications: usize) -> Result<Vec<Tree>> {
    map_rrt_ensemble(params, replications, |t| t)
}

/// Generates an ensemble and maps each tree through `f` without keeping the
/// trees. Output order follows the replication index.
pub fn map_rrt_ensemble<U, F>(params: &RrtParams, replications: usize, f: F) -> Result<Vec<U>>
where
    U: Send,
    F: Fn(Tree) -> U + Sync,
{
    params.validate()?;
    if replications == 0 {
        return Err(Error::param("replications", "must be >= 1"));
    }
    (0..replications)
        .into_par_iter()
        .map(|r| generate_rrt(&params.replication(r)).map(&f))
        .collect()
}
