//! Power-law degree sequences and configuration-model wiring.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DegreeSequence, Network};
use crate::seed::{derive_seed, rng_from_seed, TAG_DEGREES, TAG_WIRING};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetGenParams {
    pub n: usize,
    pub phi: f64,
    pub d_min: usize,
    /// Replaces the structural cutoff `floor(N^(1/(φ-1)))` when set.
    pub d_max_override: Option<usize>,
    pub seed: u64,
}

impl NetGenParams {
    /// Defaults from the reference setup: `φ = 2.5`, `d_min = 10`.
    pub fn new(n: usize, seed: u64) -> Self {
        NetGenParams {
            n,
            phi: 2.5,
            d_min: 10,
            d_max_override: None,
            seed,
        }
    }

    /// Structural cutoff unless overridden.
    pub fn d_max(&self) -> usize {
        self.d_max_override
            .unwrap_or_else(|| structural_cutoff(self.n, self.phi))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > u32::MAX as usize {
            return Err(Error::param("n", format!("out of range: {}", self.n)));
        }
        if !(self.phi.is_finite() && self.phi > 1.0) {
            return Err(Error::param("phi", format!("must exceed 1, got {}", self.phi)));
        }
        if self.d_min == 0 {
            return Err(Error::param("d_min", "must be >= 1"));
        }
        let d_max = self.d_max();
        if self.d_min > d_max {
            return Err(Error::param(
                "d_min",
                format!("d_min {} exceeds d_max {}", self.d_min, d_max),
            ));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        NetGenParams { seed, ..*self }
    }
}

/// `floor(n^(1/(φ-1)))`, nudged so exact powers are not lost to rounding.
pub fn structural_cutoff(n: usize, phi: f64) -> usize {
    let x = (n as f64).powf(1.0 / (phi - 1.0));
    (x * (1.0 + 1e-12)).floor() as usize
}

/// Discrete law `Pr[D = k] ∝ k^-φ` on `[d_min, d_max]`, sampled by inverse
/// transform on the exact cumulative distribution.
#[derive(Debug, Clone)]
pub struct PowerLawDegrees {
    d_min: usize,
    cdf: Vec<f64>,
}

impl PowerLawDegrees {
    pub fn new(phi: f64, d_min: usize, d_max: usize) -> Result<Self> {
        if d_min == 0 || d_min > d_max {
            return Err(Error::param(
                "d_min",
                format!("empty support [{d_min}, {d_max}]"),
            ));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (d_min..=d_max)
            .map(|k| {
                acc += (k as f64).powf(-phi);
                acc
            })
            .collect();
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(PowerLawDegrees { d_min, cdf })
    }

    pub fn d_max(&self) -> usize {
        self.d_min + self.cdf.len() - 1
    }

    pub fn pmf(&self, k: usize) -> f64 {
        if k < self.d_min || k > self.d_max() {
            return 0.0;
        }
        let i = k - self.d_min;
        self.cdf[i] - if i == 0 { 0.0 } else { self.cdf[i - 1] }
    }

    pub fn mean(&self) -> f64 {
        (self.d_min..=self.d_max()).map(|k| k as f64 * self.pmf(k)).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.d_min + self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

/// `n` independent degrees from the truncated power law, with the sum made
/// even by moving one uniformly chosen node's degree by one.
pub fn sample_powerlaw_degrees(params: &NetGenParams) -> Result<DegreeSequence> {
    params.validate()?;
    let (d_min, d_max) = (params.d_min, params.d_max());
    let law = PowerLawDegrees::new(params.phi, d_min, d_max)?;
    let mut rng = rng_from_seed(derive_seed(params.seed, TAG_DEGREES));
    let mut degrees: Vec<usize> = (0..params.n).map(|_| law.sample(&mut rng)).collect();
    if degrees.iter().sum::<usize>() % 2 == 1 {
        let i = rng.random_range(0..params.n);
        if degrees[i] < d_max {
            degrees[i] += 1;
        } else if degrees[i] > d_min {
            degrees[i] -= 1;
        } else {
            return Err(Error::param(
                "d_min",
                "degenerate support cannot give an even degree sum",
            ));
        }
    }
    DegreeSequence::new(degrees)
}

/// Result of stub matching after simplification.
#[derive(Debug, Clone)]
pub struct Wiring {
    pub network: Network,
    pub self_loops: usize,
    /// Surplus copies of repeated edges.
    pub multi_edges: usize,
}

impl Wiring {
    /// Stubs lost to erasing self-loops and surplus parallel edges.
    pub fn erased_stubs(&self) -> usize {
        2 * (self.self_loops + self.multi_edges)
    }
}

/// Uniform random stub matching, then erasure of self-loops and multi-edges.
pub fn configuration_model(degrees: &DegreeSequence, seed: u64) -> Result<Wiring> {
    let total = degrees.sum();
    if total % 2 == 1 {
        return Err(Error::OddDegreeSum(total));
    }
    let n = degrees.len();
    if n > u32::MAX as usize {
        return Err(Error::param("n", "exceeds u32 node range"));
    }
    let mut stubs: Vec<u32> = Vec::with_capacity(total as usize);
    for (i, &d) in degrees.as_slice().iter().enumerate() {
        stubs.extend(std::iter::repeat_n(i as u32, d));
    }
    let mut rng = rng_from_seed(seed);
    stubs.shuffle(&mut rng);

    let mut self_loops = 0;
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(stubs.len() / 2);
    for pair in stubs.chunks_exact(2) {
        let (u, v) = (pair[0], pair[1]);
        if u == v {
            self_loops += 1;
        } else {
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    let multi_edges = before - edges.len();
    Ok(Wiring {
        network: Network::from_sorted_unique(n, &edges),
        self_loops,
        multi_edges,
    })
}

/// Degree sampling and wiring from one parameter set.
pub fn generate_network(params: &NetGenParams) -> Result<Wiring> {
    let degrees = sample_powerlaw_degrees(params)?;
    configuration_model(&degrees, derive_seed(params.seed, TAG_WIRING))
}
