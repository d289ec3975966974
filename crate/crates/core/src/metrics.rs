//! Structural properties of trees and their size-binned aggregation.
//!
//! The average path length is `E[H] = 2W / (N(N-1))` where `W` is the Wiener
//! index (sum of hop distances over unordered node pairs). For a tree,
//! `W = Σ_e s_e (N - s_e)` with `s_e` the node count below edge `e`, which a
//! single reverse pass over the parent array yields in linear time.
//!
//! Both [`average_path_length`] and [`degree_variance`] are computed from
//! exact integer sums and only divided at the end, so they work for any
//! numeric type implementing `Num + FromPrimitive`, including rationals.

use std::io::{Read, Write};

use num_traits::{FromPrimitive, Num};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Tree;
use crate::rrt::{map_rrt_ensemble, RrtParams};
use crate::Scalar;

/// Sum of hop distances over all unordered node pairs.
pub fn wiener_index(tree: &Tree) -> u128 {
    let n = tree.len();
    let parents = tree.raw_parents();
    let mut below = vec![1u64; n];
    let mut w: u128 = 0;
    for child in (1..n).rev() {
        let s = below[child];
        w += s as u128 * (n as u64 - s) as u128;
        below[parents[child - 1] as usize] += s;
    }
    w
}

fn from_u128<T: FromPrimitive>(x: u128) -> T {
    T::from_u128(x).expect("value representable in target type")
}

/// Mean shortest-path length over ordered pairs of distinct nodes.
pub fn average_path_length<T>(tree: &Tree) -> Result<T>
where
    T: Num + FromPrimitive,
{
    let n = tree.len() as u128;
    if n < 2 {
        return Err(Error::NoNodePairs);
    }
    Ok(from_u128::<T>(2 * wiener_index(tree)) / from_u128::<T>(n * (n - 1)))
}

/// Population variance of the link counts (divides by `N`).
pub fn degree_variance<T>(tree: &Tree) -> T
where
    T: Num + FromPrimitive,
{
    let n = tree.len() as i128;
    let sum_sq: i128 = tree.degrees().iter().map(|&d| (d * d) as i128).sum();
    // Σ(d - m)²/N with m = 2(N-1)/N, scaled by N² to stay integral.
    let num = n * sum_sq - 4 * (n - 1) * (n - 1);
    T::from_i128(num).expect("representable") / T::from_i128(n * n).expect("representable")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeMetrics<T> {
    pub size: usize,
    pub avg_path_length: T,
    pub degree_variance: T,
    pub degree_std: T,
}

impl<T: Scalar> TreeMetrics<T> {
    /// Fails on single-node trees, which have no node pairs.
    pub fn of(tree: &Tree) -> Result<Self> {
        let avg_path_length = average_path_length(tree)?;
        let degree_variance: T = degree_variance(tree);
        Ok(TreeMetrics {
            size: tree.len(),
            avg_path_length,
            degree_variance,
            degree_std: degree_variance.sqrt(),
        })
    }
}

/// Mean and population standard deviation.
pub fn mean_std<T: Scalar>(xs: impl IntoIterator<Item = T> + Clone) -> (T, T) {
    let mut n = 0usize;
    let mut sum = T::zero();
    for x in xs.clone() {
        sum = sum + x;
        n += 1;
    }
    if n == 0 {
        return (T::nan(), T::nan());
    }
    let mean = sum / T::from_count(n);
    let ss = xs
        .into_iter()
        .fold(T::zero(), |acc, x| acc + (x - mean) * (x - mean));
    (mean, (ss / T::from_count(n)).sqrt())
}

/// One row of [`SizeBinnedStats`]; also the CSV record layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeBin<T> {
    pub bin_lo: usize,
    pub bin_hi: usize,
    /// Geometric midpoint `sqrt(lo * hi)`.
    pub bin_mid: T,
    pub count: usize,
    pub mean_apl: T,
    pub std_apl: T,
    pub mean_dstd: T,
    pub std_dstd: T,
}

impl<T: Scalar> SizeBin<T> {
    /// Representative tree size used when simulating this bin.
    pub fn representative_size(&self) -> usize {
        self.bin_mid.round().to_usize().unwrap_or(self.bin_lo)
    }
}

/// Trees grouped into `[m, 2m), [2m, 4m), ...` by size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBinnedStats<T> {
    pub min_size: usize,
    pub bins: Vec<SizeBin<T>>,
}

/// Index `k` of the bin `[m 2^k, m 2^(k+1))` holding `size`, if any.
pub fn size_bin_index(size: usize, min_size: usize) -> Option<u32> {
    if size < min_size || min_size == 0 {
        None
    } else {
        Some((size / min_size).ilog2())
    }
}

/// Groups metrics by size, dropping trees below `min_size` and empty bins.
pub fn bin_tree_metrics<T: Scalar>(
    metrics: &[TreeMetrics<T>],
    min_size: usize,
) -> Result<SizeBinnedStats<T>> {
    if min_size == 0 {
        return Err(Error::param("min_size", "must be >= 1"));
    }
    let mut groups: Vec<Vec<&TreeMetrics<T>>> = Vec::new();
    for m in metrics {
        if let Some(k) = size_bin_index(m.size, min_size) {
            let k = k as usize;
            if groups.len() <= k {
                groups.resize_with(k + 1, Vec::new);
            }
            groups[k].push(m);
        }
    }
    let bins: Vec<SizeBin<T>> = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(k, g)| {
            let lo = min_size << k;
            let hi = lo * 2;
            let (mean_apl, std_apl) = mean_std(g.iter().map(|m| m.avg_path_length));
            let (mean_dstd, std_dstd) = mean_std(g.iter().map(|m| m.degree_std));
            SizeBin {
                bin_lo: lo,
                bin_hi: hi,
                bin_mid: (T::from_count(lo) * T::from_count(hi)).sqrt(),
                count: g.len(),
                mean_apl,
                std_apl,
                mean_dstd,
                std_dstd,
            }
        })
        .collect();
    if bins.is_empty() {
        return Err(Error::EmptyBins(min_size));
    }
    Ok(SizeBinnedStats { min_size, bins })
}

impl<T: Scalar + Serialize + DeserializeOwned> SizeBinnedStats<T> {
    /// Columns: bin_lo, bin_hi, bin_mid, count, mean_apl, std_apl,
    /// mean_dstd, std_dstd.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for b in &self.bins {
            wr.serialize(b)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let bins = rd
            .deserialize::<SizeBin<T>>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let min_size = bins
            .iter()
            .map(|b| b.bin_lo)
            .min()
            .ok_or(Error::InsufficientData("no bins in CSV".into()))?;
        Ok(SizeBinnedStats { min_size, bins })
    }
}

/// Ensemble mean and standard deviation of the two tree properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n: usize,
    pub theta: f64,
    pub reps: usize,
    pub mean_apl: f64,
    pub std_apl: f64,
    pub mean_dstd: f64,
    pub std_dstd: f64,
}

/// Generates `reps` trees `T(n, θ)` and summarizes their metrics.
pub fn rrt_ensemble_stats(params: &RrtParams, reps: usize) -> Result<EnsembleStats> {
    if params.n < 2 {
        return Err(Error::NoNodePairs);
    }
    let ms: Vec<TreeMetrics<f64>> =
        map_rrt_ensemble(params, reps, |t| TreeMetrics::of(&t).expect("n >= 2"))?;
    let (mean_apl, std_apl) = mean_std(ms.iter().map(|m| m.avg_path_length));
    let (mean_dstd, std_dstd) = mean_std(ms.iter().map(|m| m.degree_std));
    Ok(EnsembleStats {
        n: params.n,
        theta: params.theta,
        reps,
        mean_apl,
        std_apl,
        mean_dstd,
        std_dstd,
    })
}
