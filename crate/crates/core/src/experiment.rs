//! Seeded parameter sweeps and the figure tables built from them.
//!
//! A sweep is described by a [`SweepConfig`] (JSON). Every `(N, β, α)` point
//! gets its own seed, `derive_path(master, [TAG_POINTS, i_N, i_β, i_α])`,
//! which then keys the batch (see [`crate::svfr::batch_simulate`]). Points
//! run one after another; the cascades inside a point run on the rayon pool.
//!
//! [`run_sweep`] writes into an output directory:
//!
//! | file | content |
//! |------|---------|
//! | `config.json` | the resolved configuration |
//! | `results.jsonl` | one [`RunRecord`] per point, appended as points finish |
//! | `summary.csv` | the records, flattened |
//! | `fig2.csv` | RRT ensemble curves against tree size |
//! | `fig5_alpha<α>.csv` | log-binned cascade-size density per point |
//! | `fig7.csv` | `(d_max_f, size)` pairs of cascades with size `>= x_min` |
//! | `fig8.csv` | λ per point |
//! | `fig9.csv` | binned SVFR tree properties beside RRT ensembles |

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{estimate_gamma, fit_powerlaw_tail, LogHistogram, PowerLawFit};
use crate::metrics::{
    bin_tree_metrics, rrt_ensemble_stats, size_bin_index, EnsembleStats, SizeBin, TreeMetrics,
};
use crate::netgen::NetGenParams;
use crate::rrt::RrtParams;
use crate::seed::{derive_path, RNG_ALGORITHM, TAG_POINTS, TAG_RRT_CURVES, TAG_STRUCTURE};
use crate::svfr::{batch_simulate, Batch, CascadeSummary, SvfrParams};

fn default_n() -> Vec<usize> {
    vec![10_000]
}
fn default_beta() -> Vec<f64> {
    vec![0.3]
}
fn default_alpha() -> Vec<f64> {
    vec![0.8]
}
fn default_gamma() -> f64 {
    0.091
}
fn default_phi() -> f64 {
    2.5
}
fn default_d_min() -> usize {
    10
}
fn default_networks() -> usize {
    20
}
fn default_runs() -> usize {
    50
}
fn default_seed() -> u64 {
    1
}
fn default_x_min() -> usize {
    100
}
fn default_bpd() -> usize {
    10
}
fn default_structure_thetas() -> Vec<f64> {
    vec![1.2, 1.6]
}
fn default_structure_max() -> usize {
    1600
}
fn default_rrt_reps() -> usize {
    100
}
fn default_curve_thetas() -> Vec<f64> {
    vec![0.0, 1.0, 1.2, 1.6, 2.0]
}
fn default_curve_sizes() -> Vec<usize> {
    vec![10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000]
}

/// Sweep description. Every field has a default, so `{}` is a valid config:
/// one point at `N = 10^4, β = 0.3, α = 0.8` with 20 networks × 50 runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_n")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_beta")]
    pub beta_values: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha_values: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
    #[serde(default = "default_d_min")]
    pub d_min: usize,
    #[serde(default = "default_networks")]
    pub networks: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Replaces `networks`/`runs` by 100 × 100.
    #[serde(default)]
    pub full_protocol: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Lower size cutoff for the tail fit, the size/degree table and the
    /// structural bins.
    #[serde(default = "default_x_min")]
    pub x_min: usize,
    #[serde(default = "default_bpd")]
    pub bins_per_decade: usize,
    /// RRT exponents drawn beside the SVFR structural bins.
    #[serde(default = "default_structure_thetas")]
    pub structure_thetas: Vec<f64>,
    /// Structural bins cover `[x_min, structure_max)`.
    #[serde(default = "default_structure_max")]
    pub structure_max: usize,
    #[serde(default = "default_rrt_reps")]
    pub rrt_reps: usize,
    #[serde(default = "default_curve_thetas")]
    pub curve_thetas: Vec<f64>,
    #[serde(default = "default_curve_sizes")]
    pub curve_sizes: Vec<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl SweepConfig {
    /// The reference protocol: `N ∈ {10^4, 3·10^4, 10^5}`, 100 networks ×
    /// 100 runs per point.
    pub fn full() -> Self {
        SweepConfig {
            n_values: vec![10_000, 30_000, 100_000],
            full_protocol: true,
            ..Self::default()
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: SweepConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// `(networks, runs)` after applying `full_protocol`.
    pub fn counts(&self) -> (usize, usize) {
        if self.full_protocol {
            (100, 100)
        } else {
            (self.networks, self.runs)
        }
    }

    /// Copy with `full_protocol` folded into the counts.
    pub fn resolved(&self) -> Self {
        let (networks, runs) = self.counts();
        SweepConfig {
            networks,
            runs,
            full_protocol: false,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("n_values", self.n_values.is_empty()),
            ("beta_values", self.beta_values.is_empty()),
            ("alpha_values", self.alpha_values.is_empty()),
        ] {
            if empty {
                return Err(Error::param(name, "must not be empty"));
            }
        }
        let (networks, runs) = self.counts();
        if networks == 0 || runs == 0 {
            return Err(Error::param("networks", "counts must be >= 1"));
        }
        if self.x_min == 0 || self.bins_per_decade == 0 {
            return Err(Error::param("x_min", "x_min and bins_per_decade must be >= 1"));
        }
        if self.rrt_reps == 0 {
            return Err(Error::param("rrt_reps", "must be >= 1"));
        }
        for p in self.points() {
            self.net_params(&p).validate()?;
            self.svfr_params(&p).validate()?;
        }
        for &theta in self.structure_thetas.iter().chain(&self.curve_thetas) {
            RrtParams::new(2, theta, 0)?;
        }
        if let Some(&n) = self.curve_sizes.iter().find(|&&n| n < 2) {
            return Err(Error::param("curve_sizes", format!("size {n} has no node pairs")));
        }
        Ok(())
    }

    /// Grid points in canonical order: `N` outermost, then `β`, then `α`.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for (i_n, &n) in self.n_values.iter().enumerate() {
            for (i_b, &beta) in self.beta_values.iter().enumerate() {
                for (i_a, &alpha) in self.alpha_values.iter().enumerate() {
                    out.push(SweepPoint {
                        index: out.len(),
                        ids: [i_n, i_b, i_a],
                        n,
                        beta,
                        alpha,
                        seed: derive_path(
                            self.seed,
                            &[TAG_POINTS, i_n as u64, i_b as u64, i_a as u64],
                        ),
                    });
                }
            }
        }
        out
    }

    pub fn net_params(&self, p: &SweepPoint) -> NetGenParams {
        NetGenParams {
            n: p.n,
            phi: self.phi,
            d_min: self.d_min,
            d_max_override: None,
            seed: p.seed,
        }
    }

    pub fn svfr_params(&self, p: &SweepPoint) -> SvfrParams {
        SvfrParams {
            beta: p.beta,
            gamma: self.gamma,
            alpha: p.alpha,
            seed: p.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    /// Positions in `n_values`, `beta_values`, `alpha_values`.
    pub ids: [usize; 3],
    pub n: usize,
    pub beta: f64,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTrail {
    pub master: u64,
    pub point: u64,
    pub rng: String,
}

/// Rank correlation and continuity summary of cascade size against
/// `d_max_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeDmaxfSummary {
    pub pairs: usize,
    /// Spearman correlation; absent with fewer than two pairs or no spread.
    pub spearman: Option<f64>,
    /// Largest ratio between the median sizes of consecutive `d_max_f`
    /// deciles; absent with fewer than ten pairs.
    pub max_decile_jump: Option<f64>,
}

/// Outcome for one sweep point. Reproducible from the config and
/// `point_index`; only `wall_time_s` varies between replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub point_index: usize,
    pub point_ids: [usize; 3],
    pub n: usize,
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub phi: f64,
    pub d_min: usize,
    pub d_max: usize,
    pub networks: usize,
    pub runs: usize,
    pub x_min: usize,
    pub bins_per_decade: usize,
    pub seeds: SeedTrail,
    pub cascades: usize,
    pub max_size: usize,
    pub tail_cascades: usize,
    /// Absent when `insufficient_data`.
    pub fit: Option<PowerLawFit<f64>>,
    pub insufficient_data: bool,
    /// Mean forward fraction over cascades of size `>= x_min`.
    pub gamma_estimate: Option<f64>,
    pub max_clamped: usize,
    pub mean_realized_view: f64,
    pub size_dmaxf: SizeDmaxfSummary,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn lambda(&self) -> Option<f64> {
        self.fit.map(|f| f.lambda)
    }

    /// The record with timing zeroed, for replay comparisons.
    pub fn without_timing(&self) -> Self {
        RunRecord {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

/// A record together with the cascades behind it.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: SweepPoint,
    pub record: RunRecord,
    pub batch: Batch<CascadeSummary>,
}

/// Simulates one point and fits its size tail.
pub fn run_point(config: &SweepConfig, point: &SweepPoint) -> Result<PointResult> {
    let started = Instant::now();
    let (networks, runs) = config.counts();
    let net = config.net_params(point);
    let batch = batch_simulate(&net, &config.svfr_params(point), networks, runs)?;
    let sizes: Vec<usize> = batch.cascades.iter().map(|c| c.size).collect();
    let fit = match fit_powerlaw_tail::<f64>(&sizes, config.x_min, config.bins_per_decade) {
        Ok(f) => Some(f),
        Err(Error::InsufficientData(_)) => None,
        Err(e) => return Err(e),
    };
    let gamma_estimate = estimate_gamma::<f64>(&batch.cascades, config.x_min)
        .ok()
        .map(|g| g.mean);
    let table = emit_size_vs_dmaxf(&batch.cascades, config.x_min);
    let record = RunRecord {
        point_index: point.index,
        point_ids: point.ids,
        n: point.n,
        beta: point.beta,
        alpha: point.alpha,
        gamma: config.gamma,
        phi: config.phi,
        d_min: config.d_min,
        d_max: net.d_max(),
        networks,
        runs,
        x_min: config.x_min,
        bins_per_decade: config.bins_per_decade,
        seeds: SeedTrail {
            master: config.seed,
            point: point.seed,
            rng: RNG_ALGORITHM.to_string(),
        },
        cascades: sizes.len(),
        max_size: sizes.iter().copied().max().unwrap_or(0),
        tail_cascades: sizes.iter().filter(|&&s| s >= config.x_min).count(),
        insufficient_data: fit.is_none(),
        fit,
        gamma_estimate,
        max_clamped: batch.networks.iter().map(|r| r.clamped_count).max().unwrap_or(0),
        mean_realized_view: batch.networks.iter().map(|r| r.realized_mean_view).sum::<f64>()
            / batch.networks.len() as f64,
        size_dmaxf: table.summary,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(PointResult {
        point: *point,
        record,
        batch,
    })
}

/// One record per grid point, in canonical order. Points whose cascades
/// never populate two tail bins are flagged `insufficient_data`.
pub fn run_lambda_sweep(config: &SweepConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    config
        .points()
        .iter()
        .map(|p| run_point(config, p).map(|r| r.record))
        .collect()
}

/// Table behind the size/degree scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeDmaxfTable {
    /// `(d_max_f, size)` in batch order.
    pub pairs: Vec<(usize, usize)>,
    pub summary: SizeDmaxfSummary,
}

/// `(d_max_f, size)` of the cascades with `size >= min_size`, with their
/// Spearman correlation and the largest jump between decile medians.
pub fn emit_size_vs_dmaxf(cascades: &[CascadeSummary], min_size: usize) -> SizeDmaxfTable {
    let pairs: Vec<(usize, usize)> = cascades
        .iter()
        .filter(|c| c.size >= min_size)
        .map(|c| (c.d_max_f, c.size))
        .collect();
    let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
    SizeDmaxfTable {
        summary: SizeDmaxfSummary {
            pairs: pairs.len(),
            spearman: spearman(&xs, &ys),
            max_decile_jump: max_decile_jump(&pairs),
        },
        pairs,
    }
}

/// Ranks with ties sharing their average rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

fn median(v: &mut [usize]) -> f64 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] + v[m]) as f64 / 2.0
    }
}

/// Pairs sorted by `d_max_f` and cut into ten equal-count groups; returns
/// the largest ratio (big over small) between consecutive group medians of
/// size.
fn max_decile_jump(pairs: &[(usize, usize)]) -> Option<f64> {
    if pairs.len() < 10 {
        return None;
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by_key(|&(d, s)| (d, s));
    let n = sorted.len();
    let medians: Vec<f64> = (0..10)
        .map(|g| {
            let mut sizes: Vec<usize> = sorted[g * n / 10..(g + 1) * n / 10]
                .iter()
                .map(|p| p.1)
                .collect();
            median(&mut sizes)
        })
        .collect();
    medians
        .windows(2)
        .map(|w| w[0].max(w[1]) / w[0].min(w[1]))
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
}

/// One row of the structure table: an SVFR size bin, or an RRT ensemble at
/// that bin's representative size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureRow {
    pub source: StructureSource,
    pub theta: Option<f64>,
    pub bin_lo: usize,
    pub bin_hi: usize,
    pub size: usize,
    pub count: usize,
    pub mean_apl: f64,
    pub std_apl: f64,
    pub mean_dstd: f64,
    pub std_dstd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureSource {
    Svfr,
    Rrt,
}

/// Where one SVFR bin mean falls relative to the band of two RRT curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandCheck {
    pub bin_lo: usize,
    pub property: &'static str,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BandCheck {
    pub fn inside(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }
}

type RowStat = fn(&StructureRow) -> (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct StructureComparison {
    /// Populated SVFR bins inside the range.
    pub svfr: Vec<StructureRow>,
    /// Per θ, one ensemble per bin of the range.
    pub rrt: Vec<(f64, Vec<StructureRow>)>,
}

impl StructureComparison {
    /// SVFR rows first, then RRT rows by θ.
    pub fn rows(&self) -> Vec<StructureRow> {
        let mut out = self.svfr.clone();
        for (_, rows) in &self.rrt {
            out.extend(rows.iter().copied());
        }
        out
    }

    /// For every SVFR bin and property, the band
    /// `[min(m_a, m_b) - s, max(m_a, m_b) + s]` spanned by the RRT curves at
    /// `theta_a` and `theta_b`, each widened by its own ensemble std.
    pub fn band_checks(&self, theta_a: f64, theta_b: f64) -> Result<Vec<BandCheck>> {
        let curve = |t: f64| {
            self.rrt
                .iter()
                .find(|(th, _)| *th == t)
                .map(|(_, r)| r)
                .ok_or_else(|| Error::param("theta", format!("no RRT curve at θ = {t}")))
        };
        let (ca, cb) = (curve(theta_a)?, curve(theta_b)?);
        let mut out = Vec::new();
        for s in &self.svfr {
            let find = |c: &[StructureRow]| c.iter().find(|r| r.bin_lo == s.bin_lo).copied();
            let (Some(a), Some(b)) = (find(ca), find(cb)) else {
                continue;
            };
            let props: [(&'static str, RowStat); 2] = [
                ("avg_path_length", |r| (r.mean_apl, r.std_apl)),
                ("degree_std", |r| (r.mean_dstd, r.std_dstd)),
            ];
            for (name, get) in props {
                let ((ma, sa), (mb, sb), (v, _)) = (get(&a), get(&b), get(s));
                out.push(BandCheck {
                    bin_lo: s.bin_lo,
                    property: name,
                    value: v,
                    lower: (ma - sa).min(mb - sb),
                    upper: (ma + sa).max(mb + sb),
                });
            }
        }
        Ok(out)
    }
}

/// Bins `[min_size, 2 min_size), ...` up to `max_size` and the RRT exponents
/// to draw beside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub theta_values: Vec<f64>,
    pub min_size: usize,
    pub max_size: usize,
    pub rrt_reps: usize,
}

impl Default for StructureSpec {
    fn default() -> Self {
        StructureSpec {
            theta_values: default_structure_thetas(),
            min_size: 100,
            max_size: default_structure_max(),
            rrt_reps: default_rrt_reps(),
        }
    }
}

/// Structural metrics of the cascades in `[min_size, max_size)`, binned by
/// doubling sizes, beside RRT ensembles at each bin's geometric midpoint.
///
/// RRT seeds depend on the bin only, so the curves for different θ share
/// random numbers.
pub fn compare_structure(
    cascades: &[CascadeSummary],
    spec: &StructureSpec,
    seed: u64,
) -> Result<StructureComparison> {
    let StructureSpec {
        ref theta_values,
        min_size,
        max_size,
        rrt_reps,
    } = *spec;
    if min_size < 2 || max_size <= min_size {
        return Err(Error::param(
            "min_size",
            format!("need 2 <= min_size < max_size, got [{min_size}, {max_size})"),
        ));
    }
    let metrics: Vec<TreeMetrics<f64>> = cascades
        .iter()
        .filter(|c| c.size < max_size)
        .filter_map(|c| {
            Some(TreeMetrics {
                size: c.size,
                avg_path_length: c.avg_path_length?,
                degree_variance: c.degree_std? * c.degree_std?,
                degree_std: c.degree_std?,
            })
        })
        .collect();
    let svfr: Vec<StructureRow> = match bin_tree_metrics(&metrics, min_size) {
        Ok(b) => b.bins.iter().map(svfr_row).collect(),
        Err(Error::EmptyBins(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let n_bins = size_bin_index(max_size - 1, min_size).map_or(0, |k| k as usize + 1);
    let bins: Vec<(usize, usize)> = (0..n_bins)
        .map(|k| (min_size << k, min_size << (k + 1)))
        .collect();
    let rrt = theta_values
        .iter()
        .map(|&theta| -> Result<(f64, Vec<StructureRow>)> {
            let rows = bins
                .par_iter()
                .enumerate()
                .map(|(k, &(lo, hi))| {
                    let size = ((lo as f64) * (hi as f64)).sqrt().round() as usize;
                    let params = RrtParams::new(
                        size,
                        theta,
                        derive_path(seed, &[TAG_STRUCTURE, k as u64]),
                    )?;
                    let e = rrt_ensemble_stats(&params, rrt_reps)?;
                    Ok(rrt_row(&e, lo, hi))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((theta, rows))
        })
        .collect::<Result<_>>()?;
    Ok(StructureComparison { svfr, rrt })
}

/// Simulates the SVFR point and compares its structure with RRT ensembles
/// over `[min_size, max_size)`. An empty θ list gives SVFR rows only.
pub fn run_structure_comparison(
    net: &NetGenParams,
    svfr: &SvfrParams,
    networks: usize,
    runs: usize,
    spec: &StructureSpec,
) -> Result<StructureComparison> {
    let batch = batch_simulate(net, svfr, networks, runs)?;
    compare_structure(&batch.cascades, spec, svfr.seed)
}

fn svfr_row(b: &SizeBin<f64>) -> StructureRow {
    StructureRow {
        source: StructureSource::Svfr,
        theta: None,
        bin_lo: b.bin_lo,
        bin_hi: b.bin_hi,
        size: b.representative_size(),
        count: b.count,
        mean_apl: b.mean_apl,
        std_apl: b.std_apl,
        mean_dstd: b.mean_dstd,
        std_dstd: b.std_dstd,
    }
}

fn rrt_row(e: &EnsembleStats, lo: usize, hi: usize) -> StructureRow {
    StructureRow {
        source: StructureSource::Rrt,
        theta: Some(e.theta),
        bin_lo: lo,
        bin_hi: hi,
        size: e.n,
        count: e.reps,
        mean_apl: e.mean_apl,
        std_apl: e.std_apl,
        mean_dstd: e.mean_dstd,
        std_dstd: e.std_dstd,
    }
}

/// RRT ensemble statistics for every `(θ, size)`; sizes share seeds
/// across θ.
pub fn rrt_curves(
    thetas: &[f64],
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<EnsembleStats>> {
    let jobs: Vec<(f64, usize, usize)> = thetas
        .iter()
        .flat_map(|&t| sizes.iter().enumerate().map(move |(i, &n)| (t, i, n)))
        .collect();
    jobs.par_iter()
        .map(|&(theta, i, n)| {
            let params = RrtParams::new(n, theta, derive_path(seed, &[TAG_RRT_CURVES, i as u64]))?;
            rrt_ensemble_stats(&params, reps)
        })
        .collect()
}

/// Paths written by [`run_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<RunRecord>,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct SummaryRow {
    point_index: usize,
    n: usize,
    beta: f64,
    alpha: f64,
    gamma: f64,
    phi: f64,
    d_min: usize,
    d_max: usize,
    networks: usize,
    runs: usize,
    x_min: usize,
    bins_per_decade: usize,
    master_seed: u64,
    point_seed: u64,
    rng: String,
    cascades: usize,
    max_size: usize,
    tail_cascades: usize,
    lambda: Option<f64>,
    r_squared: Option<f64>,
    bins_used: Option<usize>,
    insufficient_data: bool,
    gamma_estimate: Option<f64>,
    max_clamped: usize,
    mean_realized_view: f64,
    size_dmaxf_pairs: usize,
    size_dmaxf_spearman: Option<f64>,
    max_decile_jump: Option<f64>,
    wall_time_s: f64,
}

impl From<&RunRecord> for SummaryRow {
    fn from(r: &RunRecord) -> Self {
        SummaryRow {
            point_index: r.point_index,
            n: r.n,
            beta: r.beta,
            alpha: r.alpha,
            gamma: r.gamma,
            phi: r.phi,
            d_min: r.d_min,
            d_max: r.d_max,
            networks: r.networks,
            runs: r.runs,
            x_min: r.x_min,
            bins_per_decade: r.bins_per_decade,
            master_seed: r.seeds.master,
            point_seed: r.seeds.point,
            rng: r.seeds.rng.clone(),
            cascades: r.cascades,
            max_size: r.max_size,
            tail_cascades: r.tail_cascades,
            lambda: r.fit.map(|f| f.lambda),
            r_squared: r.fit.map(|f| f.r_squared),
            bins_used: r.fit.map(|f| f.bins_used),
            insufficient_data: r.insufficient_data,
            gamma_estimate: r.gamma_estimate,
            max_clamped: r.max_clamped,
            mean_realized_view: r.mean_realized_view,
            size_dmaxf_pairs: r.size_dmaxf.pairs,
            size_dmaxf_spearman: r.size_dmaxf.spearman,
            max_decile_jump: r.size_dmaxf.max_decile_jump,
            wall_time_s: r.wall_time_s,
        }
    }
}

#[derive(Serialize)]
struct Fig8Row {
    n: usize,
    beta: f64,
    alpha: f64,
    lambda: Option<f64>,
    r_squared: Option<f64>,
    bins_used: Option<usize>,
    tail_cascades: usize,
    insufficient_data: bool,
}

#[derive(Serialize)]
struct Fig5Row {
    n: usize,
    beta: f64,
    alpha: f64,
    bin_lo: f64,
    bin_hi: f64,
    center: f64,
    count: f64,
    density: f64,
}

#[derive(Serialize)]
struct Fig7Row {
    n: usize,
    beta: f64,
    alpha: f64,
    d_max_f: usize,
    size: usize,
}

#[derive(Serialize)]
struct Fig9Row {
    n: Option<usize>,
    beta: Option<f64>,
    alpha: Option<f64>,
    source: StructureSource,
    theta: Option<f64>,
    bin_lo: usize,
    bin_hi: usize,
    size: usize,
    count: usize,
    mean_apl: f64,
    std_apl: f64,
    mean_dstd: f64,
    std_dstd: f64,
}

impl Fig9Row {
    fn new(point: Option<&SweepPoint>, r: StructureRow) -> Self {
        Fig9Row {
            n: point.map(|p| p.n),
            beta: point.map(|p| p.beta),
            alpha: point.map(|p| p.alpha),
            source: r.source,
            theta: r.theta,
            bin_lo: r.bin_lo,
            bin_hi: r.bin_hi,
            size: r.size,
            count: r.count,
            mean_apl: r.mean_apl,
            std_apl: r.std_apl,
            mean_dstd: r.mean_dstd,
            std_dstd: r.std_dstd,
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

/// Runs every point and writes the result files into `out_dir`, creating
/// it if needed. `results.jsonl` is appended as each point completes.
pub fn run_sweep(config: &SweepConfig, out_dir: &Path) -> Result<SweepOutput> {
    config.validate()?;
    let config = config.resolved();
    fs::create_dir_all(out_dir)?;
    let path = |name: &str| out_dir.join(name);
    let mut files = Vec::new();

    let config_path = path("config.json");
    let mut f = BufWriter::new(File::create(&config_path)?);
    serde_json::to_writer_pretty(&mut f, &config)?;
    f.write_all(b"\n")?;
    f.flush()?;
    files.push(config_path);

    let curves = rrt_curves(
        &config.curve_thetas,
        &config.curve_sizes,
        config.rrt_reps,
        config.seed,
    )?;
    let fig2 = path("fig2.csv");
    let mut w = csv_writer(&fig2)?;
    for e in &curves {
        w.serialize(e)?;
    }
    w.flush()?;
    files.push(fig2);

    let results_path = path("results.jsonl");
    let mut results = BufWriter::new(File::create(&results_path)?);
    let mut fig5: Vec<(f64, csv::Writer<BufWriter<File>>, PathBuf)> = Vec::new();
    let fig7_path = path("fig7.csv");
    let mut fig7 = csv_writer(&fig7_path)?;
    let fig9_path = path("fig9.csv");
    let mut fig9 = csv_writer(&fig9_path)?;
    let mut rrt_written = false;
    let structure = StructureSpec {
        theta_values: config.structure_thetas.clone(),
        min_size: config.x_min.max(2),
        max_size: config.structure_max.max(config.x_min.max(2) + 1),
        rrt_reps: config.rrt_reps,
    };
    let mut records = Vec::new();

    for point in config.points() {
        let res = run_point(&config, &point)?;
        serde_json::to_writer(&mut results, &res.record)?;
        results.write_all(b"\n")?;
        results.flush()?;

        let sizes: Vec<usize> = res.batch.cascades.iter().map(|c| c.size).collect();
        let hist = LogHistogram::<f64>::from_sizes(&sizes, 1, config.bins_per_decade)?;
        let slot = match fig5.iter().position(|(a, _, _)| *a == point.alpha) {
            Some(i) => i,
            None => {
                let p = path(&format!("fig5_alpha{}.csv", point.alpha));
                fig5.push((point.alpha, csv_writer(&p)?, p));
                fig5.len() - 1
            }
        };
        for k in 0..hist.len() {
            fig5[slot].1.serialize(Fig5Row {
                n: point.n,
                beta: point.beta,
                alpha: point.alpha,
                bin_lo: hist.edges[k],
                bin_hi: hist.edges[k + 1],
                center: hist.center(k),
                count: hist.counts[k],
                density: hist.density(k),
            })?;
        }

        for (d_max_f, size) in emit_size_vs_dmaxf(&res.batch.cascades, config.x_min).pairs {
            fig7.serialize(Fig7Row {
                n: point.n,
                beta: point.beta,
                alpha: point.alpha,
                d_max_f,
                size,
            })?;
        }

        let cmp = compare_structure(&res.batch.cascades, &structure, config.seed)?;
        if !rrt_written {
            for (_, rows) in &cmp.rrt {
                for &row in rows {
                    fig9.serialize(Fig9Row::new(None, row))?;
                }
            }
            rrt_written = true;
        }
        for &row in &cmp.svfr {
            fig9.serialize(Fig9Row::new(Some(&point), row))?;
        }
        records.push(res.record);
    }
    results.flush()?;
    files.push(results_path);
    for (_, mut w, p) in fig5 {
        w.flush()?;
        files.push(p);
    }
    fig7.flush()?;
    files.push(fig7_path);
    fig9.flush()?;
    files.push(fig9_path);

    let summary_path = path("summary.csv");
    let mut w = csv_writer(&summary_path)?;
    for r in &records {
        w.serialize(SummaryRow::from(r))?;
    }
    w.flush()?;
    files.push(summary_path);

    let fig8_path = path("fig8.csv");
    let mut w = csv_writer(&fig8_path)?;
    for r in &records {
        w.serialize(Fig8Row {
            n: r.n,
            beta: r.beta,
            alpha: r.alpha,
            lambda: r.fit.map(|f| f.lambda),
            r_squared: r.fit.map(|f| f.r_squared),
            bins_used: r.fit.map(|f| f.bins_used),
            tail_cascades: r.tail_cascades,
            insufficient_data: r.insufficient_data,
        })?;
    }
    w.flush()?;
    files.push(fig8_path);

    Ok(SweepOutput { records, files })
}

/// Reads `results.jsonl`.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
