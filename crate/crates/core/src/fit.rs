//! Tail-exponent fitting, forward-probability estimation and calibration of
//! the attachment exponent θ against size-binned tree properties.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{mean_std, rrt_ensemble_stats, SizeBinnedStats};
use crate::rrt::RrtParams;
use crate::seed::derive_seed;
use crate::svfr::CascadeSummary;
use crate::Scalar;

/// Logarithmically spaced histogram of integer sizes.
///
/// Bin `k` covers `[x_min 10^(k/b), x_min 10^((k+1)/b))`; its width is the
/// number of integers it contains.
#[derive(Debug, Clone, PartialEq)]
pub struct LogHistogram<T> {
    pub x_min: usize,
    pub bins_per_decade: usize,
    pub edges: Vec<T>,
    pub counts: Vec<T>,
}

impl<T: Scalar> LogHistogram<T> {
    /// `n_bins` empty bins starting at `x_min`.
    pub fn empty(x_min: usize, bins_per_decade: usize, n_bins: usize) -> Self {
        let edges = (0..=n_bins)
            .map(|k| {
                T::from_count(x_min)
                    * T::lit(10f64.powf(k as f64 / bins_per_decade as f64))
            })
            .collect();
        LogHistogram {
            x_min,
            bins_per_decade,
            edges,
            counts: vec![T::zero(); n_bins],
        }
    }

    /// Histogram of the sizes `>= x_min`.
    pub fn from_sizes(sizes: &[usize], x_min: usize, bins_per_decade: usize) -> Result<Self> {
        if x_min == 0 {
            return Err(Error::param("x_min", "must be >= 1"));
        }
        if bins_per_decade == 0 {
            return Err(Error::param("bins_per_decade", "must be >= 1"));
        }
        let max = sizes.iter().copied().filter(|&s| s >= x_min).max();
        let n_bins = match max {
            Some(m) => {
                let ratio = m as f64 / x_min as f64;
                (ratio.log10() * bins_per_decade as f64).floor() as usize + 2
            }
            None => 0,
        };
        let mut h = Self::empty(x_min, bins_per_decade, n_bins);
        for &s in sizes.iter().filter(|&&s| s >= x_min) {
            let k = h.bin_of(s);
            h.counts[k] = h.counts[k] + T::one();
        }
        Ok(h)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn bin_of(&self, s: usize) -> usize {
        let x = T::from_count(s);
        // edges are increasing; first edge strictly above x closes the bin
        self.edges.partition_point(|&e| e <= x) - 1
    }

    /// Integers in `[lo, hi)`.
    pub fn width(&self, k: usize) -> T {
        self.edges[k + 1].ceil() - self.edges[k].ceil()
    }

    /// Geometric centre of bin `k`.
    pub fn center(&self, k: usize) -> T {
        (self.edges[k] * self.edges[k + 1]).sqrt()
    }

    pub fn total(&self) -> T {
        self.counts.iter().fold(T::zero(), |a, &b| a + b)
    }

    /// Probability density per unit size, normalized over the histogram.
    pub fn density(&self, k: usize) -> T {
        self.counts[k] / (self.width(k) * self.total())
    }

    /// `(log10 centre, log10 density)` for every populated bin.
    pub fn loglog_points(&self) -> Vec<(T, T)> {
        (0..self.len())
            .filter(|&k| self.counts[k] > T::zero() && self.width(k) > T::zero())
            .map(|k| (self.center(k).log10(), self.density(k).log10()))
            .collect()
    }
}

/// Ordinary least squares `y = a + b x`. Returns `(a, b, r²)`.
pub fn least_squares<T: Scalar>(points: &[(T, T)]) -> (T, T, T) {
    let n = T::from_count(points.len());
    let (sx, sy) = points
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy > T::zero() {
        (sxy * sxy) / (sxx * syy)
    } else {
        T::one()
    };
    (my - slope * mx, slope, r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailEstimator {
    /// Least-squares line through the log-binned density.
    #[default]
    LogBinned,
    /// Discrete maximum likelihood, continuous approximation with the
    /// half-integer correction: `1 + n / Σ ln(x / (x_min - 1/2))`.
    DiscreteMle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    pub lambda: T,
    pub x_min: usize,
    /// Of the log-log line through the binned density.
    pub r_squared: T,
    pub bins_per_decade: usize,
    /// Samples at or above `x_min`.
    pub n_tail: usize,
    pub bins_used: usize,
    pub estimator: TailEstimator,
}

/// Tail exponent from a log-binned density histogram.
pub fn fit_powerlaw_tail<T: Scalar>(
    sizes: &[usize],
    x_min: usize,
    bins_per_decade: usize,
) -> Result<PowerLawFit<T>> {
    fit_powerlaw_tail_with(sizes, x_min, bins_per_decade, TailEstimator::LogBinned)
}

pub fn fit_powerlaw_tail_with<T: Scalar>(
    sizes: &[usize],
    x_min: usize,
    bins_per_decade: usize,
    estimator: TailEstimator,
) -> Result<PowerLawFit<T>> {
    let hist = LogHistogram::<T>::from_sizes(sizes, x_min, bins_per_decade)?;
    let mut fit = fit_histogram(&hist)?;
    fit.n_tail = sizes.iter().filter(|&&s| s >= x_min).count();
    if estimator == TailEstimator::DiscreteMle {
        let shift = T::from_count(x_min) - T::lit(0.5);
        let log_sum = sizes
            .iter()
            .filter(|&&s| s >= x_min)
            .fold(T::zero(), |acc, &s| acc + (T::from_count(s) / shift).ln());
        fit.lambda = T::one() + T::from_count(fit.n_tail) / log_sum;
        fit.estimator = estimator;
    }
    Ok(fit)
}

/// Log-log least squares over the populated bins of `hist`.
pub fn fit_histogram<T: Scalar>(hist: &LogHistogram<T>) -> Result<PowerLawFit<T>> {
    let pts = hist.loglog_points();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} populated bins at or above {}",
            pts.len(),
            hist.x_min
        )));
    }
    let (_, slope, r_squared) = least_squares(&pts);
    Ok(PowerLawFit {
        lambda: -slope,
        x_min: hist.x_min,
        r_squared,
        bins_per_decade: hist.bins_per_decade,
        n_tail: hist.total().to_usize().unwrap_or(0),
        bins_used: pts.len(),
        estimator: TailEstimator::LogBinned,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate<T> {
    pub fractions: Vec<T>,
    pub mean: T,
    pub std: T,
}

/// How the creator enters the per-cascade forward fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreatorPolicy {
    /// `(forwarders - 1) / size`: the creator shares but was never offered
    /// the forward trial, so it is left out of the numerator.
    #[default]
    Exclude,
    /// `forwarders / size` with the creator counted as a forwarder. Biased
    /// upward by about `(1 - γ) / size`.
    CountAsForwarder,
}

/// Per-cascade forward fraction over cascades of at least `min_size` nodes,
/// with the creator left out of the forwarder count.
pub fn estimate_gamma<T: Scalar>(
    cascades: &[CascadeSummary],
    min_size: usize,
) -> Result<GammaEstimate<T>> {
    estimate_gamma_with(cascades, min_size, CreatorPolicy::default())
}

pub fn estimate_gamma_with<T: Scalar>(
    cascades: &[CascadeSummary],
    min_size: usize,
    policy: CreatorPolicy,
) -> Result<GammaEstimate<T>> {
    estimate_gamma_from_counts(
        cascades
            .iter()
            .filter(|c| c.size >= min_size)
            .map(|c| (c.n_forwarders, c.size)),
        policy,
    )
}

/// Same as [`estimate_gamma_with`] from `(forwarders, size)` pairs, where
/// `forwarders` includes the creator.
pub fn estimate_gamma_from_counts<T: Scalar>(
    counts: impl IntoIterator<Item = (usize, usize)>,
    policy: CreatorPolicy,
) -> Result<GammaEstimate<T>> {
    let fractions: Vec<T> = counts
        .into_iter()
        .map(|(f, s)| {
            if s == 0 || f == 0 || f > s {
                return Err(Error::param(
                    "cascades",
                    format!("{f} forwarders in a cascade of size {s}"),
                ));
            }
            let f = match policy {
                CreatorPolicy::Exclude => f - 1,
                CreatorPolicy::CountAsForwarder => f,
            };
            Ok(T::from_count(f) / T::from_count(s))
        })
        .collect::<Result<_>>()?;
    if fractions.is_empty() {
        return Err(Error::InsufficientData("no cascades to estimate from".into()));
    }
    let (mean, std) = mean_std(fractions.iter().copied());
    Ok(GammaEstimate {
        fractions,
        mean,
        std,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaFit {
    pub theta_star: f64,
    pub loss: f64,
    /// `(θ, loss)` for every grid point, in grid order.
    pub grid: Vec<(f64, f64)>,
}

/// Grid search for the θ whose RRT ensembles best match the observed binned
/// means of average path length and degree standard deviation.
///
/// Loss is `Σ_bins Σ_props ((obs - sim) / obs)²`. Every θ reuses the same
/// per-bin seeds, so grid points are compared on common random numbers.
/// Ties resolve to the smaller θ.
pub fn fit_theta(
    observed: &SizeBinnedStats<f64>,
    theta_grid: &[f64],
    reps_per_point: usize,
    seed: u64,
) -> Result<ThetaFit> {
    if observed.bins.is_empty() {
        return Err(Error::InsufficientData("no observed bins".into()));
    }
    if theta_grid.is_empty() {
        return Err(Error::param("theta_grid", "empty grid"));
    }
    if reps_per_point == 0 {
        return Err(Error::param("reps_per_point", "must be >= 1"));
    }
    for b in &observed.bins {
        if !(b.mean_apl > 0.0 && b.mean_dstd > 0.0) {
            return Err(Error::param(
                "observed",
                format!("bin [{}, {}) has non-positive means", b.bin_lo, b.bin_hi),
            ));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..theta_grid.len())
        .flat_map(|t| (0..observed.bins.len()).map(move |b| (t, b)))
        .collect();
    let terms: Vec<f64> = jobs
        .par_iter()
        .map(|&(t, b)| -> Result<f64> {
            let bin = &observed.bins[b];
            let params = RrtParams::new(
                bin.representative_size(),
                theta_grid[t],
                derive_seed(seed, b as u64),
            )?;
            let sim = rrt_ensemble_stats(&params, reps_per_point)?;
            let ra = (bin.mean_apl - sim.mean_apl) / bin.mean_apl;
            let rd = (bin.mean_dstd - sim.mean_dstd) / bin.mean_dstd;
            Ok(ra * ra + rd * rd)
        })
        .collect::<Result<_>>()?;
    let grid: Vec<(f64, f64)> = theta_grid
        .iter()
        .enumerate()
        .map(|(t, &theta)| {
            let nb = observed.bins.len();
            (theta, terms[t * nb..(t + 1) * nb].iter().sum())
        })
        .collect();
    let (theta_star, loss) = grid
        .iter()
        .copied()
        .fold(None::<(f64, f64)>, |best, (th, l)| match best {
            Some((bt, bl)) if bl < l || (bl == l && bt <= th) => Some((bt, bl)),
            _ => Some((th, l)),
        })
        .expect("nonempty grid");
    Ok(ThetaFit {
        theta_star,
        loss,
        grid,
    })
}
