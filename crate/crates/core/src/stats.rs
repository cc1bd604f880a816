//! Regime-scaled statistics of the total spin, empirical-distribution
//! distances, and MCMC accumulators/diagnostics.

use crate::sampler::SpinConfiguration;
use crate::theory::{self, ModelParams};
use crate::{Error, Result};
use serde::Serialize;

const SQRT_2PI_INV: f64 = 0.3989422804014327;

/// erf by series for moderate arguments and by the erfc continued
/// fraction in the tails; absolute error below 1e-15 everywhere.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x <= 2.5 {
        // all-positive-term form 2x e^{-x^2}/sqrt(pi) * sum (2x^2)^k / (2k+1)!!
        let q = 2.0 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0u32;
        while term > 1e-18 * sum && k < 200 {
            term *= q / (2.0 * k as f64 + 3.0);
            sum += term;
            k += 1;
        }
        2.0 * x * (-x * x).exp() / std::f64::consts::PI.sqrt() * sum
    } else {
        1.0 - erfc_tail(x)
    }
}

/// Continued fraction for erfc, valid for x > 1 or so; used for x > 2.5.
fn erfc_tail(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = tiny;
    let mut c = f;
    let mut d = 0.0;
    for j in 1..500 {
        let a = if j == 1 { 1.0 } else { (j - 1) as f64 / 2.0 };
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() * f
}

pub fn erfc(x: f64) -> f64 {
    if x > 2.5 {
        erfc_tail(x)
    } else if x < -2.5 {
        2.0 - erfc_tail(-x)
    } else {
        1.0 - erf(x)
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    SQRT_2PI_INV * (-0.5 * x * x).exp()
}

/// Inverse standard normal CDF: bisection bracket then Newton polish.
/// Accurate to ~1e-13 for p away from the extreme (sub-1e-30) tails.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile needs p in (0,1), got {p}")));
    }
    let (mut lo, mut hi) = (-12.0f64, 12.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let step = (p - normal_cdf(x)) / normal_pdf(x);
        if step.is_finite() {
            x += step.clamp(-1.0, 1.0);
        }
    }
    Ok(x)
}

fn check_sorted(samples: &[f64], what: &'static str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Empty(what));
    }
    if samples.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition(format!("{what} must be sorted ascending")));
    }
    Ok(())
}

/// Two-sided Kolmogorov-Smirnov distance between sorted samples and a
/// reference CDF, evaluating the empirical step from both sides.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    check_sorted(samples, "ks samples")?;
    let m = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
    }
    Ok(d)
}

/// Wasserstein-1 discrepancy between sorted samples and a reference
/// quantile function, by the order-statistics coupling at midpoints.
pub fn wasserstein1<Q: Fn(f64) -> f64>(samples: &[f64], quantile: Q) -> Result<f64> {
    check_sorted(samples, "wasserstein samples")?;
    let m = samples.len();
    let sum: f64 = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - quantile((i as f64 + 0.5) / m as f64)).abs())
        .sum();
    Ok(sum / m as f64)
}

/// Effective sample size with a degeneracy marker for (near-)constant
/// series, where the autocorrelation estimate is meaningless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssEstimate {
    pub ess: f64,
    pub degenerate: bool,
}

/// Autocorrelation-based effective sample size, m / (1 + 2 sum rho_k),
/// truncated by the initial-positive-sequence rule on paired lags and
/// capped at 10 m for antithetic series.
pub fn effective_sample_size(series: &[f64]) -> Result<EssEstimate> {
    let m = series.len();
    if m < 10 {
        return Err(Error::Precondition(format!(
            "effective sample size needs at least 10 points, got {m}"
        )));
    }
    let mean = series.iter().sum::<f64>() / m as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let gamma = |t: usize| -> f64 {
        centered[..m - t]
            .iter()
            .zip(&centered[t..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / m as f64
    };
    let gamma0 = gamma(0);
    if gamma0 <= 0.0 || gamma0.sqrt() < 1e-13 * mean.abs() {
        return Ok(EssEstimate {
            ess: m as f64,
            degenerate: true,
        });
    }
    // Geyer pairs: Gamma_k = rho(2k) + rho(2k+1), kept while positive
    let mut pair_sum = 0.0;
    let mut k = 0usize;
    while 2 * k + 1 < m {
        let pair = (gamma(2 * k) + gamma(2 * k + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        pair_sum += pair;
        k += 1;
    }
    let tau = -1.0 + 2.0 * pair_sum;
    let cap = 10.0 * m as f64;
    let ess = if tau <= 0.1 { cap } else { (m as f64 / tau).min(cap) };
    Ok(EssEstimate {
        ess,
        degenerate: false,
    })
}

/// sqrt((N - beta)/n) S_n; componentwise asymptotically standard
/// normal below the critical temperature.
pub fn w_subcritical(total_spin: &[f64], sites: usize, spin_dim: u32, beta: f64) -> Result<Vec<f64>> {
    if total_spin.len() != spin_dim as usize {
        return Err(Error::Domain(format!(
            "total spin has {} components, expected {spin_dim}",
            total_spin.len()
        )));
    }
    if sites == 0 {
        return Err(Error::Domain("need at least one site".into()));
    }
    if !(0.0..spin_dim as f64).contains(&beta) {
        return Err(Error::Precondition(format!(
            "subcritical scaling needs 0 <= beta < {spin_dim}, got {beta}"
        )));
    }
    let scale = ((spin_dim as f64 - beta) / sites as f64).sqrt();
    Ok(total_spin.iter().map(|v| scale * v).collect())
}

/// sqrt(n) (beta^2 |S_n|^2 / (n^2 b^2) - 1); asymptotically centered
/// normal with variance from the theory module when b = g_inverse.
pub fn w_supercritical(total_spin: &[f64], sites: usize, beta: f64, b: f64) -> Result<f64> {
    if b <= 0.0 {
        return Err(Error::Domain(format!("concentration b must be positive, got {b}")));
    }
    if beta <= 2.0 {
        return Err(Error::Precondition(format!(
            "supercritical fluctuation scaling needs beta > 2, got {beta}"
        )));
    }
    if sites == 0 {
        return Err(Error::Domain("need at least one site".into()));
    }
    let n = sites as f64;
    let s2: f64 = total_spin.iter().map(|v| v * v).sum();
    Ok(n.sqrt() * (beta * beta * s2 / (n * n * b * b) - 1.0))
}

/// c |S_n|^2 / n^{3/2}; rotation invariant by construction.
pub fn w_critical(total_spin: &[f64], sites: usize, scale_c: f64) -> Result<f64> {
    if scale_c <= 0.0 {
        return Err(Error::Domain(format!(
            "critical scale must be positive, got {scale_c}"
        )));
    }
    if sites == 0 {
        return Err(Error::Domain("need at least one site".into()));
    }
    let s2: f64 = total_spin.iter().map(|v| v * v).sum();
    Ok(scale_c * s2 / (sites as f64).powf(1.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Subcritical,
    Supercritical,
    Critical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// A regime statistic together with the model it was computed under.
/// Subcritical values are vectors; the other regimes are scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeStatistic {
    pub regime: Regime,
    pub value: StatValue,
    pub sites: usize,
    pub spin_dim: u32,
    pub beta: f64,
}

impl RegimeStatistic {
    pub fn subcritical(params: &ModelParams, total_spin: &[f64]) -> Result<Self> {
        let value = w_subcritical(total_spin, params.sites(), params.spin_dim(), params.beta())?;
        Ok(RegimeStatistic {
            regime: Regime::Subcritical,
            value: StatValue::Vector(value),
            sites: params.sites(),
            spin_dim: params.spin_dim(),
            beta: params.beta(),
        })
    }

    /// b is taken from the exact fixed point of the mean-field equation.
    pub fn supercritical(params: &ModelParams, total_spin: &[f64]) -> Result<Self> {
        let b = theory::g_inverse(params.spin_dim(), params.beta())?;
        let value = w_supercritical(total_spin, params.sites(), params.beta(), b)?;
        Ok(RegimeStatistic {
            regime: Regime::Supercritical,
            value: StatValue::Scalar(value),
            sites: params.sites(),
            spin_dim: params.spin_dim(),
            beta: params.beta(),
        })
    }

    pub fn critical(params: &ModelParams, total_spin: &[f64], scale_c: f64) -> Result<Self> {
        let value = w_critical(total_spin, params.sites(), scale_c)?;
        Ok(RegimeStatistic {
            regime: Regime::Critical,
            value: StatValue::Scalar(value),
            sites: params.sites(),
            spin_dim: params.spin_dim(),
            beta: params.beta(),
        })
    }
}

/// Site projections of a configuration onto a unit direction; the
/// empirical spin measure seen through that direction.
pub fn projection_samples(config: &SpinConfiguration, direction: &[f64]) -> Result<Vec<f64>> {
    let dim = config.spin_dim();
    if direction.len() != dim {
        return Err(Error::Domain(format!(
            "direction has {} components, expected {dim}",
            direction.len()
        )));
    }
    let norm2: f64 = direction.iter().map(|v| v * v).sum();
    if (norm2.sqrt() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "direction must be unit length, |d| = {}",
            norm2.sqrt()
        )));
    }
    Ok((0..config.n_sites())
        .map(|i| config.site(i).iter().zip(direction).map(|(a, b)| a * b).sum())
        .collect())
}

/// Result of matching the empirical second moment of the uncalibrated
/// critical statistic |S_n|^2 / n^{3/2} to the limit density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalCalibration {
    pub scale: f64,
    pub std_error: f64,
    pub sample_second_moment: f64,
}

/// Solves E[(c u)^2] = second moment of the critical law for c, with a
/// delta-method standard error discounted by the effective sample size.
pub fn calibrate_critical_scale(
    spin_dim: u32,
    u_samples: &[f64],
    ess: f64,
) -> Result<CriticalCalibration> {
    if u_samples.len() < 2 {
        return Err(Error::Precondition(
            "calibration needs at least two samples".into(),
        ));
    }
    if !(ess >= 2.0) {
        return Err(Error::Precondition(format!(
            "calibration needs effective sample size >= 2, got {ess}"
        )));
    }
    if u_samples.iter().any(|&u| !(u >= 0.0)) {
        return Err(Error::Domain(
            "critical statistic samples must be nonnegative".into(),
        ));
    }
    let m = u_samples.len() as f64;
    let m2 = u_samples.iter().map(|u| u * u).sum::<f64>() / m;
    if m2 <= 0.0 {
        return Err(Error::Domain("all samples are zero".into()));
    }
    let var_u2 = u_samples.iter().map(|u| (u * u - m2).powi(2)).sum::<f64>() / (m - 1.0);
    let target = theory::critical_second_moment(spin_dim)?;
    let scale = (target / m2).sqrt();
    // c = sqrt(target/m2) so dc/dm2 = -c/(2 m2)
    let std_error = scale / (2.0 * m2) * (var_u2 / ess).sqrt();
    Ok(CriticalCalibration {
        scale,
        std_error,
        sample_second_moment: m2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    id: u64,
    /// rows * dim values in time order, row-major.
    data: Vec<f64>,
}

/// Accumulator for vector samples grouped into blocks (one block per
/// chain). All derived quantities are computed in a canonical order so
/// that merging blocks in any order gives identical results: counts and
/// means are exact, covariances agree to well below 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary {
    dim: usize,
    blocks: Vec<Block>,
}

/// Neumaier-compensated sum in the slice's own order; callers pass
/// canonically sorted data when exact order independence is needed.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl EmpiricalSummary {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("summary dimension must be >= 1".into()));
        }
        Ok(EmpiricalSummary {
            dim,
            blocks: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.data.len() / self.dim).sum()
    }

    /// Appends one sample row to the given block, creating it if new.
    pub fn push_row(&mut self, block_id: u64, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Domain(format!(
                "row has {} components, summary dimension is {}",
                row.len(),
                self.dim
            )));
        }
        match self.blocks.binary_search_by_key(&block_id, |b| b.id) {
            Ok(i) => self.blocks[i].data.extend_from_slice(row),
            Err(i) => self.blocks.insert(
                i,
                Block {
                    id: block_id,
                    data: row.to_vec(),
                },
            ),
        }
        Ok(())
    }

    /// Disjoint-block union; order of operands does not affect any
    /// derived statistic.
    pub fn merge(mut self, other: EmpiricalSummary) -> Result<EmpiricalSummary> {
        if self.dim != other.dim {
            return Err(Error::Domain(format!(
                "cannot merge summaries of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        for block in other.blocks {
            match self.blocks.binary_search_by_key(&block.id, |b| b.id) {
                Ok(_) => {
                    return Err(Error::Precondition(format!(
                        "merge blocks must be disjoint; id {} on both sides",
                        block.id
                    )))
                }
                Err(i) => self.blocks.insert(i, block),
            }
        }
        Ok(self)
    }

    /// Component j of every sample, block-id order then time order.
    pub fn component(&self, j: usize) -> Result<Vec<f64>> {
        if j >= self.dim {
            return Err(Error::Domain(format!(
                "component {j} out of range for dimension {}",
                self.dim
            )));
        }
        let mut out = Vec::with_capacity(self.count());
        for block in &self.blocks {
            out.extend(block.data.iter().skip(j).step_by(self.dim));
        }
        Ok(out)
    }

    pub fn sorted_component(&self, j: usize) -> Result<Vec<f64>> {
        let mut v = self.component(j)?;
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// Sample mean vector, exactly independent of block arrangement
    /// (each component is summed in sorted order).
    pub fn mean(&self) -> Result<Vec<f64>> {
        let m = self.count();
        if m == 0 {
            return Err(Error::Empty("summary has no samples"));
        }
        (0..self.dim)
            .map(|j| Ok(compensated_sum(&self.sorted_component(j)?) / m as f64))
            .collect()
    }

    /// Sample covariance (denominator m - 1), computed from sorted
    /// centered products for order independence.
    pub fn covariance(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.count();
        if m < 2 {
            return Err(Error::Precondition(
                "covariance needs at least two samples".into(),
            ));
        }
        let mean = self.mean()?;
        let components: Vec<Vec<f64>> = (0..self.dim)
            .map(|j| self.component(j))
            .collect::<Result<_>>()?;
        let mut cov = vec![vec![0.0; self.dim]; self.dim];
        for j in 0..self.dim {
            for k in j..self.dim {
                let mut products: Vec<f64> = components[j]
                    .iter()
                    .zip(&components[k])
                    .map(|(a, b)| (a - mean[j]) * (b - mean[k]))
                    .collect();
                products.sort_by(f64::total_cmp);
                let c = compensated_sum(&products) / (m - 1) as f64;
                cov[j][k] = c;
                cov[k][j] = c;
            }
        }
        Ok(cov)
    }

    /// Per-block ESS summed across blocks for component j.
    pub fn ess(&self, j: usize) -> Result<EssEstimate> {
        if self.blocks.is_empty() {
            return Err(Error::Empty("summary has no samples"));
        }
        let mut total = 0.0;
        let mut degenerate = false;
        for block in &self.blocks {
            let series: Vec<f64> = block.data.iter().skip(j).step_by(self.dim).copied().collect();
            let est = effective_sample_size(&series)?;
            total += est.ess;
            degenerate |= est.degenerate;
        }
        Ok(EssEstimate {
            ess: total,
            degenerate,
        })
    }

    /// Histogram of component j; bin count defaults to the
    /// Freedman-Diaconis rule. Counts always sum to count().
    pub fn histogram(&self, j: usize, bins: Option<usize>) -> Result<Histogram> {
        let sorted = self.sorted_component(j)?;
        if sorted.is_empty() {
            return Err(Error::Empty("summary has no samples"));
        }
        let m = sorted.len();
        let lo = sorted[0];
        let hi = sorted[m - 1];
        let n_bins = match bins {
            Some(0) => return Err(Error::Domain("histogram needs at least one bin".into())),
            Some(b) => b,
            None => {
                let q1 = sorted[m / 4];
                let q3 = sorted[(3 * m) / 4];
                let width = 2.0 * (q3 - q1) / (m as f64).cbrt();
                if width <= 0.0 || hi <= lo {
                    1
                } else {
                    (((hi - lo) / width).ceil() as usize).clamp(1, 10_000)
                }
            }
        };
        let span = if hi > lo { hi - lo } else { 1.0 };
        let edges: Vec<f64> = (0..=n_bins)
            .map(|i| lo + span * i as f64 / n_bins as f64)
            .collect();
        let mut counts = vec![0u64; n_bins];
        for &x in &sorted {
            let idx = (((x - lo) / span * n_bins as f64) as usize).min(n_bins - 1);
            counts[idx] += 1;
        }
        Ok(Histogram { edges, counts })
    }

    /// JSON-ready snapshot. The histogram and any externally computed
    /// distribution distances refer to the given component.
    pub fn export(
        &self,
        hist_component: usize,
        bins: Option<usize>,
        ks: Option<f64>,
        w1: Option<f64>,
    ) -> Result<SummaryExport> {
        let ess = (0..self.dim)
            .map(|j| Ok(self.ess(j)?.ess))
            .collect::<Result<Vec<f64>>>()?;
        Ok(SummaryExport {
            count: self.count(),
            mean: self.mean()?,
            cov: self.covariance()?,
            ess,
            ks,
            w1,
            histogram: self.histogram(hist_component, bins)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryExport {
    pub count: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub ess: Vec<f64>,
    pub ks: Option<f64>,
    pub w1: Option<f64>,
    pub histogram: Histogram,
}
