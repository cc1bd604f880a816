//! Glauber dynamics for the mean-field O(N) model. The single-site
//! conditional given the rest of the configuration is exactly a
//! von Mises-Fisher law with direction along the leftover total spin
//! and concentration (beta/n) |S_n - s_i|, so each update is an exact
//! draw and the chain has the Gibbs measure as its stationary law.

use crate::theory::ModelParams;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

/// Spins live in R^N for N up to this bound; update buffers are
/// stack-allocated at this size.
pub const MAX_SPIN_DIM: usize = 16;

/// Cached total spin is rebuilt from scratch this often (in sweeps) to
/// stop incremental-update drift from accumulating.
const TOTAL_REFRESH_SWEEPS: u64 = 64;

/// Deterministic random stream for a (seed, chain) pair. Distinct
/// chain ids select disjoint ChaCha streams under the same seed.
pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, chain_id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain_id);
    rng
}

/// n unit spins in R^N, flat row-major storage, plus the cached total.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfiguration {
    spin_dim: usize,
    spins: Vec<f64>,
    total: Vec<f64>,
}

impl SpinConfiguration {
    fn check_dims(sites: usize, spin_dim: usize) -> Result<()> {
        if spin_dim < 1 || spin_dim > MAX_SPIN_DIM {
            return Err(Error::Domain(format!(
                "spin dimension must be in 1..={MAX_SPIN_DIM}, got {spin_dim}"
            )));
        }
        if sites < 1 {
            return Err(Error::Domain(format!("need at least one site, got {sites}")));
        }
        Ok(())
    }

    /// All spins at the first coordinate axis.
    pub fn aligned(sites: usize, spin_dim: usize) -> Result<Self> {
        Self::check_dims(sites, spin_dim)?;
        let mut spins = vec![0.0; sites * spin_dim];
        for i in 0..sites {
            spins[i * spin_dim] = 1.0;
        }
        let mut config = SpinConfiguration {
            spin_dim,
            spins,
            total: vec![0.0; spin_dim],
        };
        config.recompute_total();
        Ok(config)
    }

    /// Independent uniform draws from the sphere.
    pub fn uniform<R: Rng>(sites: usize, spin_dim: usize, rng: &mut R) -> Result<Self> {
        Self::check_dims(sites, spin_dim)?;
        let mut spins = vec![0.0; sites * spin_dim];
        for i in 0..sites {
            sample_unit_sphere(&mut spins[i * spin_dim..(i + 1) * spin_dim], rng);
        }
        let mut config = SpinConfiguration {
            spin_dim,
            spins,
            total: vec![0.0; spin_dim],
        };
        config.recompute_total();
        Ok(config)
    }

    /// Builds from explicit rows; each row must be unit length within
    /// 1e-6 and is renormalized exactly.
    pub fn from_flat(spin_dim: usize, mut spins: Vec<f64>) -> Result<Self> {
        if spin_dim < 1 || spin_dim > MAX_SPIN_DIM || spins.is_empty() {
            return Err(Error::Domain(
                "from_flat needs 1 <= spin_dim <= MAX_SPIN_DIM and nonempty data".into(),
            ));
        }
        if spins.len() % spin_dim != 0 {
            return Err(Error::Domain(format!(
                "flat spin data length {} is not a multiple of spin_dim {spin_dim}",
                spins.len()
            )));
        }
        for row in spins.chunks_mut(spin_dim) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::Domain(format!(
                    "spin row has norm {norm}, expected 1"
                )));
            }
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        let mut config = SpinConfiguration {
            spin_dim,
            spins,
            total: vec![0.0; spin_dim],
        };
        config.recompute_total();
        Ok(config)
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len() / self.spin_dim
    }

    pub fn site(&self, i: usize) -> &[f64] {
        &self.spins[i * self.spin_dim..(i + 1) * self.spin_dim]
    }

    /// Cached total spin S_n.
    pub fn total_spin(&self) -> &[f64] {
        &self.total
    }

    /// H_n = -|S_n|^2 / (2n), the complete-graph pair sum collapsed
    /// onto the total spin.
    pub fn energy(&self) -> f64 {
        let s2: f64 = self.total.iter().map(|v| v * v).sum();
        -s2 / (2.0 * self.n_sites() as f64)
    }

    /// Rebuilds the cached total from the spins.
    pub fn recompute_total(&mut self) {
        self.total.iter_mut().for_each(|v| *v = 0.0);
        for row in self.spins.chunks(self.spin_dim) {
            for (t, v) in self.total.iter_mut().zip(row) {
                *t += v;
            }
        }
    }

    /// Max-norm gap between the cached total and a fresh recompute.
    pub fn total_drift(&self) -> f64 {
        let mut fresh = vec![0.0; self.spin_dim];
        for row in self.spins.chunks(self.spin_dim) {
            for (t, v) in fresh.iter_mut().zip(row) {
                *t += v;
            }
        }
        fresh
            .iter()
            .zip(&self.total)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of any spin from unit length.
    pub fn max_norm_error(&self) -> f64 {
        self.spins
            .chunks(self.spin_dim)
            .map(|row| (row.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Uniform draw from the unit sphere in R^dim written into `out`
/// (Gaussian direction method; dim = 1 degenerates to a fair sign).
pub fn sample_unit_sphere<R: Rng>(out: &mut [f64], rng: &mut R) {
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = z;
            norm2 += z * z;
        }
        if norm2 > 1e-24 {
            let inv = norm2.sqrt().recip();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// von Mises draw on the circle by the wrapped-Cauchy rejection method,
/// returned as the angular offset from the mean direction.
fn sample_von_mises_angle<R: Rng>(kappa: f64, rng: &mut R) -> Result<f64> {
    let a = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let b = (a - (2.0 * a).sqrt()) / (2.0 * kappa);
    let r = (1.0 + b * b) / (2.0 * b);
    for _ in 0..100_000 {
        let u1: f64 = rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        let z = (std::f64::consts::PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let sign = if rng.gen::<f64>() < 0.5 { -1.0 } else { 1.0 };
            return Ok(sign * f.clamp(-1.0, 1.0).acos());
        }
    }
    Err(Error::Convergence(format!(
        "von Mises rejection sampler stalled at kappa = {kappa}"
    )))
}

/// Cosine of the polar angle for a von Mises-Fisher draw in dimension
/// dim >= 3 (beta-proposal rejection scheme).
fn sample_vmf_cosine<R: Rng>(dim: usize, kappa: f64, rng: &mut R) -> Result<f64> {
    let d = (dim - 1) as f64;
    let b = (-2.0 * kappa + (4.0 * kappa * kappa + d * d).sqrt()) / d;
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + d * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * d, 0.5 * d).map_err(|e| {
        Error::Domain(format!("invalid beta proposal for dim {dim}: {e}"))
    })?;
    for _ in 0..100_000 {
        let z: f64 = beta.sample(rng);
        let u: f64 = rng.gen::<f64>();
        let t = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if kappa * t + d * (1.0 - x0 * t).ln() - c >= u.ln() {
            return Ok(t.clamp(-1.0, 1.0));
        }
    }
    Err(Error::Convergence(format!(
        "vMF cosine rejection sampler stalled at dim = {dim}, kappa = {kappa}"
    )))
}

/// Exact von Mises-Fisher draw with mean direction `dir` (unit vector)
/// and concentration kappa >= 0, written into `out`. kappa = 0 is a
/// uniform sphere draw.
fn sample_vmf<R: Rng>(dir: &[f64], kappa: f64, out: &mut [f64], rng: &mut R) -> Result<()> {
    let dim = dir.len();
    if kappa < 1e-12 {
        sample_unit_sphere(out, rng);
        return Ok(());
    }
    match dim {
        1 => {
            // two-point conditional on {-1, +1}
            let p_align = 1.0 / (1.0 + (-2.0 * kappa).exp());
            out[0] = if rng.gen::<f64>() < p_align {
                dir[0]
            } else {
                -dir[0]
            };
        }
        2 => {
            let base = dir[1].atan2(dir[0]);
            let angle = base + sample_von_mises_angle(kappa, rng)?;
            out[0] = angle.cos();
            out[1] = angle.sin();
        }
        _ => {
            let t = sample_vmf_cosine(dim, kappa, rng)?;
            // tangent direction: uniform sphere draw projected off dir
            let mut tangent = [0.0; MAX_SPIN_DIM];
            let tangent = &mut tangent[..dim];
            loop {
                sample_unit_sphere(tangent, rng);
                let along: f64 = tangent.iter().zip(dir).map(|(a, b)| a * b).sum();
                let mut norm2 = 0.0;
                for (v, d) in tangent.iter_mut().zip(dir) {
                    *v -= along * d;
                    norm2 += *v * *v;
                }
                if norm2 > 1e-18 {
                    let inv = norm2.sqrt().recip();
                    tangent.iter_mut().for_each(|v| *v *= inv);
                    break;
                }
            }
            let radial = (1.0 - t * t).max(0.0).sqrt();
            for ((o, d), v) in out.iter_mut().zip(dir).zip(tangent.iter()) {
                *o = t * d + radial * v;
            }
        }
    }
    Ok(())
}

/// Resamples site i from its exact conditional given all other spins.
pub fn conditional_update<R: Rng>(
    config: &mut SpinConfiguration,
    site: usize,
    beta: f64,
    rng: &mut R,
) -> Result<()> {
    let n = config.n_sites();
    if site >= n {
        return Err(Error::Domain(format!(
            "site index {site} out of range for {n} sites"
        )));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::Domain(format!(
            "inverse temperature must be finite and >= 0, got {beta}"
        )));
    }
    let dim = config.spin_dim;
    let mut rest = [0.0; MAX_SPIN_DIM];
    let rest = &mut rest[..dim];
    let offset = site * dim;
    let mut rest_norm2 = 0.0;
    for j in 0..dim {
        rest[j] = config.total[j] - config.spins[offset + j];
        rest_norm2 += rest[j] * rest[j];
    }
    let rest_norm = rest_norm2.sqrt();
    let kappa = beta / n as f64 * rest_norm;
    let mut fresh = [0.0; MAX_SPIN_DIM];
    let fresh = &mut fresh[..dim];
    if kappa < 1e-12 || rest_norm < 1e-14 {
        sample_unit_sphere(fresh, rng);
    } else {
        let inv = rest_norm.recip();
        let mut dir = [0.0; MAX_SPIN_DIM];
        let dir = &mut dir[..dim];
        for j in 0..dim {
            dir[j] = rest[j] * inv;
        }
        sample_vmf(dir, kappa, fresh, rng)?;
    }
    // renormalize before committing; keeps spins exactly unit length
    let norm = fresh.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in fresh.iter_mut() {
        *v /= norm;
    }
    for j in 0..dim {
        config.total[j] += fresh[j] - config.spins[offset + j];
        config.spins[offset + j] = fresh[j];
    }
    Ok(())
}

/// One sweep = n random-scan single-site updates.
pub fn glauber_sweep<R: Rng>(
    config: &mut SpinConfiguration,
    beta: f64,
    rng: &mut R,
) -> Result<()> {
    let n = config.n_sites();
    for _ in 0..n {
        let site = rng.gen_range(0..n);
        conditional_update(config, site, beta, rng)?;
    }
    Ok(())
}

/// Initial condition for a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Uniform,
    Aligned,
}

/// Chain schedule. (seed, chain_id) defines the random stream; the
/// model itself (N, n, beta) lives in ModelParams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub sweeps: u64,
    pub burn_in_sweeps: u64,
    pub thin: u64,
    pub seed: u64,
    pub chain_id: u64,
    pub init: InitKind,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            sweeps: 1000,
            burn_in_sweeps: 200,
            thin: 5,
            seed: 0,
            chain_id: 0,
            init: InitKind::Uniform,
        }
    }
}

/// State recorded every `thin` sweeps after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    /// 1-based sweep index counted after burn-in.
    pub sweep: u64,
    pub total_spin: Vec<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub params: ModelParams,
    pub config: SamplerConfig,
    pub records: Vec<SweepRecord>,
    /// Configuration at the last sweep, for projection diagnostics.
    pub final_state: SpinConfiguration,
    /// Not part of the determinism contract, which covers records only.
    pub wall_time_s: f64,
}

/// Runs one chain: init, burn-in, then `sweeps` sweeps recording every
/// `thin`-th. Record count is floor(sweeps / thin).
pub fn run_chain(params: &ModelParams, config: &SamplerConfig) -> Result<ChainOutput> {
    if config.thin < 1 {
        return Err(Error::Domain("thin must be >= 1".into()));
    }
    if config.sweeps < 1 {
        return Err(Error::Domain("sweeps must be >= 1".into()));
    }
    let n = params.sites();
    let dim = params.spin_dim() as usize;
    let expected_records = (config.sweeps / config.thin) as usize;
    // refuse to start a run whose records cannot fit comfortably
    if expected_records.saturating_mul(dim + 2) > 200_000_000 {
        return Err(Error::Precondition(format!(
            "run would record {expected_records} sweeps of dimension {dim}; \
             raise thin or lower sweeps"
        )));
    }
    let started = std::time::Instant::now();
    let mut rng = stream(config.seed, config.chain_id);
    let mut state = match config.init {
        InitKind::Uniform => SpinConfiguration::uniform(n, dim, &mut rng)?,
        InitKind::Aligned => SpinConfiguration::aligned(n, dim)?,
    };
    let beta = params.beta();
    let mut records = Vec::with_capacity(expected_records);
    let mut sweeps_since_refresh = 0u64;
    for _ in 0..config.burn_in_sweeps {
        glauber_sweep(&mut state, beta, &mut rng)?;
        sweeps_since_refresh += 1;
        if sweeps_since_refresh >= TOTAL_REFRESH_SWEEPS {
            state.recompute_total();
            sweeps_since_refresh = 0;
        }
    }
    for s in 1..=config.sweeps {
        glauber_sweep(&mut state, beta, &mut rng)?;
        sweeps_since_refresh += 1;
        if sweeps_since_refresh >= TOTAL_REFRESH_SWEEPS {
            state.recompute_total();
            sweeps_since_refresh = 0;
        }
        if s % config.thin == 0 {
            records.push(SweepRecord {
                sweep: s,
                total_spin: state.total_spin().to_vec(),
                energy: state.energy(),
            });
        }
    }
    Ok(ChainOutput {
        params: *params,
        config: *config,
        records,
        final_state: state,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Raw-record CSV dump: header `sweep,s_1,...,s_N,energy`, one row per
/// record, full round-trip float precision.
pub fn write_records_csv<W: std::io::Write>(
    output: &ChainOutput,
    writer: &mut W,
) -> std::io::Result<()> {
    write!(writer, "sweep")?;
    for j in 1..=output.params.spin_dim() {
        write!(writer, ",s_{j}")?;
    }
    writeln!(writer, ",energy")?;
    for rec in &output.records {
        write!(writer, "{}", rec.sweep)?;
        for v in &rec.total_spin {
            write!(writer, ",{v:.16e}")?;
        }
        writeln!(writer, ",{:.16e}", rec.energy)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::specfun::{bessel_ratio, Order};

    /// Pairwise-sum energy, the O(n^2) definition, for cross-checking.
    fn energy_pairwise(config: &SpinConfiguration) -> f64 {
        let n = config.n_sites();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = config
                    .site(i)
                    .iter()
                    .zip(config.site(j))
                    .map(|(a, b)| a * b)
                    .sum();
                acc += dot;
            }
        }
        -acc / (2.0 * n as f64)
    }

    #[test]
    fn aligned_and_flat_construction() {
        let config = SpinConfiguration::aligned(5, 3).unwrap();
        assert_eq!(config.total_spin(), &[5.0, 0.0, 0.0]);
        assert_relative_eq!(config.energy(), -2.5, epsilon = 1e-12);
        // antipodal pair has zero energy
        let pair = SpinConfiguration::from_flat(2, vec![1.0, 0.0, -1.0, 0.0]).unwrap();
        assert_relative_eq!(pair.energy(), 0.0, epsilon = 1e-12);
        assert!(SpinConfiguration::from_flat(2, vec![0.5, 0.0]).is_err());
        assert!(SpinConfiguration::aligned(0, 2).is_err());
        assert!(SpinConfiguration::aligned(5, MAX_SPIN_DIM + 1).is_err());
    }

    #[test]
    fn energy_matches_pairwise_sum() {
        let mut rng = stream(7, 0);
        for dim in [1usize, 2, 3, 4] {
            let config = SpinConfiguration::uniform(40, dim, &mut rng).unwrap();
            assert_relative_eq!(
                config.energy(),
                energy_pairwise(&config),
                epsilon = 1e-9 * 40.0
            );
        }
    }

    #[test]
    fn uniform_init_moments() {
        let mut rng = stream(11, 0);
        let n = 20_000;
        for dim in [2usize, 3] {
            let config = SpinConfiguration::uniform(n, dim, &mut rng).unwrap();
            assert!(config.max_norm_error() < 1e-12);
            // components of the mean spin are O(1/sqrt(n))
            for j in 0..dim {
                let mean = config.total_spin()[j] / n as f64;
                assert!(
                    mean.abs() < 5.0 / (n as f64).sqrt(),
                    "suspicious mean component {mean}"
                );
            }
            // E <s, e_1>^2 = 1/dim
            let m2: f64 = (0..n)
                .map(|i| config.site(i)[0] * config.site(i)[0])
                .sum::<f64>()
                / n as f64;
            assert!((m2 - 1.0 / dim as f64).abs() < 0.02, "m2 = {m2}");
        }
    }

    #[test]
    fn single_site_chain_stays_unit() {
        // n = 1: the sole spin resamples uniformly; energy is constant -1/2
        let params = ModelParams::new(3, 1, 2.0).unwrap();
        let config = SamplerConfig {
            sweeps: 50,
            burn_in_sweeps: 0,
            thin: 1,
            seed: 3,
            ..Default::default()
        };
        let out = run_chain(&params, &config).unwrap();
        for rec in &out.records {
            let norm: f64 = rec.total_spin.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
            assert_relative_eq!(rec.energy, -0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejection_samplers_match_two_spin_closed_forms() {
        // n = 2: E<s_1, s_2> = R_{N/2}(beta/2)
        let beta = 3.0;
        let sweeps = 120_000;
        for dim in [1usize, 2, 3, 4] {
            let mut rng = stream(17, dim as u64);
            let mut config = SpinConfiguration::uniform(2, dim, &mut rng).unwrap();
            let mut acc = 0.0;
            for _ in 0..500 {
                glauber_sweep(&mut config, beta, &mut rng).unwrap();
            }
            for _ in 0..sweeps {
                glauber_sweep(&mut config, beta, &mut rng).unwrap();
                let dot: f64 = config
                    .site(0)
                    .iter()
                    .zip(config.site(1))
                    .map(|(a, b)| a * b)
                    .sum();
                acc += dot;
            }
            let mean = acc / sweeps as f64;
            let expected =
                bessel_ratio(Order::from_half_steps(dim as u32), 0.5 * beta).unwrap();
            // generous 5-sigma-ish band for a correlated series
            assert!(
                (mean - expected).abs() < 0.02,
                "dim {dim}: mean {mean} vs {expected}"
            );
        }
    }

    #[test]
    fn beta_zero_sweep_is_uniform_resampling() {
        let mut rng = stream(23, 0);
        let mut config = SpinConfiguration::aligned(4000, 2).unwrap();
        for _ in 0..3 {
            glauber_sweep(&mut config, 0.0, &mut rng).unwrap();
        }
        // after a few sweeps at beta = 0 the magnetization collapses
        let m = config
            .total_spin()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            / 4000.0;
        assert!(m < 0.1, "residual magnetization {m}");
        assert!(config.max_norm_error() < 1e-12);
    }

    #[test]
    fn cached_total_tracks_recompute() {
        let mut rng = stream(29, 0);
        let mut config = SpinConfiguration::uniform(200, 3, &mut rng).unwrap();
        for _ in 0..500 {
            glauber_sweep(&mut config, 2.5, &mut rng).unwrap();
        }
        assert!(config.total_drift() < 1e-9 * 200.0);
        assert!(config.max_norm_error() < 1e-12);
    }

    #[test]
    fn chains_are_deterministic_and_streams_disjoint() {
        let params = ModelParams::new(2, 64, 1.5).unwrap();
        let config = SamplerConfig {
            sweeps: 40,
            burn_in_sweeps: 10,
            thin: 4,
            seed: 99,
            chain_id: 1,
            init: InitKind::Uniform,
        };
        let a = run_chain(&params, &config).unwrap();
        let b = run_chain(&params, &config).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 10);
        assert_eq!(a.records[0].sweep, 4);
        let other = run_chain(
            &params,
            &SamplerConfig {
                chain_id: 2,
                ..config
            },
        )
        .unwrap();
        assert_ne!(a.records, other.records);
    }

    #[test]
    fn init_choices_agree_after_burn_in() {
        // moderate supercritical chain: |S|/n should match from both inits
        let params = ModelParams::new(2, 512, 3.0).unwrap();
        let magnitude = |init: InitKind, chain: u64| -> f64 {
            let out = run_chain(
                &params,
                &SamplerConfig {
                    sweeps: 1500,
                    burn_in_sweeps: 300,
                    thin: 5,
                    seed: 5,
                    chain_id: chain,
                    init,
                },
            )
            .unwrap();
            let mean: f64 = out
                .records
                .iter()
                .map(|r| r.total_spin.iter().map(|v| v * v).sum::<f64>().sqrt())
                .sum::<f64>()
                / out.records.len() as f64;
            mean / 512.0
        };
        let from_uniform = magnitude(InitKind::Uniform, 0);
        let from_aligned = magnitude(InitKind::Aligned, 1);
        assert!(
            (from_uniform - from_aligned).abs() < 0.02,
            "uniform {from_uniform} vs aligned {from_aligned}"
        );
    }

    #[test]
    fn invalid_run_configs_are_rejected() {
        let params = ModelParams::new(2, 8, 1.0).unwrap();
        assert!(run_chain(
            &params,
            &SamplerConfig {
                thin: 0,
                ..Default::default()
            }
        )
        .is_err());
        let mut rng = stream(0, 0);
        let mut config = SpinConfiguration::aligned(4, 2).unwrap();
        assert!(conditional_update(&mut config, 4, 1.0, &mut rng).is_err());
        assert!(conditional_update(&mut config, 0, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn csv_dump_shape() {
        let params = ModelParams::new(3, 16, 1.0).unwrap();
        let out = run_chain(
            &params,
            &SamplerConfig {
                sweeps: 10,
                burn_in_sweeps: 0,
                thin: 2,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_records_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sweep,s_1,s_2,s_3,energy");
        assert_eq!(lines.count(), 5);
    }
}
