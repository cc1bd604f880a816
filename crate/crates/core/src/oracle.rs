//! Independent slow paths used to pin golden values and validate the
//! fast implementations: defining power series for the Bessel
//! functions, exact Curie-Weiss enumeration, tensor quadrature for tiny
//! XY systems, direct grid minimization of the rate functional, and
//! quadrature moments of the critical law. None of these call the fast
//! path they are meant to check.

use crate::specfun::Order;
use crate::theory;
use crate::{Error, Result};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Gamma at integer or half-integer argument two_x/2, written out from
/// factorials on purpose: the oracle must not share code with the fast
/// path's log-gamma.
fn gamma_half(two_x: u32) -> f64 {
    debug_assert!(two_x >= 1);
    if two_x % 2 == 0 {
        let mut acc = 1.0;
        for k in 2..two_x / 2 {
            acc *= k as f64;
        }
        acc
    } else {
        // Gamma(j + 1/2) = (2j-1)!! sqrt(pi) / 2^j
        let j = (two_x - 1) / 2;
        let mut acc = std::f64::consts::PI.sqrt();
        for i in 1..=j {
            acc *= (2 * i - 1) as f64 / 2.0;
        }
        acc
    }
}

/// Defining power series of the modified Bessel function, summed until
/// the term drops below tol * partial_sum.
///
/// Refuses x > 60: with several hundred terms the series stays
/// well-conditioned there, and beyond it the asymptotic regime is the
/// honest reference instead.
pub fn bessel_series(nu: Order, x: f64, tol: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("need finite x >= 0, got {x}")));
    }
    if x > 60.0 {
        return Err(Error::Refused(format!(
            "series oracle is limited to x <= 60, got {x}"
        )));
    }
    if !(tol >= 1e-15) || !tol.is_finite() {
        return Err(Error::Precondition(format!(
            "series tolerance must be >= 1e-15, got {tol}"
        )));
    }
    let v = nu.value();
    if x == 0.0 {
        return Ok(if v == 0.0 { 1.0 } else { 0.0 });
    }
    let half = 0.5 * x;
    // leading term (x/2)^nu / Gamma(nu + 1)
    let mut term = half.powf(v) / gamma_half(nu.half_steps() + 2);
    let mut sum = term;
    let q = half * half;
    for m in 0..1000 {
        term *= q / ((m as f64 + 1.0) * (m as f64 + 1.0 + v));
        sum += term;
        if term < tol * sum {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!(
        "series did not meet tol {tol} at nu = {nu}, x = {x}"
    )))
}

/// Exact Curie-Weiss (N = 1) finite-n summary from full enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct CurieWeissExact {
    /// Z = sum over all 2^n sign configurations of e^{beta S^2/(2n)}.
    pub partition: f64,
    pub mean_s_squared: f64,
    /// (s, P(S_n = s)) for s = -n, -n+2, ..., n.
    pub distribution: Vec<(i64, f64)>,
}

impl CurieWeissExact {
    /// E[sigma_1 sigma_2], from E S^2 = n + n(n-1) E[sigma_1 sigma_2].
    pub fn pair_correlation(&self) -> f64 {
        let n = self.distribution.len() as f64 - 1.0;
        (self.mean_s_squared - n) / (n * (n - 1.0))
    }
}

/// Walks all 2^n states of the n-site Curie-Weiss model. The Gibbs
/// weight depends only on the popcount, so weights are looked up from a
/// per-popcount table, but the state loop itself is the ground truth.
pub fn curie_weiss_exact(n: usize, beta: f64) -> Result<CurieWeissExact> {
    if n < 1 {
        return Err(Error::Domain("need at least one site".into()));
    }
    if n > 20 {
        return Err(Error::Refused(format!(
            "exact enumeration is limited to n <= 20, got {n}"
        )));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::Domain(format!(
            "inverse temperature must be finite and >= 0, got {beta}"
        )));
    }
    let weight: Vec<f64> = (0..=n)
        .map(|k| {
            let s = (n as f64) - 2.0 * k as f64;
            (beta * s * s / (2.0 * n as f64)).exp()
        })
        .collect();
    let mut counts = vec![0u64; n + 1];
    for state in 0u64..(1u64 << n) {
        counts[state.count_ones() as usize] += 1;
    }
    let mut partition = 0.0;
    let mut second = 0.0;
    for k in 0..=n {
        let w = counts[k] as f64 * weight[k];
        let s = n as f64 - 2.0 * k as f64;
        partition += w;
        second += w * s * s;
    }
    let distribution = (0..=n)
        .map(|k| {
            let s = n as i64 - 2 * k as i64;
            (s, counts[k] as f64 * weight[k] / partition)
        })
        .collect();
    Ok(CurieWeissExact {
        partition,
        mean_s_squared: second / partition,
        distribution,
    })
}

/// Quadrature moments of a tiny XY (N = 2) system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyQuadrature {
    pub mean_s_squared: f64,
    /// E<sigma_1, sigma_2> = E cos(theta_1 - theta_2).
    pub pair_correlation: f64,
}

/// Tensor-product quadrature over (theta_2, ..., theta_n) with theta_1
/// pinned to 0 by rotational invariance. The uniform grid on a periodic
/// smooth integrand converges spectrally in m.
pub fn xy_quadrature(n: usize, beta: f64, m: usize) -> Result<XyQuadrature> {
    if n > 4 {
        return Err(Error::Refused(format!(
            "quadrature cost grows as m^(n-1); refusing n = {n} > 4"
        )));
    }
    if n < 2 {
        return Err(Error::Domain("pair correlation needs n >= 2".into()));
    }
    if m < 64 {
        return Err(Error::Precondition(format!(
            "need at least 64 grid points per angle, got {m}"
        )));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::Domain(format!(
            "inverse temperature must be finite and >= 0, got {beta}"
        )));
    }
    let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = (0..m)
        .map(|t| {
            let theta = 2.0 * std::f64::consts::PI * t as f64 / m as f64;
            (theta.cos(), theta.sin())
        })
        .unzip();
    let free = n - 1;
    let mut idx = vec![0usize; free];
    let mut z = 0.0;
    let mut s2_acc = 0.0;
    let mut pair_acc = 0.0;
    let scale = beta / (2.0 * n as f64);
    loop {
        let mut cx = 1.0; // theta_1 = 0
        let mut sx = 0.0;
        for &t in &idx {
            cx += cos_t[t];
            sx += sin_t[t];
        }
        let s2 = cx * cx + sx * sx;
        let w = (scale * s2).exp();
        z += w;
        s2_acc += w * s2;
        pair_acc += w * cos_t[idx[0]];
        // odometer over the free angles
        let mut digit = 0;
        loop {
            if digit == free {
                return Ok(XyQuadrature {
                    mean_s_squared: s2_acc / z,
                    pair_correlation: pair_acc / z,
                });
            }
            idx[digit] += 1;
            if idx[digit] < m {
                break;
            }
            idx[digit] = 0;
            digit += 1;
        }
    }
}

/// Minimizer of the rate functional found by brute force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMinimum {
    pub argmin: f64,
    pub min_value: f64,
}

/// Scans the rate functional on a uniform grid, refines the best cell
/// by golden section, then polishes with a finite-difference Newton
/// step. Deliberately ignorant of the fixed-point equation, so it cross
/// checks the root-finding route to the free energy.
///
/// The Newton polish matters: the functional is flat to machine
/// precision within ~1e-7 of its minimum, which stalls golden section
/// alone well short of the 1e-8 agreement this oracle is used for.
pub fn phi_grid_minimize(
    spin_dim: u32,
    beta: f64,
    r_max: f64,
    steps: usize,
) -> Result<GridMinimum> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Precondition(format!(
            "inverse temperature must be finite and >= 0, got {beta}"
        )));
    }
    if !(r_max >= 10.0) {
        return Err(Error::Precondition(format!(
            "grid must extend to r_max >= 10, got {r_max}"
        )));
    }
    if steps < 100_000 {
        return Err(Error::Precondition(format!(
            "grid needs at least 1e5 steps, got {steps}"
        )));
    }
    let phi = |r: f64| theory::phi_functional(spin_dim, beta, r);
    let h = r_max / steps as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    for i in 0..=steps {
        let v = phi(i as f64 * h)?;
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut lo = if best_i == 0 { 0.0 } else { (best_i - 1) as f64 * h };
    let mut hi = ((best_i + 1) as f64 * h).min(r_max);
    // golden section to an interval of width 1e-10
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = phi(x1)?;
    let mut f2 = phi(x2)?;
    while hi - lo > 1e-10 {
        // ties shrink leftward so machine-flat basins resolve to their
        // left edge (exact for the subcritical minimum at r = 0)
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = phi(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = phi(x2)?;
        }
    }
    let mut r = 0.5 * (lo + hi);
    if r > 1e-6 {
        let step = 1e-4 * r.max(1.0);
        for _ in 0..3 {
            if r <= step {
                break;
            }
            let fm = phi(r - step)?;
            let f0 = phi(r)?;
            let fp = phi(r + step)?;
            let d1 = (fp - fm) / (2.0 * step);
            let d2 = (fp - 2.0 * f0 + fm) / (step * step);
            if d2 <= 0.0 {
                break;
            }
            let next = r - d1 / d2;
            if !next.is_finite() || (next - r).abs() > h {
                break;
            }
            r = next.max(0.0);
        }
    }
    Ok(GridMinimum {
        argmin: r,
        min_value: phi(r)?,
    })
}

/// j-th moment of the critical limit law by quadrature, computing its
/// own normalizer rather than trusting the tabulated one. Uses the
/// substitution t = u^2, which makes the integrand smooth down to u = 0
/// for every N >= 1.
pub fn critical_moment_oracle(spin_dim: u32, j: u32) -> Result<f64> {
    if spin_dim < 1 {
        return Err(Error::Domain("spin dimension must be >= 1".into()));
    }
    if !(1..=4).contains(&j) {
        return Err(Error::Precondition(format!(
            "moment order must be in 1..=4, got {j}"
        )));
    }
    let nf = spin_dim as f64;
    let k = 1.0 / (nf * nf * (4.0 * nf + 8.0));
    // integrand of moment q: 2 u^(2q + N - 1) e^{-k u^4}
    let u_max = (50.0 / k).powf(0.25);
    let integral = |q: u32| -> Result<f64> {
        let power = (2 * q + spin_dim - 1) as f64;
        let f = move |u: f64| 2.0 * u.powf(power) * (-k * u * u * u * u).exp();
        let u_peak = (power / (4.0 * k)).powf(0.25).max(1e-3);
        let peak = f(u_peak);
        crate::quad::adaptive(f, 0.0, u_max, 1e-13 * peak * u_max)
    };
    Ok(integral(j)? / integral(0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceKind {
    Absolute,
    Relative,
}

/// One oracle-vs-fast-path comparison. Both values are kept verbatim;
/// the verdict is always derived from them, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub oracle_value: f64,
    pub fast_value: f64,
    pub tolerance: f64,
    pub tolerance_kind: ToleranceKind,
}

impl OracleReport {
    pub fn new(
        name: impl Into<String>,
        params: Vec<(String, f64)>,
        oracle_value: f64,
        fast_value: f64,
        tolerance: f64,
        tolerance_kind: ToleranceKind,
    ) -> Self {
        OracleReport {
            name: name.into(),
            params,
            oracle_value,
            fast_value,
            tolerance,
            tolerance_kind,
        }
    }

    pub fn abs_discrepancy(&self) -> f64 {
        (self.oracle_value - self.fast_value).abs()
    }

    pub fn rel_discrepancy(&self) -> f64 {
        let abs = self.abs_discrepancy();
        if self.oracle_value == 0.0 {
            if abs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            abs / self.oracle_value.abs()
        }
    }

    pub fn pass(&self) -> bool {
        let d = match self.tolerance_kind {
            ToleranceKind::Absolute => self.abs_discrepancy(),
            ToleranceKind::Relative => self.rel_discrepancy(),
        };
        d.is_finite() && d <= self.tolerance
    }
}

impl Serialize for OracleReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("OracleReport", 9)?;
        s.serialize_field("name", &self.name)?;
        s.serialize_field("params", &self.params)?;
        s.serialize_field("oracle_value", &self.oracle_value)?;
        s.serialize_field("fast_value", &self.fast_value)?;
        s.serialize_field("abs_discrepancy", &self.abs_discrepancy())?;
        s.serialize_field("rel_discrepancy", &self.rel_discrepancy())?;
        s.serialize_field("tolerance", &self.tolerance)?;
        s.serialize_field(
            "tolerance_kind",
            match self.tolerance_kind {
                ToleranceKind::Absolute => "absolute",
                ToleranceKind::Relative => "relative",
            },
        )?;
        s.serialize_field("pass", &self.pass())?;
        s.end()
    }
}
