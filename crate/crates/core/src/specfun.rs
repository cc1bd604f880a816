//! Modified Bessel functions `I_nu` restricted to orders that are
//! multiples of 1/2, which is all the O(N) theory ever needs: the
//! formulas use `I_{N/2}` and `I_{N/2-1}` for integer spin dimension N.
//!
//! The ratio `R_nu(x) = I_nu(x) / I_{nu-1}(x)` is the workhorse and is
//! computed by a continued fraction; it never forms the two Bessel
//! values separately, so it stays stable where `I_nu` itself overflows.

use crate::{Error, Result};
use std::f64::consts::PI;

/// Natural log of f64::MAX; exp() overflows above this.
const LN_F64_MAX: f64 = 709.782712893384;
/// Series / continued-fraction crossover: series for `x <= nu + 10`.
const SERIES_CROSSOVER_OFFSET: f64 = 10.0;
/// Anchor evaluation switches from series to asymptotic expansion here.
const ANCHOR_ASYMPTOTIC_MIN_X: f64 = 35.0;
const MAX_SERIES_TERMS: usize = 4000;
const MAX_CF_ITER: usize = 200_000;

/// Bessel order restricted to nonnegative multiples of 1/2, stored in
/// half steps so arithmetic on orders is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Order {
    half_steps: u32,
}

impl Order {
    /// Order `half_steps / 2`.
    pub const fn from_half_steps(half_steps: u32) -> Self {
        Order { half_steps }
    }

    /// Validates that `nu` is a nonnegative multiple of 1/2.
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::Domain(format!(
                "order must be a nonnegative multiple of 1/2, got {nu}"
            )));
        }
        let doubled = 2.0 * nu;
        if (doubled - doubled.round()).abs() > 1e-9 || doubled > u32::MAX as f64 {
            return Err(Error::Domain(format!(
                "order must be a nonnegative multiple of 1/2, got {nu}"
            )));
        }
        Ok(Order {
            half_steps: doubled.round() as u32,
        })
    }

    pub fn value(self) -> f64 {
        self.half_steps as f64 / 2.0
    }

    pub fn half_steps(self) -> u32 {
        self.half_steps
    }

    pub fn is_integer(self) -> bool {
        self.half_steps % 2 == 0
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.half_steps / 2)
        } else {
            write!(f, "{}/2", self.half_steps)
        }
    }
}

/// ln Gamma(two_x / 2) for two_x >= 1, exact up to rounding: integer
/// arguments reduce to factorials, half-integer ones to the double
/// factorial times sqrt(pi).
pub(crate) fn ln_gamma_half(two_x: u32) -> f64 {
    assert!(two_x >= 1, "ln_gamma_half needs a positive half-integer");
    if two_x % 2 == 0 {
        // Gamma(k) = (k-1)!
        let k = two_x / 2;
        (2..k).map(|j| (j as f64).ln()).sum()
    } else {
        // Gamma(m + 1/2) = sqrt(pi) * prod_{j=1..m} (j - 1/2)
        let m = two_x / 2;
        0.5 * PI.ln() + (1..=m).map(|j| (j as f64 - 0.5).ln()).sum::<f64>()
    }
}

/// Gamma(two_x / 2) by direct product; overflows to +inf for large
/// arguments, callers fall back to the log form.
fn gamma_half(two_x: u32) -> f64 {
    if two_x % 2 == 0 {
        let k = two_x / 2;
        (2..k).map(|j| j as f64).product()
    } else {
        let m = two_x / 2;
        PI.sqrt() * (1..=m).map(|j| j as f64 - 0.5).product::<f64>()
    }
}

/// Defining series with the leading term factored out:
/// I_nu(x) = (x/2)^nu / Gamma(nu+1) * (1 + T), T = sum_{m>=1} c_m.
/// All terms are positive, so there is no cancellation. Returning the
/// tail T rather than 1 + T keeps ln I accurate via ln_1p even where
/// T is below machine epsilon.
fn series_tail_sum(nu: f64, x: f64) -> Result<f64> {
    let q = (0.5 * x) * (0.5 * x);
    let mut c = 1.0;
    let mut t = 0.0;
    for m in 1..=MAX_SERIES_TERMS {
        let m = m as f64;
        c *= q / (m * (m + nu));
        t += c;
        if c < (1.0 + t) * 5e-17 && m * (m + nu) > q {
            return Ok(t);
        }
    }
    Err(Error::Convergence(format!(
        "Bessel series did not settle for nu={nu}, x={x}"
    )))
}

/// Continued fraction for R_nu(x) = I_nu(x)/I_{nu-1}(x) (modified
/// Lentz). Valid for nu >= 1/2, x >= 0; needs O(x) iterations for
/// large x, so huge arguments are capped rather than left spinning.
fn ratio_cf(nu: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    // R_nu = 1 / (b_0 + 1/(b_1 + 1/(b_2 + ...))), b_k = 2(nu+k)/x.
    let tiny = 1e-300;
    let mut f: f64 = tiny;
    let mut c: f64 = f;
    let mut d: f64 = 0.0;
    for k in 0..MAX_CF_ITER {
        let b = 2.0 * (nu + k as f64) / x;
        d = b + d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + 1.0 / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            // R_nu < 1 holds exactly; saturate the last-ulp rounding
            // excess that appears once the true value is within f64
            // epsilon of 1.
            return Ok(f.min(1.0));
        }
    }
    Err(Error::Convergence(format!(
        "Bessel ratio continued fraction stalled for nu={nu}, x={x}"
    )))
}

/// ln I_a(x) for an anchor order a in {0, 1/2} and x above the series
/// crossover. Series up to moderate x, then the large-argument
/// expansion I_a(x) ~ e^x/sqrt(2 pi x) * sum_k t_k, whose optimal
/// truncation error (~e^{-2x}) is far below f64 resolution there.
fn log_anchor(two_a: u32, x: f64) -> Result<f64> {
    debug_assert!(two_a <= 1);
    let a = two_a as f64 / 2.0;
    if x <= ANCHOR_ASYMPTOTIC_MIN_X {
        let tail = series_tail_sum(a, x)?;
        return Ok(a * (0.5 * x).ln() - ln_gamma_half(two_a + 2) + tail.ln_1p());
    }
    let mu = 4.0 * a * a;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=40u32 {
        let k = k as f64;
        term *= -(mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * x * k);
        let prev = sum;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() || sum == prev {
            break;
        }
    }
    Ok(x - 0.5 * (2.0 * PI * x).ln() + sum.ln())
}

/// ln I_nu(x). Well-defined for every x >= 0 (returns -inf at x = 0
/// for positive orders); this is the overflow-safe primitive the
/// thermodynamic formulas build on.
pub fn log_bessel_i(nu: Order, x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "log_bessel_i needs finite x >= 0, got {x}"
        )));
    }
    let v = nu.value();
    if x == 0.0 {
        return Ok(if nu.half_steps == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        });
    }
    if x <= v + SERIES_CROSSOVER_OFFSET {
        let tail = series_tail_sum(v, x)?;
        return Ok(v * (0.5 * x).ln() - ln_gamma_half(nu.half_steps + 2) + tail.ln_1p());
    }
    // Anchor at the fractional part of the order, then climb with the
    // ratio chain I_nu = I_a * prod R_k: one continued fraction at the
    // top order and a backward recurrence R_{k-1} dependent only on
    // R_k, which is the stable direction.
    let two_a = nu.half_steps % 2;
    let steps = (nu.half_steps - two_a) / 2;
    let mut log = log_anchor(two_a, x)?;
    if steps > 0 {
        let mut r = ratio_cf(v, x)?;
        let mut log_chain = r.ln();
        for s in (1..steps).rev() {
            // order of this link: a + s
            let k = two_a as f64 / 2.0 + s as f64;
            r = 1.0 / (2.0 * k / x + r);
            log_chain += r.ln();
        }
        log += log_chain;
    }
    Ok(log)
}

/// I_nu(x) in linear scale. The series region sums directly; elsewhere
/// the log form is exponentiated, with an explicit range error instead
/// of a silent overflow to infinity.
pub fn bessel_i(nu: Order, x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "bessel_i needs finite x >= 0, got {x}"
        )));
    }
    let v = nu.value();
    if x == 0.0 {
        return Ok(if nu.half_steps == 0 { 1.0 } else { 0.0 });
    }
    if x <= v + SERIES_CROSSOVER_OFFSET {
        let lead = (0.5 * x).powf(v) / gamma_half(nu.half_steps + 2);
        if lead.is_finite() && lead > 0.0 {
            return Ok(lead * (1.0 + series_tail_sum(v, x)?));
        }
        // extreme order: fall through to the log form
    }
    let log = log_bessel_i(nu, x)?;
    if log > LN_F64_MAX {
        return Err(Error::Range(format!(
            "I_{nu}({x}) exceeds f64 range (ln = {log:.3})"
        )));
    }
    Ok(log.exp())
}

/// R_nu(x) = I_nu(x) / I_{nu-1}(x) for nu >= 1/2. Strictly increasing
/// in x, maps [0, inf) into [0, 1).
pub fn bessel_ratio(nu: Order, x: f64) -> Result<f64> {
    if nu.half_steps < 1 {
        return Err(Error::Domain(format!(
            "bessel_ratio needs order >= 1/2, got {}",
            nu.value()
        )));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "bessel_ratio needs finite x >= 0, got {x}"
        )));
    }
    ratio_cf(nu.value(), x)
}

/// d/dx R_nu(x) through the Riccati identity
/// R' = 1 - (2 nu - 1) R / x - R^2, which needs x > 0.
pub fn bessel_ratio_derivative(nu: Order, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "bessel_ratio_derivative needs finite x > 0, got {x}"
        )));
    }
    let r = bessel_ratio(nu, x)?;
    Ok(1.0 - (2.0 * nu.value() - 1.0) / x * r - r * r)
}

/// Surface area A_N = 2 pi^{N/2} / Gamma(N/2) of the unit sphere
/// S^{N-1} in R^N; A_1 = 2 counts the two points of S^0.
pub fn sphere_area(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain(format!("sphere_area needs N >= 1, got {n}")));
    }
    Ok((2.0_f64.ln() + 0.5 * n as f64 * PI.ln() - ln_gamma_half(n)).exp())
}

/// Normalization constant B_N of the radial free-energy functional:
/// the odd-index double factorial for even N, and
/// 2^{N/2-1} Gamma((N-1)/2) / sqrt(pi) for odd N.
pub fn b_constant(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("b_constant needs N >= 2, got {n}")));
    }
    if n % 2 == 0 {
        let mut product = 1.0;
        for k in 0..(n / 2) {
            product *= (2.0 * k as f64 - 1.0).abs();
        }
        Ok(product)
    } else {
        Ok(((0.5 * n as f64 - 1.0) * 2.0_f64.ln() + ln_gamma_half(n - 1) - 0.5 * PI.ln()).exp())
    }
}
