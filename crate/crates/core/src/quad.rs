//! Adaptive Gauss-Kronrod quadrature (7-15 pair) with interval
//! bisection. Internal utility: callers are responsible for mapping
//! improper integrals onto finite, smooth integrands first.

use crate::{Error, Result};

/// Kronrod abscissae on [0, 1] side of the symmetric 15-point rule;
/// odd indices are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Kronrod-15 / Gauss-7 evaluation on [a, b]; returns (kronrod,
/// |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut kronrod = WGK[7] * f_center;
    let mut gauss = WG[3] * f_center;
    for j in 0..7 {
        let offset = half * XGK[j];
        let pair = f(center - offset) + f(center + offset);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

/// Integrates f over [a, b] to absolute tolerance `abs_tol` by
/// bisecting the worst intervals first (simple stack, deepest-first;
/// tolerance is split proportionally to interval length).
pub(crate) fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || !(abs_tol > 0.0) {
        return Err(Error::Domain(format!(
            "adaptive quadrature needs finite bounds and positive tolerance, got [{a}, {b}], tol {abs_tol}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let span = (b - a).abs();
    let mut total = 0.0;
    let mut stack = vec![(a, b)];
    let mut segments = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        segments += 1;
        if segments > 100_000 {
            return Err(Error::Convergence(format!(
                "quadrature on [{a}, {b}] exceeded its subdivision budget"
            )));
        }
        let (value, err) = gk15(&f, lo, hi);
        let local_tol = abs_tol * ((hi - lo).abs() / span).max(1e-14);
        if err <= local_tol || (hi - lo).abs() < 1e-14 * span {
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid));
            stack.push((mid, hi));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let v = adaptive(|x| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_integral() {
        let v = adaptive(|x| (-x * x).exp(), -8.0, 8.0, 1e-13).unwrap();
        assert_relative_eq!(v, PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn oscillatory() {
        let v = adaptive(|x| (10.0 * x).sin(), 0.0, PI, 1e-13).unwrap();
        assert_relative_eq!(v, (1.0 - (10.0 * PI).cos()) / 10.0, epsilon = 1e-11);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(adaptive(|x| x, 0.0, f64::INFINITY, 1e-10).is_err());
        assert!(adaptive(|x| x, 0.0, 1.0, 0.0).is_err());
    }
}
