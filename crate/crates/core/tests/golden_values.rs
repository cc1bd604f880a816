//! Frozen oracle outputs. Each entry pins a value produced by a named
//! slow oracle at recorded parameters; the test recomputes the oracle
//! (anti-drift) and, where one exists, checks the fast path against the
//! frozen number. Regeneration is deliberate only: the ignored test at
//! the bottom rewrites the data file.

use onspin::oracle;
use onspin::specfun::{self, Order};
use onspin::theory;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const GOLDEN: &str = include_str!("data/golden.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GoldenEntry {
    name: String,
    params: BTreeMap<String, f64>,
    value: f64,
    oracle: String,
    tolerance: f64,
}

fn param(entry: &GoldenEntry, key: &str) -> f64 {
    *entry
        .params
        .get(key)
        .unwrap_or_else(|| panic!("{}: missing param {key}", entry.name))
}

/// Recomputes the oracle value for an entry.
fn run_oracle(entry: &GoldenEntry) -> f64 {
    match entry.oracle.as_str() {
        "bessel_series" => {
            let nu = Order::from_half_steps(param(entry, "nu_half_steps") as u32);
            oracle::bessel_series(nu, param(entry, "x"), 1e-15).unwrap()
        }
        "curie_weiss_exact" => {
            oracle::curie_weiss_exact(param(entry, "n") as usize, param(entry, "beta"))
                .unwrap()
                .mean_s_squared
        }
        "xy_quadrature" => {
            oracle::xy_quadrature(
                param(entry, "n") as usize,
                param(entry, "beta"),
                param(entry, "m") as usize,
            )
            .unwrap()
            .mean_s_squared
        }
        "phi_grid_minimize_argmin" => grid_min(entry).argmin,
        "phi_grid_minimize_value" => grid_min(entry).min_value,
        "critical_moment_oracle" => {
            oracle::critical_moment_oracle(param(entry, "spin_dim") as u32, param(entry, "j") as u32)
                .unwrap()
        }
        other => panic!("{}: unknown oracle {other}", entry.name),
    }
}

fn grid_min(entry: &GoldenEntry) -> oracle::GridMinimum {
    oracle::phi_grid_minimize(
        param(entry, "spin_dim") as u32,
        param(entry, "beta"),
        param(entry, "r_max"),
        param(entry, "steps") as usize,
    )
    .unwrap()
}

/// Fast-path value for entries that have an independent fast route.
fn run_fast_path(entry: &GoldenEntry) -> Option<f64> {
    match entry.oracle.as_str() {
        "bessel_series" => {
            let nu = Order::from_half_steps(param(entry, "nu_half_steps") as u32);
            Some(specfun::bessel_i(nu, param(entry, "x")).unwrap())
        }
        "phi_grid_minimize_argmin" => Some(
            theory::g_inverse(param(entry, "spin_dim") as u32, param(entry, "beta")).unwrap(),
        ),
        "phi_grid_minimize_value" => Some(
            theory::free_energy(param(entry, "spin_dim") as u32, param(entry, "beta")).unwrap(),
        ),
        "critical_moment_oracle" if param(entry, "j") == 2.0 => {
            Some(theory::critical_second_moment(param(entry, "spin_dim") as u32).unwrap())
        }
        _ => None,
    }
}

fn within(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= tol * scale
}

fn entries() -> Vec<GoldenEntry> {
    serde_json::from_str(GOLDEN).expect("golden.json must parse")
}

#[test]
fn golden_file_is_populated() {
    let entries = entries();
    assert!(
        entries.len() >= 12,
        "expected the committed golden set, found {}",
        entries.len()
    );
}

#[test]
fn oracles_reproduce_frozen_values() {
    for entry in entries() {
        let fresh = run_oracle(&entry);
        assert!(
            within(fresh, entry.value, entry.tolerance),
            "{}: oracle drifted, frozen {} vs fresh {}",
            entry.name,
            entry.value,
            fresh
        );
    }
}

#[test]
fn fast_paths_match_frozen_values() {
    let mut checked = 0;
    for entry in entries() {
        if let Some(fast) = run_fast_path(&entry) {
            assert!(
                within(fast, entry.value, entry.tolerance),
                "{}: fast path {} vs frozen {}",
                entry.name,
                fast,
                entry.value
            );
            checked += 1;
        }
    }
    assert!(checked >= 9, "only {checked} fast-path comparisons ran");
}

/// Writes a fresh golden file. Run deliberately:
/// cargo test -p onspin --test golden_values regenerate -- --ignored
#[test]
#[ignore]
fn regenerate() {
    let mut out = Vec::new();
    let mut push = |name: &str, oracle: &str, params: &[(&str, f64)], tolerance: f64| {
        let entry = GoldenEntry {
            name: name.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value: 0.0,
            oracle: oracle.into(),
            tolerance,
        };
        let value = run_oracle(&entry);
        out.push(GoldenEntry { value, ..entry });
    };

    push("bessel_i0_at_10", "bessel_series", &[("nu_half_steps", 0.0), ("x", 10.0)], 1e-12);
    push("bessel_i2_at_1", "bessel_series", &[("nu_half_steps", 4.0), ("x", 1.0)], 1e-12);
    push("bessel_i_half_at_2", "bessel_series", &[("nu_half_steps", 1.0), ("x", 2.0)], 1e-12);
    push("bessel_i3_at_30", "bessel_series", &[("nu_half_steps", 6.0), ("x", 30.0)], 1e-12);
    push(
        "curie_weiss_s2_n10_beta_0p5",
        "curie_weiss_exact",
        &[("n", 10.0), ("beta", 0.5)],
        1e-12,
    );
    push(
        "curie_weiss_s2_n12_beta_1p5",
        "curie_weiss_exact",
        &[("n", 12.0), ("beta", 1.5)],
        1e-12,
    );
    push(
        "xy_s2_n3_beta1",
        "xy_quadrature",
        &[("n", 3.0), ("beta", 1.0), ("m", 256.0)],
        1e-11,
    );
    push(
        "xy_s2_n4_beta2",
        "xy_quadrature",
        &[("n", 4.0), ("beta", 2.0), ("m", 128.0)],
        1e-10,
    );
    for (spin_dim, beta) in [(2.0, 3.0), (3.0, 4.0), (4.0, 5.0)] {
        let params = [
            ("spin_dim", spin_dim),
            ("beta", beta),
            ("r_max", 10.0),
            ("steps", 200_000.0),
        ];
        push(
            &format!("rate_minimizer_n{spin_dim}_beta{beta}"),
            "phi_grid_minimize_argmin",
            &params,
            1e-8,
        );
        push(
            &format!("free_energy_min_n{spin_dim}_beta{beta}"),
            "phi_grid_minimize_value",
            &params,
            1e-9,
        );
    }
    for spin_dim in 1..=4 {
        push(
            &format!("critical_m2_n{spin_dim}"),
            "critical_moment_oracle",
            &[("spin_dim", spin_dim as f64), ("j", 2.0)],
            1e-10,
        );
    }
    push(
        "critical_m1_n2",
        "critical_moment_oracle",
        &[("spin_dim", 2.0), ("j", 1.0)],
        1e-10,
    );

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden.json");
    let json = serde_json::to_string_pretty(&out).unwrap();
    std::fs::write(path, json + "\n").unwrap();
}
