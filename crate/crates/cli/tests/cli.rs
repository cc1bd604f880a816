//! Black-box tests of the binary: CSV schemas, JSON summaries,
//! manifests, and the 0/1/2 exit-code convention.

use std::path::Path;
use std::process::Command;

fn onspin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_onspin"))
}

/// Parses our CSV output: header line plus rows of optionally empty
/// float fields.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let body = std::fs::read_to_string(path).expect("read csv");
    let mut lines = body.lines();
    let header = lines
        .next()
        .expect("header")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|line| {
            line.split(',')
                .map(|f| {
                    if f.is_empty() {
                        None
                    } else {
                        Some(f.parse::<f64>().expect("float field"))
                    }
                })
                .collect()
        })
        .collect();
    (header, rows)
}

fn read_manifest(out: &Path) -> serde_json::Value {
    let mut name = out.file_name().unwrap().to_os_string();
    name.push(".manifest.json");
    let path = out.with_file_name(name);
    serde_json::from_str(&std::fs::read_to_string(path).expect("read manifest")).expect("json")
}

#[test]
fn theory_curve_schema_and_transition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let status = onspin()
        .args([
            "theory-curve",
            "--spin-dim",
            "2",
            "--beta-min",
            "0",
            "--beta-max",
            "6",
            "--steps",
            "13",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let (header, rows) = read_csv(&out);
    assert_eq!(
        header,
        ["beta", "r_star", "free_energy", "magnetization", "variance_v"]
    );
    assert_eq!(rows.len(), 13);
    for row in &rows {
        let beta = row[0].unwrap();
        if beta <= 2.0 {
            // at and below the transition everything is pinned to zero
            // and the variance column is empty
            assert_eq!(row[1], Some(0.0), "r_star at beta={beta}");
            assert_eq!(row[2], Some(0.0), "free energy at beta={beta}");
            assert_eq!(row[3], Some(0.0), "magnetization at beta={beta}");
            assert_eq!(row[4], None, "variance at beta={beta}");
        } else {
            assert!(row[1].unwrap() > 0.0);
            assert!(row[2].unwrap() < 0.0);
            assert!(row[3].unwrap() > 0.0);
            assert!(row[4].unwrap() > 0.0, "variance populated above the transition");
        }
    }
    // magnetization is nondecreasing across the whole grid
    for pair in rows.windows(2) {
        assert!(pair[1][3].unwrap() >= pair[0][3].unwrap());
    }
    let manifest = read_manifest(&out);
    assert_eq!(manifest["subcommand"], "theory-curve");
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["outputs"][0], out.display().to_string());
}

#[test]
fn theory_curve_sign_spin_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    // grid chosen so beta = 2 is a grid point
    let status = onspin()
        .args([
            "theory-curve",
            "--spin-dim",
            "1",
            "--beta-min",
            "1",
            "--beta-max",
            "3",
            "--steps",
            "3",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let (_, rows) = read_csv(&out);
    let mag = rows[1][3].unwrap();
    // independent fixed-point solve of m = tanh(2 m) by bisection
    let mut lo = 0.5f64;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (2.0 * mid).tanh() - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fixed_point = 0.5 * (lo + hi);
    assert!(
        (mag - fixed_point).abs() < 1e-9,
        "magnetization {mag} vs fixed point {fixed_point}"
    );
}

#[test]
fn theory_rate_minimum_locations() {
    let dir = tempfile::tempdir().unwrap();
    let argmin_of = |beta: &str, steps: &str, normalized: bool| -> (f64, f64) {
        let out = dir.path().join(format!("rate_{beta}_{normalized}.csv"));
        let mut cmd = onspin();
        cmd.args([
            "theory-rate",
            "--spin-dim",
            "2",
            "--beta",
            beta,
            "--r-max",
            "6",
            "--steps",
            steps,
        ]);
        if normalized {
            cmd.arg("--normalized");
        }
        let status = cmd.arg("--out").arg(&out).status().unwrap();
        assert!(status.success());
        let (header, rows) = read_csv(&out);
        assert_eq!(header, ["r", "phi"]);
        let best = rows
            .iter()
            .min_by(|a, b| a[1].unwrap().total_cmp(&b[1].unwrap()))
            .unwrap();
        (best[0].unwrap(), best[1].unwrap())
    };
    let step = 6.0 / 2000.0;
    // condensed phase: minimum away from zero, at the closed-form radius
    let (r_star, _) = argmin_of("3", "2001", false);
    assert!((r_star - 2.1724761528790593).abs() <= step);
    // normalized curve has minimum value zero; the grid minimum is
    // quadratically limited by the step, so resolve finely
    let (_, min_value) = argmin_of("3", "120001", true);
    assert!(min_value >= 0.0 && min_value <= 1e-10, "grid minimum {min_value:e}");
    // high-temperature phase: minimum at the origin
    let (r0, _) = argmin_of("1", "2001", false);
    assert_eq!(r0, 0.0);
}

#[test]
fn critical_density_closed_form_values_and_total_mass() {
    let dir = tempfile::tempdir().unwrap();
    // (spin_dim, t_max): tails below 1e-8 at the cutoff; the grid is
    // fine enough that the sqrt singularity of N=3 costs < 1e-6 mass
    for (n, t_max, p0) in [
        (2u32, 40.0, 0.25 / std::f64::consts::PI.sqrt()),
        (3, 60.0, 0.0),
        (4, 90.0, 0.0),
    ] {
        let out = dir.path().join(format!("density_{n}.csv"));
        let status = onspin()
            .args([
                "theory-critical-density",
                "--spin-dim",
                &n.to_string(),
                "--t-max",
                &t_max.to_string(),
                "--steps",
                "60001",
            ])
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let (header, rows) = read_csv(&out);
        assert_eq!(header, ["t", "p"]);
        let first = rows[0][1].unwrap();
        assert!(
            (first - p0).abs() <= 1e-12 * p0.max(1.0),
            "N={n}: p(0) = {first} vs {p0}"
        );
        // trapezoid mass over the emitted grid
        let h = t_max / 60000.0;
        let mut mass = 0.0;
        for pair in rows.windows(2) {
            mass += 0.5 * h * (pair[0][1].unwrap() + pair[1][1].unwrap());
        }
        assert!(
            (mass - 1.0).abs() <= 1e-6,
            "N={n}: emitted density mass {mass}"
        );
    }
}

#[test]
fn sample_free_case_energy_and_summary_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("free.json");
    let status = onspin()
        .args([
            "sample",
            "--spin-dim",
            "2",
            "--sites",
            "64",
            "--beta",
            "0",
            "--sweeps",
            "4000",
            "--burn-in",
            "200",
            "--chains",
            "2",
            "--seed",
            "5",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["columns"][2], "magnetization");
    assert_eq!(report["columns"][3], "energy");
    assert_eq!(report["per_chain"].as_array().unwrap().len(), 2);
    assert_eq!(report["failed_chains"].as_array().unwrap().len(), 0);
    let merged = &report["merged"];
    assert_eq!(merged["count"], 8000);
    // mean energy at infinite temperature is -E|S|^2/(2n^2) = -1/(2n)*n = -1/2
    let mean_e = merged["mean"][3].as_f64().unwrap();
    let var_e = merged["cov"][3][3].as_f64().unwrap();
    let ess_e = merged["ess"][3].as_f64().unwrap();
    let se = (var_e / ess_e).sqrt();
    assert!(
        (mean_e + 0.5).abs() <= 3.0 * se,
        "mean energy {mean_e} vs -1/2 (se {se})"
    );
    // histogram counts cover every record
    let counts: u64 = merged["histogram"]["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(counts, 8000);
    let manifest = read_manifest(&out);
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["complete"], true);
}

#[test]
fn verify_specfun_quick_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("specfun.json");
    let status = onspin()
        .args(["verify", "--suite", "specfun", "--level", "quick"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let reports = reports.as_array().unwrap();
    assert!(reports.len() >= 18);
    for r in reports {
        assert_eq!(r["pass"], true, "failed check: {}", r["name"]);
        assert!(r["rel_discrepancy"].as_f64().unwrap() < 1e-11);
    }
}

#[test]
fn exit_codes_follow_the_pass_fail_usage_convention() {
    let dir = tempfile::tempdir().unwrap();
    // unknown suite: usage error from argument parsing
    let status = onspin()
        .args(["verify", "--suite", "bogus", "--out"])
        .arg(dir.path().join("x.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // invalid model parameters
    let status = onspin()
        .args([
            "sample", "--spin-dim", "2", "--sites", "8", "--beta", "-1", "--sweeps", "100",
        ])
        .arg("--out")
        .arg(dir.path().join("y.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // empty beta range
    let status = onspin()
        .args([
            "theory-curve",
            "--spin-dim",
            "2",
            "--beta-min",
            "3",
            "--beta-max",
            "1",
            "--steps",
            "10",
        ])
        .arg("--out")
        .arg(dir.path().join("z.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // runtime failure: unwritable output path
    let status = onspin()
        .args([
            "sample", "--spin-dim", "2", "--sites", "8", "--beta", "1", "--sweeps", "100",
        ])
        .arg("--out")
        .arg(dir.path().join("no/such/dir/out.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
