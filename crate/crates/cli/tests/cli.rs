use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hconvex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hconvex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn witnesses(out: &Output) -> Vec<Value> {
    stdout(out)
        .lines()
        .filter(|l| l.starts_with("{\"witness\""))
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["witness"].clone())
        .collect()
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn coords(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn engel_s_fails_with_a_reproducible_witness() {
    let out = hconvex(&[
        "check-hconvex",
        "--group",
        "engel",
        "--field",
        "coord:s",
        "--samples",
        "400",
    ]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.starts_with("# command\tcheck-hconvex\n# group\tengel\n"));
    assert!(text.ends_with("verdict\tFAIL\n"));
    let w = &witnesses(&out)[0];
    assert_eq!(w["test"], "segmentwise");
    // The segment point and the chord are recomputable from the block: s is
    // the last coordinate.
    let (g, g2, lambda) = (coords(&w["g"]), coords(&w["g_prime"]), w["lambda"].as_f64().unwrap());
    let chord = (1.0 - lambda) * g[3] + lambda * g2[3];
    assert!((chord - w["chord"].as_f64().unwrap()).abs() < 1e-12);
    assert!(coords(&w["sigma"])[3] > chord + 1e-6);
}

#[test]
fn convex_fields_pass() {
    for field in ["sq_v1", "const:0"] {
        let out = hconvex(&["check-hconvex", "--field", field, "--samples", "300"]);
        assert_eq!(code(&out), 0, "{field}: {}", stdout(&out));
        assert!(witnesses(&out).is_empty());
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&hconvex(&["check-hconvex", "--field", "nope"])), 2);
    assert_eq!(code(&hconvex(&["check-hconvex"])), 2);
    assert_eq!(code(&hconvex(&["check-hconvex", "--field", "sq_v1", "--tol", "-1"])), 2);
    assert_eq!(
        code(&hconvex(&["check-hconvex", "--field", "sq_v1", "--plane-grid", "20"])),
        2
    );
    assert_eq!(code(&hconvex(&["subdiff", "1 2", "--field", "sq_v1"])), 2);
    assert_eq!(code(&hconvex(&["bogus"])), 2);
}

#[test]
fn subdiff_reports_the_analytic_candidate() {
    let out = hconvex(&[
        "subdiff",
        "0 0 0",
        "--field",
        "sq_v1",
        "--cost",
        "neg_quadratic",
        "--samples",
        "200",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("candidate\t0.0000000000000000e0 0.0000000000000000e0\n"));
    assert!(text.contains("member\ttrue\n"));
    assert!(text.contains("fenchel_gap\t"));

    let out = hconvex(&[
        "subdiff",
        "0.5,-1,2",
        "--field",
        "const:0",
        "--cost",
        "neg_quadratic",
        "--samples",
        "200",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("candidate\t5.0000000000000000e-1 -1.0000000000000000e0\n"));
}

#[test]
fn indicator_field_has_no_grid_subgradient() {
    let out = hconvex(&[
        "subdiff",
        "1 1 0",
        "--field",
        "max_xy_indicator",
        "--cost",
        "neg_quadratic",
        "--samples",
        "100",
        "--v-grid",
        "9",
    ]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("candidate_source\tgrid\n"));
    assert!(text.contains("members\t0\n"));
}

#[test]
fn explicit_cost_vector_is_tested() {
    let out = hconvex(&[
        "subdiff",
        "1 0 0",
        "--field",
        "sq_v1",
        "--cost-v",
        "5 5",
        "--samples",
        "200",
    ]);
    assert_eq!(code(&out), 1);
    let w = &witnesses(&out)[0];
    assert_eq!(w["test"], "c_subdifferential");
    let lhs = w["u_g"].as_f64().unwrap() + w["c_increment"].as_f64().unwrap() - w["u_g_prime"].as_f64().unwrap();
    assert!((lhs - w["violation"].as_f64().unwrap()).abs() < 1e-12);
}

fn convex_pairs() -> String {
    // Gradients of |xi_1|^2 at points along horizontal moves from the origin.
    let pts: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-0.5, 0.5, 0.0]];
    pts.iter()
        .map(|p| format!("{} {} {} | {} {}\n", p[0], p[1], p[2], 2.0 * p[0], 2.0 * p[1]))
        .collect()
}

#[test]
fn monotone_and_potential_commands() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "good.txt", &convex_pairs());
    let out = hconvex(&["monotone-check", &good]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    let out = hconvex(&["potential", &good, "--output", "json-lines"]);
    assert_eq!(code(&out), 0);
    let rows: Vec<Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v["table"] == "potential")
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["f"].as_f64(), Some(0.0));
    assert!(rows.iter().all(|r| r["certified"] == true));

    let single = write(&dir, "one.txt", "0.3 0.2 1 | 1 1\n");
    let out = hconvex(&["potential", &single]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out)
        .contains("2.9999999999999999e-1 2.0000000000000001e-1 1.0000000000000000e0\t0.0000000000000000e0\ttrue"));

    let bad = write(&dir, "bad.txt", "0 0 0 | 0 0\n1 0 0 | -2 0\n");
    let out = hconvex(&["monotone-check", &bad]);
    assert_eq!(code(&out), 1);
    let w = &witnesses(&out)[0];
    assert_eq!(w["indices"].as_array().unwrap().len(), 2);
    assert!(w["weight"].as_f64().unwrap() > 0.0);
    let out = hconvex(&["potential", &bad]);
    assert_eq!(code(&out), 1);
    assert_eq!(witnesses(&out)[0]["test"], "bounded_potential");

    let malformed = write(&dir, "malformed.txt", "0 0 0 | 1 1\n1 0 | 1 1\n");
    let out = hconvex(&["monotone-check", &malformed]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

fn generated(dir: &TempDir, mode: &str, atoms: &str, seed: &str) -> String {
    let out = hconvex(&[
        "generate-instance",
        "--mode",
        mode,
        "--atoms",
        atoms,
        "--seed",
        seed,
        "--cost",
        "neg_quadratic",
    ]);
    assert_eq!(code(&out), 0);
    write(dir, &format!("{mode}-{seed}.txt"), &stdout(&out))
}

#[test]
fn pushforward_instances_are_solved_and_mapped() {
    let dir = TempDir::new().unwrap();
    for seed in ["1", "2", "3"] {
        let path = generated(&dir, "pushforward", "5", seed);
        let out = hconvex(&["transport", &path, "--cost", "neg_quadratic"]);
        assert_eq!(code(&out), 0, "{}", stdout(&out));
        let text = stdout(&out);
        assert!(text.contains("oracle_agrees\ttrue\n"));
        assert!(text.contains("support_monotone\ttrue\n"));
        for i in 0..5 {
            assert!(text.contains(&format!("\n{i} -> {i}\t")), "{text}");
        }
    }
}

#[test]
fn trivial_and_infeasible_instances() {
    let dir = TempDir::new().unwrap();
    let one = write(&dir, "one.txt", "[mu]\n1 0 0 0\n[nu]\n1 0.5 0 0\n");
    let out = hconvex(&["transport", &one, "--cost", "neg_quadratic"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("0\t0\t1.0000000000000000e0\n"));

    let path = generated(&dir, "adversarial", "4", "5");
    let out = hconvex(&["transport", &path, "--cost", "neg_quadratic"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("isolated nu atoms"));

    let engel = hconvex(&["transport", &one, "--group", "engel"]);
    assert_eq!(code(&engel), 2);
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let path = generated(&dir, "random-horizontal", "6", "11");
    let args = ["transport", path.as_str(), "--cost", "neg_quadratic"];
    assert_eq!(hconvex(&args).stdout, hconvex(&args).stdout);
    let check = [
        "check-hconvex",
        "--field",
        "quartic_v1",
        "--samples",
        "500",
        "--seed",
        "9",
    ];
    let single = Command::new(env!("CARGO_BIN_EXE_hconvex"))
        .args(check)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(single.stdout, hconvex(&check).stdout);
    assert!(Path::new(&path).exists());
}
