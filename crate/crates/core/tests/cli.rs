//! End-to-end tests of the `nmlab` binary: exit codes, output formats,
//! and byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nmlab::cli::{constants, weights_io};
use nmlab::tinynet::ParamVector;

fn nmlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nmlab"))
}

fn run(args: &[&str]) -> Output {
    nmlab().args(args).output().expect("binary runs")
}

fn write_weights(dir: &Path, name: &str, p: &ParamVector) -> PathBuf {
    let path = dir.join(name);
    weights_io::save_weights(p, &path).unwrap();
    path
}

#[test]
fn verify_thm1_confirms() {
    let out = run(&["verify", "thm1"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["claim"], "thm1");
    assert_eq!(report["status"], "Confirmed");
}

#[test]
fn verify_remaining_claims() {
    for (claim, expected) in [
        ("prop1", "Confirmed"),
        ("prop2", "ConfirmedWithCorrection"),
        ("prop3", "Confirmed"),
        ("blindspot", "Confirmed"),
        ("lemma1", "Confirmed"),
    ] {
        let out = run(&["verify", claim]);
        assert_eq!(out.status.code(), Some(0), "{claim}: {}", String::from_utf8_lossy(&out.stderr));
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["status"], expected, "{claim}");
        if claim == "prop2" {
            assert!(report["correction"]["substitution"].as_str().unwrap().contains("sign"));
        }
    }
}

#[test]
fn verify_unknown_claim_is_usage_error() {
    assert_eq!(run(&["verify", "thm99"]).status.code(), Some(64));
}

#[test]
fn certify_certified_minimum_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let w = write_weights(
        dir.path(),
        "w_hat.json",
        &ParamVector::Sigmoid221(constants::sigmoid221_certified_minimum()),
    );
    let out = run(&["certify", "--weights", w.to_str().unwrap(), "--dataset", "sigmoid10"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["classification"], "LocalMinimum");
    assert_eq!(cert["eigenvalues"].as_array().unwrap().len(), 9);
}

#[test]
fn certify_comparison_point_exits_not_critical() {
    let dir = tempfile::tempdir().unwrap();
    let w = write_weights(
        dir.path(),
        "w0.json",
        &ParamVector::Sigmoid221(constants::sigmoid221_comparison_point()),
    );
    let out = run(&["certify", "--weights", w.to_str().unwrap(), "--dataset", "sigmoid10"]);
    assert_eq!(out.status.code(), Some(3));
}

/// The lower-loss single-unit point sits on a flat manifold (unit
/// rescalings leave the loss unchanged), so its Hessian has zero
/// eigenvalues: the spectral route reports Degenerate rather than
/// guessing, and the exact route certifies it.
#[test]
fn certify_flat_manifold_point_exits_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let w = write_weights(
        dir.path(),
        "cmp.json",
        &ParamVector::ReluReg(constants::relu1_comparison_minimum()),
    );
    let out = run(&["certify", "--weights", w.to_str().unwrap(), "--dataset", "d1"]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["classification"], "Degenerate");
}

/// The all-zero 2-2-1 point is a critical point of the balanced 10-point
/// task with negative curvature directions: a saddle, exit code 2.
#[test]
fn certify_zero_params_exits_saddle() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = nmlab::tinynet::Sigmoid221Params::from_flat(&[0.0; 9]).unwrap();
    let w = write_weights(dir.path(), "zeros.json", &ParamVector::Sigmoid221(zeros));
    let out = run(&["certify", "--weights", w.to_str().unwrap(), "--dataset", "sigmoid10"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["classification"], "Saddle");
}

#[test]
fn certify_malformed_weights_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"arch\": \"sigmoid221\", \"params\": {\"w00\": 1.0}}").unwrap();
    let out = run(&["certify", "--weights", path.to_str().unwrap(), "--dataset", "sigmoid10"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn certify_kink_configuration_refuses_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let w = write_weights(
        dir.path(),
        "trap.json",
        &ParamVector::ReluReg(constants::relu1_local_minimum()),
    );
    // x = 3 sits exactly on the unit's kink: the spectral route refuses
    let out = run(&["certify", "--weights", w.to_str().unwrap(), "--dataset", "d1"]);
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-smooth"));
}

#[test]
fn table1_small_run_is_deterministic_and_fractions_are_binary_for_one_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let base = [
        "table1",
        "--trials",
        "1",
        "--seed",
        "9",
        "--h-min",
        "2",
        "--h-max",
        "3",
        "--max-steps",
        "3000",
    ];
    for out_dir in [&out_a, &out_b] {
        let mut args: Vec<&str> = base.to_vec();
        args.push("--out");
        args.push(out_dir.to_str().unwrap());
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let csv_a = std::fs::read(out_a.join("table1.csv")).unwrap();
    let csv_b = std::fs::read(out_b.join("table1.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "reruns must be byte-identical");

    let text = String::from_utf8(csv_a).unwrap();
    for line in text.lines().skip(1) {
        let fraction = line.rsplit(',').next().unwrap();
        assert!(fraction == "0" || fraction == "1", "trials=1 fraction {fraction}");
    }
    assert_eq!(text.lines().count(), 1 + 2 * 8);

    // provenance sidecar records the configuration
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_a.join("config.json")).unwrap()).unwrap();
    assert_eq!(sidecar["base_seed"], 9);
    assert_eq!(sidecar["trials"], 1);
}

#[test]
fn table1_sgd_flag_adds_the_optimizer() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("t");
    let out = run(&[
        "table1",
        "--trials",
        "1",
        "--seed",
        "2",
        "--h-min",
        "2",
        "--h-max",
        "2",
        "--max-steps",
        "500",
        "--sgd",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(out_dir.join("table1.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains(",sgd,")), "no sgd rows in:\n{csv}");
}

#[test]
fn table1_unwritable_dir_exits_73() {
    let out = run(&["table1", "--trials", "1", "--out", "/proc/nope/definitely-not-writable"]);
    assert_eq!(out.status.code(), Some(73));
}

#[test]
fn table1_thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out_dir, threads) in [(&out_a, "1"), (&out_b, "4")] {
        let out = nmlab()
            .env("NMLAB_THREADS", threads)
            .args([
                "table1",
                "--trials",
                "2",
                "--seed",
                "3",
                "--h-min",
                "2",
                "--h-max",
                "2",
                "--max-steps",
                "2000",
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(out_a.join("table1.csv")).unwrap(),
        std::fs::read(out_b.join("table1.csv")).unwrap()
    );
}

#[test]
fn forge_perturbed_canonical_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let w = write_weights(
        dir.path(),
        "w_hat.json",
        &ParamVector::Sigmoid221(constants::sigmoid221_certified_minimum()),
    );
    let d = dir.path().join("start.json");
    nmlab::datasets::save_json(&constants::perturbed_sigmoid10(0, 0.05), &d).unwrap();
    let out = run(&[
        "forge",
        "--weights",
        w.to_str().unwrap(),
        "--dataset",
        d.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["converged"], true);
    assert!(result["final_gradnorm"].as_f64().unwrap() < 1e-8);
}

#[test]
fn forge_tiny_budget_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let w = write_weights(
        dir.path(),
        "w_hat.json",
        &ParamVector::Sigmoid221(constants::sigmoid221_certified_minimum()),
    );
    let d = dir.path().join("start.json");
    nmlab::datasets::save_json(&constants::perturbed_sigmoid10(1, 0.05), &d).unwrap();
    let out = run(&[
        "forge",
        "--weights",
        w.to_str().unwrap(),
        "--dataset",
        d.to_str().unwrap(),
        "--max-iters",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["converged"], false);
}

/// Forging from a random dataset almost surely lands on a saddle: the
/// fixed stream below is a known-converging instance, and the command
/// maps a converged Saddle certificate to exit code 2.
#[test]
fn forge_random_start_exits_saddle() {
    use nmlab::rng::{mix_seed, SplitMix64};

    let dir = tempfile::tempdir().unwrap();
    let w = write_weights(
        dir.path(),
        "w_hat.json",
        &ParamVector::Sigmoid221(constants::sigmoid221_certified_minimum()),
    );
    let base = nmlab::datasets::builtin(nmlab::datasets::BuiltinDataset::Sigmoid10);
    let mut rng = SplitMix64::new(mix_seed(4242, 1, 5));
    let xs: Vec<Vec<f64>> = (0..base.len())
        .map(|_| vec![rng.next_range(-5.0, 5.0), rng.next_range(-5.0, 5.0)])
        .collect();
    let d = dir.path().join("random.json");
    nmlab::datasets::save_json(&base.with_inputs(xs).unwrap(), &d).unwrap();

    let out = run(&[
        "forge",
        "--weights",
        w.to_str().unwrap(),
        "--dataset",
        d.to_str().unwrap(),
        "--max-iters",
        "30000",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["certificate"]["classification"], "Saddle");
}

#[test]
fn sample_grid_zero_weights_is_constant_half() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = nmlab::tinynet::Sigmoid221Params::from_flat(&[0.0; 9]).unwrap();
    let w = write_weights(dir.path(), "zeros.json", &ParamVector::Sigmoid221(zeros));
    let csv = dir.path().join("grid.csv");
    let out = run(&[
        "sample-grid",
        "--weights",
        w.to_str().unwrap(),
        "--bounds",
        "0,1,0,1",
        "--res",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!(row.ends_with(",0.5"), "row {row}");
    }
}

#[test]
fn sample_grid_bad_resolution_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = nmlab::tinynet::Sigmoid221Params::from_flat(&[0.0; 9]).unwrap();
    let w = write_weights(dir.path(), "zeros.json", &ParamVector::Sigmoid221(zeros));
    let out = run(&[
        "sample-grid",
        "--weights",
        w.to_str().unwrap(),
        "--res",
        "1",
        "--out",
        dir.path().join("g.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(64));
}

/// A net that converged on flattened XOR separates the classes. Stuck
/// ReLU nets concentrate the datapoints in one linear region, so their
/// grids are near-affine over the data bounding box (best plane fit
/// R^2 >= 0.99) as a majority trend; stuck sigmoid nets curve instead.
#[test]
fn sample_grid_converged_and_stuck_fxor_nets() {
    use nmlab::datasets::{builtin, BuiltinDataset};
    use nmlab::optim::{init_params, sample_grid, train, GridBounds, OptimizerConfig};
    use nmlab::tinynet::Activation;

    let d = builtin(BuiltinDataset::Fxor);

    // converged sigmoid net: all four points on the correct side of 0.5
    let cfg = OptimizerConfig::gd(0.5, 50_000);
    let converged = (0..200)
        .find_map(|seed| {
            let p0 = init_params(Activation::Sigmoid, 3, seed).unwrap();
            let (result, trained) = train(&p0, &d, &cfg, seed).unwrap();
            result.converged.then_some(trained)
        })
        .expect("some seed converges");
    for point in d.points() {
        let m = converged.forward(&point.x).unwrap();
        assert_eq!(m > 0.5, point.y == 1.0);
    }

    // stuck relu nets: majority of grids near-affine
    let cfg = OptimizerConfig::gd(0.05, 50_000);
    let mut r2s = Vec::new();
    for seed in 0..400 {
        if r2s.len() >= 20 {
            break;
        }
        let p0 = init_params(Activation::Relu, 2, seed).unwrap();
        let (result, trained) = train(&p0, &d, &cfg, seed).unwrap();
        if result.converged || result.diverged {
            continue;
        }
        let grid =
            sample_grid(&ParamVector::TwoH1(trained), GridBounds::unit(), 21).unwrap();
        let res = grid.resolution;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut zs = Vec::new();
        for iy in 0..res {
            for ix in 0..res {
                xs.push(ix as f64 / (res - 1) as f64);
                ys.push(iy as f64 / (res - 1) as f64);
                zs.push(grid.values[iy * res + ix]);
            }
        }
        r2s.push(plane_fit_r2(&xs, &ys, &zs));
    }
    let near_affine = r2s.iter().filter(|&&r| r >= 0.99).count();
    assert!(
        2 * near_affine > r2s.len(),
        "only {near_affine}/{} stuck relu nets near-affine: {r2s:?}",
        r2s.len()
    );
}

/// Least-squares plane fit z ~ a x + b y + c, returning R^2.
fn plane_fit_r2(xs: &[f64], ys: &[f64], zs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (mx, my, mz) = (mean(xs), mean(ys), mean(zs));
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    let mut sxz = 0.0;
    let mut syz = 0.0;
    let mut szz = 0.0;
    for i in 0..xs.len() {
        let (dx, dy, dz) = (xs[i] - mx, ys[i] - my, zs[i] - mz);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
        szz += dz * dz;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() < 1e-300 || szz == 0.0 {
        return 1.0;
    }
    let a = (sxz * syy - syz * sxy) / det;
    let b = (syz * sxx - sxz * sxy) / det;
    let explained = a * sxz + b * syz;
    explained / szz
}

#[test]
fn dataset_export_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d1.json");
    let out = run(&["dataset", "export", "--name", "d1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["dataset", "validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(nmlab::datasets::load_json(&path).unwrap().len(), 5);

    std::fs::write(&path, r#"{"task":"classification","d":1,"points":[{"x":[0.0],"y":2.0}]}"#)
        .unwrap();
    let out = run(&["dataset", "validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn certify_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let w = write_weights(
        dir.path(),
        "w_hat.json",
        &ParamVector::Sigmoid221(constants::sigmoid221_certified_minimum()),
    );
    let args = ["certify", "--weights", w.to_str().unwrap(), "--dataset", "sigmoid10"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
}
