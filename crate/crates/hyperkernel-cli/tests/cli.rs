use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperkernel"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hyperkernel-cli-{}-{}", std::process::id(), name));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn duals_check_defaults_pass() {
    let out = tmp_dir("duals-default");
    let status = bin()
        .args(["duals-check", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("duals.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 50);
    for row in rows {
        assert!(row.ends_with(",true"), "failing row: {}", row);
    }
    assert!(out.join("manifest.csv").exists());
}

#[test]
fn unknown_flag_exits_two() {
    let status = bin().args(["duals-check", "--bogus"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_two_and_names_it() {
    let out = tmp_dir("badkey");
    let cfg = out.join("cfg.txt");
    fs::write(&cfg, "pairs = 2\nnosuchkey = 5\n").unwrap();
    let output = bin()
        .args(["duals-check", "--samples", "2000", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("nosuchkey"), "stderr: {}", stderr);
}

#[test]
fn flags_override_config_file() {
    let out = tmp_dir("override");
    let cfg = out.join("cfg.txt");
    fs::write(&cfg, "pairs = 7\nsamples = 2000\nseed = 5\n").unwrap();
    let status = bin()
        .args(["duals-check", "--pairs", "2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("duals.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3); // header + 2 rows
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert!(manifest.contains("pairs,2"));
    assert!(manifest.contains("samples,2000"));
}

#[test]
fn reruns_are_bit_identical() {
    let out1 = tmp_dir("rerun1");
    let out2 = tmp_dir("rerun2");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["duals-check", "--pairs", "4", "--samples", "5000", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        fs::read(out1.join("duals.csv")).unwrap(),
        fs::read(out2.join("duals.csv")).unwrap()
    );
    assert_eq!(
        fs::read(out1.join("manifest.csv")).unwrap(),
        fs::read(out2.join("manifest.csv")).unwrap()
    );
}

#[test]
fn kernel_subcommand_matches_library() {
    let out = tmp_dir("kernel");
    let input = out.join("pairs.txt");
    let x = [0.5, -0.3, 1.0, 0.2];
    let z = [1.0, 0.0];
    let xp = [-0.1, 0.7, 0.4, -0.9];
    let zp = [0.6, 0.8];
    let line: Vec<String> = x
        .iter()
        .chain(&z)
        .chain(&xp)
        .chain(&zp)
        .map(|v| v.to_string())
        .collect();
    fs::write(&input, format!("# comment\n{}\n", line.join(" "))).unwrap();
    let status = bin()
        .args([
            "kernel",
            "--kind",
            "hyper-ntk",
            "--meta-depth",
            "3",
            "--primary-depth",
            "2",
            "--n0",
            "4",
            "--m0",
            "2",
            "--input",
        ])
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("kernel.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let fields: Vec<f64> = row.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    let cfg = hyperkernel::HyperKernelConfig {
        meta_depth: 3,
        primary_depth: 2,
        n0: 4,
        m0: 2,
    };
    let (h, f, g) = hyperkernel::hyper_ntk(&x, &z, &xp, &zp, cfg).unwrap();
    assert_eq!(fields, vec![h, f, g]);
}

#[test]
fn kernel_missing_input_is_runtime_error() {
    let out = tmp_dir("kernel-missing");
    let status = bin()
        .args(["kernel", "--input", "/nonexistent/pairs.txt", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn zero_threads_is_config_error() {
    let out = tmp_dir("threads");
    let status = bin()
        .args(["duals-check", "--threads", "0", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn large_lr_writes_expected_schema() {
    let out = tmp_dir("large-lr");
    let status = bin()
        .args([
            "large-lr",
            "--widths",
            "32",
            "--n-train",
            "16",
            "--n-test",
            "16",
            "--epochs",
            "2",
            "--seeds",
            "1",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("large_lr.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "width,seed,mu,outcome,final_train_loss,test_loss,diverged_step"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("32,0,"), "row: {}", row);
    assert!(row.contains(",finished,"), "row: {}", row);
}

#[test]
fn regress_synthetic_fallback_runs() {
    let out = tmp_dir("regress");
    let status = bin()
        .args([
            "regress",
            "--n-images",
            "16",
            "--image-size",
            "6",
            "--n-train",
            "10",
            "--pixels-per-image",
            "2",
            "--n-test-images",
            "2",
            "--fourier-k",
            "0",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("regress.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "kernel,mse,n_train,n_test");
    assert_eq!(csv.lines().count(), 4);
    assert!(out.join("task.csv").exists());
}
